import gzip
import struct
from pathlib import Path

import numpy as np
import pytest

from src.cnn import Dataset, ModelConfig, ModelWeights


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """3×8×8 inputs, one conv layer, three classes; small enough to train in a test."""
    return ModelConfig(input_shape=(3, 8, 8), conv_channels=(4,), kernel_size=3, pool=2, n_classes=3, seed=7)


@pytest.fixture
def tiny_weights(tiny_config):
    return ModelWeights.initialize(tiny_config)


def textured_dataset(rng: np.random.Generator, labels, side: int = 8, n_classes: int = 3) -> Dataset:
    """Class c images are noise around a brightness level that rises with c."""
    labels = np.asarray(labels, dtype=np.int64)
    levels = np.linspace(40.0, 215.0, n_classes)[labels]
    noise = rng.uniform(-40.0, 40.0, size=(len(labels), side, side, 3))
    pixels = np.clip(levels[:, None, None, None] + noise, 0, 255).astype(np.uint8)
    return Dataset(pixels, labels, "train", [str(c) for c in range(n_classes)])


@pytest.fixture
def tiny_dataset(rng):
    return textured_dataset(rng, [0, 1, 2] * 6)


def idx_images_bytes(images: np.ndarray) -> bytes:
    n, rows, cols = images.shape
    return struct.pack(">IIII", 0x00000803, n, rows, cols) + images.astype(np.uint8).tobytes()


def idx_labels_bytes(labels) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", 0x00000801, len(labels)) + labels.tobytes()


@pytest.fixture
def write_idx():
    """write_idx(directory, split, images N×h×w, labels, gz=False) lays out MNIST-style files."""

    def write(directory: Path, split: str, images: np.ndarray, labels, gz: bool = False) -> None:
        prefix = {"train": "train", "test": "t10k"}[split]
        directory.mkdir(parents=True, exist_ok=True)
        for stem, payload in (
            (f"{prefix}-images-idx3-ubyte", idx_images_bytes(images)),
            (f"{prefix}-labels-idx1-ubyte", idx_labels_bytes(labels)),
        ):
            if gz:
                with gzip.open(directory / f"{stem}.gz", "wb") as f:
                    f.write(payload)
            else:
                (directory / stem).write_bytes(payload)

    return write


def digit_like(rng: np.random.Generator, labels, side: int = 8) -> np.ndarray:
    """Grayscale stand-ins for digits: a bright bar whose position encodes the label."""
    labels = np.asarray(labels)
    images = rng.integers(0, 30, size=(len(labels), side, side)).astype(np.uint8)
    for i, label in enumerate(labels):
        col = int(label) % side
        images[i, :, col] = 250
    return images


@pytest.fixture
def mnist_like_dir(tmp_path, rng, write_idx):
    """Train and test IDX files of 8×8 digits (padded to 32×32 on load), classes 0..3."""
    directory = tmp_path / "mnist"
    train_labels = np.array([0, 1, 2, 3] * 4)
    test_labels = np.array([0, 1, 2, 3, 0, 0])
    write_idx(directory, "train", digit_like(rng, train_labels), train_labels)
    write_idx(directory, "test", digit_like(rng, test_labels), test_labels)
    return directory
