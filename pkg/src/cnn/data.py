"""IDX (MNIST-style) and CIFAR-10 binary ingestion into 32×32 RGB datasets."""

import gzip
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.my_util.errors import DataFormatError, UsageError
from src.transforms import Image

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CIFAR_RECORD = 1 + 3 * 32 * 32
N_CLASSES = 10
TARGET_SIDE = 32

DIGIT_NAMES = [str(i) for i in range(N_CLASSES)]
CIFAR_NAMES = ["airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"]
IDX_PREFIX = {"train": "train", "test": "t10k"}
CIFAR_FILES = {"train": [f"data_batch_{i}.bin" for i in range(1, 6)], "test": ["test_batch.bin"]}


@dataclass
class Dataset:
    pixels: np.ndarray  # N×H×W×3 uint8
    labels: np.ndarray
    split: str = "train"
    class_names: list[str] = field(default_factory=lambda: list(DIGIT_NAMES))

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.pixels.ndim != 4 or self.pixels.shape[3] != 3:
            raise DataFormatError(f"dataset pixels must be N×H×W×3, got {self.pixels.shape}")
        if self.pixels.shape[0] != self.labels.shape[0]:
            raise DataFormatError(f"{self.pixels.shape[0]} images but {self.labels.shape[0]} labels")
        bad = (self.labels < 0) | (self.labels >= len(self.class_names))
        if np.any(bad):
            raise DataFormatError(f"label {self.labels[bad][0]} out of range for {len(self.class_names)} classes")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def image(self, i: int) -> Image:
        return Image(self.pixels[i].astype(np.float64))

    @property
    def images(self) -> list[Image]:
        return [self.image(i) for i in range(len(self))]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.pixels[indices], self.labels[indices], self.split, self.class_names)

    def of_class(self, class_id: int) -> "Dataset":
        return self.subset(np.flatnonzero(self.labels == class_id))

    def head(self, n: int) -> "Dataset":
        return self.subset(np.arange(min(n, len(self))))


def _read_bytes(path: Path) -> bytes:
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _find(directory: Path, stem_options: list[str]) -> Path:
    for stem in stem_options:
        for candidate in (directory / stem, directory / f"{stem}.gz"):
            if candidate.exists():
                return candidate
    raise FileNotFoundError(f"none of {stem_options} found in {directory}")


def _need(buf: bytes, end: int, what: str) -> None:
    if len(buf) < end:
        raise DataFormatError(f"truncated {what}", offset=len(buf), missing=end - len(buf))


def parse_idx_images(buf: bytes) -> np.ndarray:
    _need(buf, 16, "IDX image header")
    magic, count, rows, cols = struct.unpack(">IIII", buf[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise DataFormatError(f"bad IDX image magic 0x{magic:08x}", offset=0)
    _need(buf, 16 + count * rows * cols, "IDX image payload")
    return np.frombuffer(buf, dtype=np.uint8, count=count * rows * cols, offset=16).reshape(count, rows, cols)


def parse_idx_labels(buf: bytes, n_classes: int = N_CLASSES) -> np.ndarray:
    _need(buf, 8, "IDX label header")
    magic, count = struct.unpack(">II", buf[:8])
    if magic != IDX_LABELS_MAGIC:
        raise DataFormatError(f"bad IDX label magic 0x{magic:08x}", offset=0)
    _need(buf, 8 + count, "IDX label payload")
    labels = np.frombuffer(buf, dtype=np.uint8, count=count, offset=8).astype(np.int64)
    bad = np.flatnonzero(labels >= n_classes)
    if bad.size:
        raise DataFormatError(f"label {labels[bad[0]]} out of range for {n_classes} classes", offset=8 + int(bad[0]))
    return labels


def to_rgb32(gray: np.ndarray) -> np.ndarray:
    """N×h×w grayscale -> N×32×32×3, replicated channels, zero-padded and centred."""
    n, h, w = gray.shape
    if h > TARGET_SIDE or w > TARGET_SIDE:
        raise DataFormatError(f"images of {h}×{w} exceed {TARGET_SIDE}×{TARGET_SIDE}")
    top, left = (TARGET_SIDE - h) // 2, (TARGET_SIDE - w) // 2
    out = np.zeros((n, TARGET_SIDE, TARGET_SIDE, 3), dtype=np.uint8)
    out[:, top : top + h, left : left + w, :] = gray[..., None]
    return out


def parse_cifar(buf: bytes, n_classes: int = N_CLASSES) -> tuple[np.ndarray, np.ndarray]:
    """Records of 1 label byte + 1024 R + 1024 G + 1024 B (channel-planar, row-major)."""
    if len(buf) % CIFAR_RECORD:
        whole = len(buf) // CIFAR_RECORD
        raise DataFormatError(
            "truncated CIFAR-10 record", offset=whole * CIFAR_RECORD, missing=(whole + 1) * CIFAR_RECORD - len(buf)
        )
    records = np.frombuffer(buf, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    labels = records[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels >= n_classes)
    if bad.size:
        raise DataFormatError(f"label {labels[bad[0]]} out of range for {n_classes} classes", offset=int(bad[0]) * CIFAR_RECORD)
    pixels = records[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    return np.ascontiguousarray(pixels), labels


def _cifar_names(directory: Path) -> list[str]:
    meta = directory / "batches.meta.txt"
    if meta.exists():
        names = [line.strip() for line in meta.read_text().splitlines() if line.strip()]
        if len(names) == N_CLASSES:
            return names
    return list(CIFAR_NAMES)


def load_dataset(path: str | Path, format: str, split: str = "train") -> Dataset:
    path = Path(path)
    if split not in IDX_PREFIX:
        raise UsageError(f"split must be train or test, got {split!r}")
    match format.lower():
        case "idx":
            prefix = IDX_PREFIX[split]
            images_file = _find(path, [f"{prefix}-images-idx3-ubyte", f"{prefix}-images.idx3-ubyte"])
            labels_file = _find(path, [f"{prefix}-labels-idx1-ubyte", f"{prefix}-labels.idx1-ubyte"])
            gray = parse_idx_images(_read_bytes(images_file))
            labels = parse_idx_labels(_read_bytes(labels_file))
            if gray.shape[0] != labels.shape[0]:
                raise DataFormatError(f"{images_file.name} has {gray.shape[0]} images but {labels_file.name} has {labels.shape[0]} labels")
            dataset = Dataset(to_rgb32(gray), labels, split, list(DIGIT_NAMES))
        case "cifar10" | "cifar10-binary" | "cifar":
            files = [path] if path.is_file() else [path / name for name in CIFAR_FILES[split] if (path / name).exists()]
            if not files:
                raise FileNotFoundError(f"no CIFAR-10 {split} batches in {path}")
            parts = [parse_cifar(_read_bytes(f)) for f in files]
            names = _cifar_names(path if path.is_dir() else path.parent)
            dataset = Dataset(
                np.concatenate([p for p, _ in parts]), np.concatenate([l for _, l in parts]), split, names
            )
        case _:
            raise UsageError(f"unknown dataset format {format!r}; use idx or cifar10")
    logger.info("loaded %d %s images from %s (%s)", len(dataset), split, path, format)
    return dataset
