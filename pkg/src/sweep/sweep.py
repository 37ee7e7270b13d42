"""Transformation-magnitude sweeps against a frozen model."""

import logging
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from src.cnn import Dataset, ModelWeights, ToyCnn, eval_batch_size, normalize_pixels, softmax_batches
from src.my_util.errors import UsageError
from src.transforms import Image, TransformKind, apply_transform

logger = logging.getLogger(__name__)


@dataclass
class SweepResult:
    kind: TransformKind
    grid: list[float]
    class_id: int | None  # None for a mixed-class accuracy sweep
    mean_softmax: np.ndarray  # len(grid) × n_classes
    mean_accuracy: np.ndarray
    n_images: int
    seed: int = 0
    class_names: list[str] = field(default_factory=list)
    first_flip: list[float | None] = field(default_factory=list)

    def __post_init__(self):
        self.grid = [float(v) for v in self.grid]
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise UsageError(f"sweep grid must be strictly increasing: {self.grid}")
        self.mean_softmax = np.asarray(self.mean_softmax, dtype=np.float64)
        self.mean_accuracy = np.asarray(self.mean_accuracy, dtype=np.float64)
        if not self.class_names:
            self.class_names = [str(c) for c in range(self.mean_softmax.shape[1])]

    @property
    def identity_index(self) -> int:
        return self.grid.index(self.kind.identity)


def validate_grid(grid, kind: TransformKind) -> list[float]:
    grid = [float(v) for v in grid]
    if not grid:
        raise UsageError("sweep grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError(f"sweep grid must be strictly increasing: {grid}")
    if kind.identity not in grid:
        raise UsageError(f"{kind} grid must contain its identity magnitude {kind.identity}")
    return grid


def outward_order(grid: list[float], identity: float) -> list[int]:
    """Grid indices ordered by distance from the identity magnitude (positive side first on ties)."""
    i0 = grid.index(identity)
    others = [j for j in range(len(grid)) if j != i0]
    return sorted(others, key=lambda j: (abs(grid[j] - identity), grid[j] < identity))


def split_two_sided(grid: list[float], identity: float) -> list[tuple[str, list[float]]]:
    """A grid straddling the identity becomes two sweeps running outward from it."""
    below = [v for v in grid if v <= identity]
    above = [v for v in grid if v >= identity]
    if len(below) > 1 and len(above) > 1:
        return [("neg", below), ("pos", above)]
    return [("", grid)]


def transform_pixels(pixels: np.ndarray, kind: TransformKind, v: float, seed: int) -> np.ndarray:
    """Apply F(·, v) to every image; image i draws its noise from seed + i."""
    if v == kind.identity:
        return pixels
    return np.stack([apply_transform(kind, Image(p), v, seed + i).pixels for i, p in enumerate(pixels)])


def _grid_point_softmax(task) -> np.ndarray:
    weights, pixels, kind, v, seed, batch = task
    transformed = transform_pixels(pixels, kind, v, seed)
    return softmax_batches(ToyCnn(weights), normalize_pixels(transformed), batch)


def _first_flips(probs: np.ndarray, grid: list[float], identity: float) -> list[float | None]:
    predictions = probs.argmax(axis=2)  # grid × images
    clean = predictions[grid.index(identity)]
    flips: list[float | None] = []
    order = outward_order(grid, identity)
    for i in range(predictions.shape[1]):
        flips.append(next((grid[j] for j in order if predictions[j, i] != clean[i]), None))
    return flips


def _sweep(weights, data, kind, grid, seed, class_id, workers, batch) -> SweepResult:
    if len(data) == 0:
        raise UsageError("sweep needs at least one image")
    grid = validate_grid(grid, kind)
    pixels = data.pixels.astype(np.float64)
    tasks = [(weights, pixels, kind, v, seed, batch or eval_batch_size()) for v in grid]
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            per_point = pool.map(_grid_point_softmax, tasks)
    else:
        per_point = [_grid_point_softmax(t) for t in tasks]
    probs = np.stack(per_point)  # grid × images × classes
    accuracy = (probs.argmax(axis=2) == data.labels[None, :]).mean(axis=1)
    logger.info(
        "%s sweep over %d images, %d magnitudes: accuracy %.3f at identity, %.3f at %g",
        kind,
        len(data),
        len(grid),
        accuracy[grid.index(kind.identity)],
        accuracy[-1],
        grid[-1],
    )
    return SweepResult(
        kind=kind,
        grid=grid,
        class_id=class_id,
        mean_softmax=probs.mean(axis=1),
        mean_accuracy=accuracy,
        n_images=len(data),
        seed=seed,
        class_names=list(data.class_names),
        first_flip=_first_flips(probs, grid, kind.identity),
    )


def run_sweep(
    weights: ModelWeights,
    images: Dataset,
    kind: TransformKind,
    grid,
    seed: int = 0,
    workers: int = 1,
    batch: int | None = None,
) -> SweepResult:
    """Per-class sweep: every image must carry the same label."""
    classes = np.unique(images.labels)
    if classes.size > 1:
        raise UsageError(f"run_sweep needs images of one class, got classes {classes.tolist()}")
    class_id = int(classes[0]) if classes.size else None
    return _sweep(weights, images, kind, grid, seed, class_id, workers, batch)


def run_accuracy_sweep(
    weights: ModelWeights,
    data: Dataset,
    kind: TransformKind,
    grid,
    seed: int = 0,
    workers: int = 1,
    batch: int | None = None,
) -> SweepResult:
    """Mixed-class sweep: average accuracy over a set of test images of various classes."""
    return _sweep(weights, data, kind, grid, seed, None, workers, batch)


def extract_threshold(result: SweepResult, tau: float = 0.5) -> float | None:
    """First magnitude, scanning away from the identity, whose accuracy drops below tau × clean accuracy."""
    if not 0 < tau <= 1:
        raise UsageError(f"tau must lie in (0, 1], got {tau}")
    clean = result.mean_accuracy[result.identity_index]
    for j in outward_order(result.grid, result.kind.identity):
        if result.mean_accuracy[j] < tau * clean:
            return result.grid[j]
    return None
