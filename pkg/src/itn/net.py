"""Forward pass of the invariant transformer net and post-training measurements."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from src.cnn import Classifier, Dataset, normalize_pixels, softmax_batches
from src.diff_transformer import AffineMap, extend_square, warp_color, warp_spatial
from src.tensor_core import Tensor, softmax

from .blocks import ControlVector, ItnBlocks
from .losses import displacement, sample_unit_vectors


@dataclass
class ItnOutput:
    logits: Tensor
    color: AffineMap
    spatial: AffineMap
    image: Tensor  # what the classifier saw


def itn_forward(img: Tensor, k: ControlVector, blocks: ItnBlocks, classifier: Classifier) -> ItnOutput:
    """Colour map, then spatial map, then the frozen classifier."""
    color, spatial = blocks.maps(k)
    x = warp_spatial(warp_color(img, color), spatial)
    return ItnOutput(classifier.logits(x), color, spatial, x)


@dataclass
class SpatialSummary:
    """A_theta read as rotation, per-axis scale and shift of the sampling grid.

    Scales below 1 sample a smaller source region, so the output zooms in.
    """

    rotation_deg: float
    scale_x: float
    scale_y: float
    shift_x: float
    shift_y: float

    def to_dict(self) -> dict:
        return asdict(self)


def describe_spatial(theta) -> SpatialSummary:
    a = theta.matrix.data if isinstance(theta, AffineMap) else np.asarray(getattr(theta, "data", theta))
    m = a[:, :2]
    return SpatialSummary(
        rotation_deg=math.degrees(math.atan2(m[1, 0], m[0, 0])),
        scale_x=float(np.linalg.norm(m[:, 0])),
        scale_y=float(np.linalg.norm(m[:, 1])),
        shift_x=float(a[0, 2]),
        shift_y=float(a[1, 2]),
    )


@dataclass
class TransformedEvaluation:
    k: ControlVector
    accuracy: float
    agreement: float  # fraction of predictions equal to the clean prediction
    displacement_color: float
    displacement_spatial: float
    spatial: SpatialSummary

    def to_dict(self) -> dict:
        return {
            "k1": list(self.k.k1),
            "k2": list(self.k.k2),
            "accuracy": self.accuracy,
            "agreement": self.agreement,
            "displacement_color": self.displacement_color,
            "displacement_spatial": self.displacement_spatial,
            "spatial": self.spatial.to_dict(),
        }


def transformed_softmax(blocks: ItnBlocks, classifier: Classifier, inputs: np.ndarray, k: ControlVector, batch: int) -> np.ndarray:
    rows = [
        softmax(itn_forward(Tensor(inputs[start : start + batch]), k, blocks, classifier).logits).data
        for start in range(0, inputs.shape[0], batch)
    ]
    return np.concatenate(rows, axis=0)


def evaluate_transformed(
    blocks: ItnBlocks,
    classifier: Classifier,
    data: Dataset,
    k: ControlVector,
    batch: int = 64,
    s_size: int = 1000,
    seed: int = 0,
) -> TransformedEvaluation:
    """Accuracy of the frozen model on images transformed with F(k), plus displacement of both maps."""
    inputs = normalize_pixels(data.pixels)
    predictions = transformed_softmax(blocks, classifier, inputs, k, batch).argmax(axis=1)
    clean = softmax_batches(classifier, inputs, batch).argmax(axis=1)
    color, spatial = blocks.maps(k)
    return TransformedEvaluation(
        k=k,
        accuracy=float(np.mean(predictions == data.labels)),
        agreement=float(np.mean(predictions == clean)),
        displacement_color=displacement(extend_square(color), sample_unit_vectors(4, s_size, seed)),
        displacement_spatial=displacement(extend_square(spatial), sample_unit_vectors(3, s_size, seed)),
        spatial=describe_spatial(spatial),
    )


def summary_grid(values: list[float]) -> list[ControlVector]:
    """Every (k1, k2) with both components of each pair drawn from `values`; {0, 0.5, 1} gives 81 points."""
    pairs = [(a, b) for a in values for b in values]
    return [ControlVector(k1, k2) for k1 in pairs for k2 in pairs]


def summarize_itn(
    blocks: ItnBlocks, classifier: Classifier, data: Dataset, k_grid: list[ControlVector], batch: int = 64, seed: int = 0
) -> list[dict]:
    return [evaluate_transformed(blocks, classifier, data, k, batch=batch, seed=seed).to_dict() for k in k_grid]
