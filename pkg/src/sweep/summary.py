from dataclasses import dataclass

import numpy as np

from src.my_util.errors import UsageError

from .sweep import SweepResult


@dataclass
class TopkCurves:
    grid: list[float]
    classes: list[int]  # ranked, highest peak first
    names: list[str]
    values: np.ndarray  # len(grid) × k
    others: np.ndarray  # len(grid), or empty when every class has its own curve

    def curve(self, name: str) -> np.ndarray:
        if name == "others":
            return self.others
        return self.values[:, self.names.index(name)]


def summarize_topk(result: SweepResult, k: int = 3) -> TopkCurves:
    """Curves for the k classes with the highest mean softmax anywhere on the grid.

    The rest collapse into "others", the per-magnitude maximum of their mean softmax.
    Ties in peak value go to the lower class index.
    """
    n_classes = result.mean_softmax.shape[1]
    if k < 1 or k > n_classes:
        raise UsageError(f"top-k needs 1 <= k <= {n_classes}, got {k}")
    peaks = result.mean_softmax.max(axis=0)
    ranked = np.argsort(-peaks, kind="stable")
    top = [int(c) for c in ranked[:k]]
    rest = sorted(int(c) for c in ranked[k:])
    others = result.mean_softmax[:, rest].max(axis=1) if rest else np.zeros(0)
    return TopkCurves(
        grid=list(result.grid),
        classes=top,
        names=[result.class_names[c] for c in top],
        values=result.mean_softmax[:, top],
        others=others,
    )
