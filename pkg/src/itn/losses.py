"""Stochastic displacement losses on homogeneous unit vectors, and the accuracy-gated switch."""

from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from src.my_util.errors import ShapeError, UsageError
from src.tensor_core import Tensor, add, as_tensor, matmul, scale, sub, sum, transpose

from .blocks import KPair
from .config import ItnConfig


class Branch(StrEnum):
    ORIG = "orig"
    DISPLACEMENT = "displacement"


@dataclass
class UnitVectorSet:
    vectors: np.ndarray  # n×d, affine part unit-norm, last column 1

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 2:
            raise ShapeError(f"unit vectors must be n×d with d >= 2, got {self.vectors.shape}")

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]


def sample_unit_vectors(d: int, n: int, seed: int | np.random.Generator) -> UnitVectorSet:
    """Isotropic directions in R^(d-1), normalized, with a homogeneous 1 appended."""
    if d not in (3, 4):
        raise ShapeError(f"unit vectors are 3- (spatial) or 4-dimensional (colour), got d={d}")
    if n < 1:
        raise UsageError(f"need at least one unit vector, got n={n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    affine = rng.standard_normal((n, d - 1))
    affine /= np.linalg.norm(affine, axis=1, keepdims=True)
    return UnitVectorSet(np.hstack([affine, np.ones((n, 1))]))


def _check_dims(a_hat: Tensor, s: UnitVectorSet) -> None:
    if a_hat.shape != (s.d, s.d):
        raise ShapeError(f"Â is {a_hat.shape} but unit vectors are {s.d}-dimensional")


def loss_hat(a_hat, s: UnitVectorSet) -> Tensor:
    """-(1/|S|) Σ ‖Âx − x‖²; zero for the identity and never positive."""
    a_hat = as_tensor(a_hat)
    _check_dims(a_hat, s)
    x = Tensor(s.vectors)
    diff = sub(matmul(x, transpose(a_hat)), x)
    return scale(sum(diff * diff), -1.0 / len(s))


def loss_k(k_i: KPair, a_hat, s: UnitVectorSet) -> Tensor:
    """(k_i0 + k_i1) · loss_hat(Â)."""
    return scale(loss_hat(a_hat, s), float(k_i[0]) + float(k_i[1]))


def gate(batch_acc: float, acc_orig: float) -> Branch:
    return Branch.ORIG if batch_acc < acc_orig else Branch.DISPLACEMENT


def select_final_loss(
    batch_acc: float,
    cfg: ItnConfig,
    loss_orig: Tensor,
    loss_color: Tensor,
    loss_spatial: Tensor,
) -> Tensor:
    """L_orig below the accuracy gate, c_theta·L_k(colour) + L_k(spatial) otherwise."""
    if cfg.acc_orig is None:
        raise UsageError("select_final_loss needs a resolved acc_orig")
    if gate(batch_acc, cfg.acc_orig) is Branch.ORIG:
        return loss_orig
    return add(scale(loss_color, cfg.c_theta), loss_spatial)


def displacement(a_hat, s: UnitVectorSet) -> float:
    """Mean ‖Âx − x‖ (not squared) over the set."""
    a = as_tensor(a_hat).data
    if a.shape != (s.d, s.d):
        raise ShapeError(f"Â is {a.shape} but unit vectors are {s.d}-dimensional")
    return float(np.mean(np.linalg.norm(s.vectors @ a.T - s.vectors, axis=1)))
