from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from src.my_util.errors import DomainError, ShapeError
from src.tensor_core import Tensor, as_tensor, concat


class MapKind(StrEnum):
    SPATIAL = "spatial"  # A_theta, 2×3
    COLOR = "color"  # A_{phi_B, phi}, 3×4, last column is the brightness bias phi_B


MATRIX_SHAPES = {MapKind.SPATIAL: (2, 3), MapKind.COLOR: (3, 4)}


def identity_matrix(kind: MapKind) -> np.ndarray:
    rows, cols = MATRIX_SHAPES[kind]
    return np.eye(rows, cols)


@dataclass
class AffineMap:
    kind: MapKind
    matrix: Tensor

    def __post_init__(self):
        self.kind = MapKind(self.kind)
        self.matrix = as_tensor(self.matrix)
        if self.matrix.shape != MATRIX_SHAPES[self.kind]:
            raise ShapeError(f"{self.kind} map must be {MATRIX_SHAPES[self.kind]}, got {self.matrix.shape}")
        if not np.all(np.isfinite(self.matrix.data)):
            raise DomainError(f"{self.kind} map has non-finite entries")

    @classmethod
    def identity(cls, kind: MapKind) -> "AffineMap":
        return cls(kind, Tensor(identity_matrix(kind)))


def homogeneous_row(cols: int) -> np.ndarray:
    row = np.zeros((1, cols))
    row[0, -1] = 1.0
    return row


def extend_square(a: AffineMap) -> Tensor:
    """Â: the rows of A with [0,…,0,1] appended; differentiable in A."""
    return concat([a.matrix, Tensor(homogeneous_row(a.matrix.shape[1]))], axis=0)
