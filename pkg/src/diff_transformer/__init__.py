"""Differentiable affine colour and spatial transformer."""

from .affine import MATRIX_SHAPES, AffineMap, MapKind, extend_square, homogeneous_row, identity_matrix
from .warp import (
    affine_grid,
    grid_sample,
    normalized_base_grid,
    normalized_shift_to_pixels,
    warp_color,
    warp_spatial,
)

__all__ = [
    "MATRIX_SHAPES",
    "AffineMap",
    "MapKind",
    "affine_grid",
    "extend_square",
    "grid_sample",
    "homogeneous_row",
    "identity_matrix",
    "normalized_base_grid",
    "normalized_shift_to_pixels",
    "warp_color",
    "warp_spatial",
]
