"""Bilinear sampling core shared by the sweep warps and the differentiable transformer.

Pixel (x, y) sits at integer coordinates; x indexes columns and y rows. Neighbours that fall
outside the raster read as 0.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class Corner:
    index: np.ndarray  # flat row-major index, clipped into the raster
    valid: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    sx: float  # d wx / dx
    sy: float  # d wy / dy

    @property
    def weight(self) -> np.ndarray:
        return self.wx * self.wy * self.valid


def bilinear_corners(xs: np.ndarray, ys: np.ndarray, height: int, width: int) -> list[Corner]:
    # non-finite positions (overflowed magnitudes) read as a point outside the raster
    finite = np.isfinite(xs) & np.isfinite(ys)
    xs = np.where(finite, xs, -2.0)
    ys = np.where(finite, ys, -2.0)
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    corners = []
    for dy, wy, sy in ((0, 1.0 - fy, -1.0), (1, fy, 1.0)):
        for dx, wx, sx in ((0, 1.0 - fx, -1.0), (1, fx, 1.0)):
            cx = x0 + dx
            cy = y0 + dy
            valid = (cx >= 0) & (cx < width) & (cy >= 0) & (cy < height)
            index = (np.clip(cy, 0, height - 1) * width + np.clip(cx, 0, width - 1)).astype(np.int64)
            corners.append(Corner(index, valid, wx, wy, sx, sy))
    return corners


def bilinear_sample_grid(planes: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample every leading plane of `planes` (…×H×W) at the points (xs, ys); returns …×P."""
    height, width = planes.shape[-2:]
    flat = planes.reshape(*planes.shape[:-2], height * width)
    out = np.zeros(flat.shape[:-1] + np.shape(xs), dtype=np.float64)
    for corner in bilinear_corners(np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64), height, width):
        out += flat[..., corner.index] * corner.weight
    return out


def bilinear_sample(img, x: float, y: float, channel: int) -> float:
    """Value of `img` (an Image) at a continuous position; 0 outside the raster."""
    plane = img.pixels[:, :, channel]
    return float(bilinear_sample_grid(plane, np.array([x]), np.array([y]))[0])
