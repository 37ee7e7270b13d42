"""Brute-force reference implementations.

Deliberately slow and loop-based; nothing here calls into the modules it is used to check.
"""

import math
from collections.abc import Callable

import numpy as np

from src.my_util.errors import DomainError, ShapeError
from src.tensor_core import Tensor
from src.transforms import Image


def _value(out) -> float:
    return float(out.data.reshape(-1)[0]) if isinstance(out, Tensor) else float(out)


def finite_diff_grad(f: Callable[[Tensor], object], x, h: float = 1e-3) -> Tensor:
    """Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate of x."""
    base = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    grad = np.zeros_like(base)
    for i in np.ndindex(base.shape):
        values = []
        for step in (h, -h):
            shifted = base.copy()
            shifted[i] += step
            try:
                v = _value(f(Tensor(shifted)))
            except FloatingPointError as e:
                raise DomainError(f"f is not finite at coordinate {i}: {e}") from e
            if not math.isfinite(v):
                raise DomainError(f"f is not finite at coordinate {i}")
            values.append(v)
        grad[i] = (values[0] - values[1]) / (2.0 * h)
    return Tensor(grad)


def affine_source_map(matrix, height: int, width: int) -> np.ndarray:
    """H×W×2 source (x, y) for every output pixel under a 2×3 map in pixel coordinates."""
    m = np.asarray(matrix, dtype=np.float64)
    coords = np.zeros((height, width, 2))
    for y in range(height):
        for x in range(width):
            coords[y, x, 0] = m[0, 0] * x + m[0, 1] * y + m[0, 2]
            coords[y, x, 1] = m[1, 0] * x + m[1, 1] * y + m[1, 2]
    return coords


def _lookup(pixels: np.ndarray, x: int, y: int, c: int) -> float:
    h, w = pixels.shape[:2]
    if 0 <= x < w and 0 <= y < h:
        return pixels[y, x, c]
    return 0.0


def naive_warp(img: Image | np.ndarray, coordinate_map: np.ndarray) -> Image | np.ndarray:
    """out[y, x] = bilinear lookup of img at coordinate_map[y, x], zero outside the image.

    Accepts an Image or a raw H×W×C array and returns the same kind.
    """
    pixels = img.pixels if isinstance(img, Image) else np.asarray(img, dtype=np.float64)
    h, w, channels = pixels.shape
    coordinate_map = np.asarray(coordinate_map, dtype=np.float64)
    if coordinate_map.shape != (h, w, 2):
        raise ShapeError(f"coordinate map must be {(h, w, 2)}, got {coordinate_map.shape}")
    out = np.zeros_like(pixels)
    for y in range(h):
        for x in range(w):
            sx, sy = coordinate_map[y, x]
            x0, y0 = math.floor(sx), math.floor(sy)
            fx, fy = sx - x0, sy - y0
            for c in range(channels):
                out[y, x, c] = (
                    (1 - fx) * (1 - fy) * _lookup(pixels, x0, y0, c)
                    + fx * (1 - fy) * _lookup(pixels, x0 + 1, y0, c)
                    + (1 - fx) * fy * _lookup(pixels, x0, y0 + 1, c)
                    + fx * fy * _lookup(pixels, x0 + 1, y0 + 1, c)
                )
    return Image(np.clip(out, 0.0, 255.0)) if isinstance(img, Image) else out


def naive_conv(img: Image, kernel) -> Image:
    """Per-channel correlation with clamp-to-edge borders, O(H·W·k²)."""
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ShapeError(f"kernel must be 2-D with odd extents, got {kernel.shape}")
    pixels = img.pixels
    h, w, channels = pixels.shape
    ry, rx = kernel.shape[0] // 2, kernel.shape[1] // 2
    out = np.zeros_like(pixels)
    for y in range(h):
        for x in range(w):
            for c in range(channels):
                acc = 0.0
                for dy in range(-ry, ry + 1):
                    for dx in range(-rx, rx + 1):
                        sy = min(max(y + dy, 0), h - 1)
                        sx = min(max(x + dx, 0), w - 1)
                        acc += kernel[dy + ry, dx + rx] * pixels[sy, sx, c]
                out[y, x, c] = acc
    return Image(np.clip(out, 0.0, 255.0))
