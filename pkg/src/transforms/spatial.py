"""Inverse-mapped coordinate warps: each output pixel reads the source position F maps it from."""

import math

import numpy as np

from src.my_util.errors import UsageError
from src.transforms.image import Image
from src.transforms.kinds import TransformKind
from src.transforms.sampling import bilinear_sample_grid

_QUARTER_TURNS = {0: (1.0, 0.0), 90: (0.0, 1.0), 180: (-1.0, 0.0), 270: (0.0, -1.0)}


def cos_sin_degrees(angle: float) -> tuple[float, float]:
    """cos/sin of an angle in degrees, exact for multiples of 90."""
    reduced = angle % 360.0
    if reduced in _QUARTER_TURNS:
        return _QUARTER_TURNS[reduced]
    rad = math.radians(angle)
    return math.cos(rad), math.sin(rad)


def pixel_grid(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    return xs, ys


def source_coordinates(kind: TransformKind, v: float, height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Source positions for the single-step kinds (zoom and translate_xy are compositions)."""
    xs, ys = pixel_grid(height, width)
    match kind:
        case TransformKind.TRANSLATE_X:
            return xs - v * width, ys
        case TransformKind.TRANSLATE_Y:
            return xs, ys - v * height
        case TransformKind.ROTATE:
            # rot((x,y), -v) about the centre of the pixel grid
            cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
            c, s = cos_sin_degrees(-v)
            dx, dy = xs - cx, ys - cy
            return cx + (c * dx - s * dy), cy + (s * dx + c * dy)
        case TransformKind.SCALE_X:
            return v * xs - (v - 1.0) * width / 2.0, ys
        case TransformKind.SCALE_Y:
            return xs, v * ys - (v - 1.0) * height / 2.0
    raise UsageError(f"{kind} has no direct coordinate map")


def _warp(img: Image, kind: TransformKind, v: float) -> Image:
    with np.errstate(over="ignore", invalid="ignore"):
        xs, ys = source_coordinates(kind, v, img.height, img.width)
    planes = np.transpose(img.pixels, (2, 0, 1))
    warped = bilinear_sample_grid(planes, xs, ys)
    return Image.clamped(np.transpose(warped, (1, 2, 0)))


def apply_spatial(kind: TransformKind, img: Image, v: float) -> Image:
    if not kind.is_spatial:
        raise UsageError(f"{kind} is not a spatial transform")
    if kind is TransformKind.ZOOM:
        return _warp(_warp(img, TransformKind.SCALE_X, v), TransformKind.SCALE_Y, v)
    if kind is TransformKind.TRANSLATE_XY:
        return _warp(_warp(img, TransformKind.TRANSLATE_X, v), TransformKind.TRANSLATE_Y, v)
    return _warp(img, kind, v)
