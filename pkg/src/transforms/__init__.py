"""The sweep transforms F(I, v) on byte-domain images."""

from .color import LUMA_WEIGHTS, apply_color, grayscale
from .filters import apply_blur, apply_noise, gaussian_kernel, gaussian_noise
from .image import Image
from .kinds import TransformKind
from .sampling import bilinear_corners, bilinear_sample, bilinear_sample_grid
from .spatial import apply_spatial, cos_sin_degrees, source_coordinates


def apply_transform(kind: TransformKind, img: Image, v: float, seed: int = 0) -> Image:
    """Single entry point used by the sweep; `seed` only matters for noise."""
    if kind.is_spatial:
        return apply_spatial(kind, img, v)
    if kind.is_color:
        return apply_color(kind, img, v)
    if kind is TransformKind.GAUSSIAN_BLUR:
        return apply_blur(img, v)
    return apply_noise(img, v, seed)


__all__ = [
    "LUMA_WEIGHTS",
    "Image",
    "TransformKind",
    "apply_blur",
    "apply_color",
    "apply_noise",
    "apply_spatial",
    "apply_transform",
    "bilinear_corners",
    "bilinear_sample",
    "bilinear_sample_grid",
    "cos_sin_degrees",
    "gaussian_kernel",
    "gaussian_noise",
    "grayscale",
    "source_coordinates",
]
