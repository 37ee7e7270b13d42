"""Non-affine sweep transforms: Gaussian blur and additive Gaussian noise."""

import math

import numpy as np

from src.my_util.errors import DomainError
from src.tensor_core import Tensor, conv2d
from src.transforms.image import Image

_EXPLICIT_TAIL = 1_000_000


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Square kernel of side 2*ceil(3σ)+1, normalized to sum 1."""
    if not sigma > 0:
        raise DomainError(f"gaussian kernel needs sigma > 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    dy, dx = np.meshgrid(offsets, offsets, indexing="ij")
    kernel = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _edge_mass(sigma: float, start: int, stop: float, unit: float) -> float:
    """Sum of exp(-d²/2σ²) for integer d in [start, stop], divided by `unit`."""
    if stop - start <= _EXPLICIT_TAIL:
        d = np.arange(start, int(stop) + 1, dtype=np.float64)
        return float(np.exp(-(d * d) / (2.0 * sigma * sigma)).sum()) / unit
    # trapezoid-corrected integral; the error is O(1/σ²) of the total
    scale = sigma * math.sqrt(2.0)
    upper = stop / scale if math.isfinite(stop) else 3.0 / math.sqrt(2.0)
    lower = start / scale
    integral = math.sqrt(math.pi) / 2.0 * (math.erf(upper) - math.erf(lower)) * (scale / unit)
    return integral + 0.5 * (math.exp(-lower * lower) + math.exp(-upper * upper)) / unit


def _axis_weights(sigma: float, extent: int) -> np.ndarray:
    """Un-normalized 1-D Gaussian weights for offsets -r..r, r = min(ceil(3σ), extent-1).

    Past offset extent-1 clamp-to-edge always reads the border pixel, so that mass is folded
    onto ±r and the result matches the full 2·ceil(3σ)+1 kernel.
    """
    reach = 3.0 * sigma
    full = math.ceil(reach) if math.isfinite(reach) else math.inf
    r = int(min(full, extent - 1))
    if r == 0:
        return np.ones(1)
    unit = max(1.0, sigma)
    offsets = np.arange(-r, r + 1, dtype=np.float64)
    weights = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma)) / unit
    if full > r:
        weights[0] = weights[-1] = _edge_mass(sigma, r, full, unit)
    return weights


def apply_blur(img: Image, sigma: float) -> Image:
    """Per-channel correlation with the Gaussian kernel, clamp-to-edge padding."""
    if sigma < 0:
        raise DomainError(f"blur sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return img.copy()
    wy, wx = _axis_weights(sigma, img.height), _axis_weights(sigma, img.width)
    kernel = np.outer(wy, wx)
    kernel /= kernel.sum()
    ry, rx = len(wy) // 2, len(wx) // 2
    padded = np.pad(img.pixels, ((ry, ry), (rx, rx), (0, 0)), mode="edge")
    # channels ride on the batch axis so one kernel serves all three
    planes = Tensor(np.transpose(padded, (2, 0, 1))[:, None])
    out = conv2d(planes, Tensor(kernel[None, None]), stride=1, padding=0)
    return Image.clamped(np.transpose(out.data[:, 0], (1, 2, 0)))


def gaussian_noise(shape: tuple[int, ...], sigma: float, seed: int) -> np.ndarray:
    """255*z with z ~ N(0, σ) i.i.d. per pixel and channel."""
    rng = np.random.default_rng(seed)
    return 255.0 * rng.normal(0.0, sigma, size=shape)


def apply_noise(img: Image, sigma: float, seed: int) -> Image:
    if sigma < 0:
        raise DomainError(f"noise sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return img.copy()
    with np.errstate(over="ignore"):
        return Image.clamped(img.pixels + gaussian_noise(img.pixels.shape, sigma, seed))
