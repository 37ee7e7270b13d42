"""Differentiable colour and spatial warps on N×3×H×W (or 3×H×W) tensors.

Spatial coordinates are normalized to [-1, 1] across each axis: x_n = -1 + 2x/(W-1), so the
first and last pixel centres sit at -1 and 1. A normalized shift t moves the image by
t*(W-1)/2 pixels. Colours are in [0, 1] and are never clamped here.
"""

import numpy as np

from src.my_util.errors import ShapeError
from src.tensor_core import Tensor, matmul, transpose
from src.tensor_core.tensor import make_result
from src.transforms.sampling import bilinear_corners

from .affine import AffineMap, MapKind


def normalized_shift_to_pixels(t: float, extent: int) -> float:
    return t * (extent - 1) / 2.0


def _normalized_axis(extent: int) -> np.ndarray:
    if extent == 1:
        return np.zeros(1)
    return -1.0 + 2.0 * np.arange(extent, dtype=np.float64) / (extent - 1)


def normalized_base_grid(height: int, width: int) -> np.ndarray:
    """Rows (x_n, y_n, 1) for every output pixel in row-major order."""
    yn, xn = np.meshgrid(_normalized_axis(height), _normalized_axis(width), indexing="ij")
    return np.stack([xn.ravel(), yn.ravel(), np.ones(height * width)], axis=1)


def affine_grid(theta: Tensor, height: int, width: int) -> Tensor:
    """Normalized source coordinates A_theta·(x_n, y_n, 1)ᵀ, one row per output pixel."""
    return matmul(Tensor(normalized_base_grid(height, width)), transpose(theta))


def _to_batch(img: Tensor) -> tuple[np.ndarray, bool]:
    if img.ndim == 3:
        return img.data[None], False
    if img.ndim == 4:
        return img.data, True
    raise ShapeError(f"expected 3×H×W or N×3×H×W image tensor, got {img.shape}")


def grid_sample(img: Tensor, grid: Tensor) -> Tensor:
    """Bilinear lookup of `img` at normalized positions `grid` (H*W × 2), zero outside."""
    x, batched = _to_batch(img)
    n, c, h, w = x.shape
    if grid.shape != (h * w, 2):
        raise ShapeError(f"grid_sample: grid {grid.shape} does not match image {img.shape}")
    half_w, half_h = (w - 1) / 2.0, (h - 1) / 2.0
    px = (grid.data[:, 0] + 1.0) * half_w
    py = (grid.data[:, 1] + 1.0) * half_h
    corners = bilinear_corners(px, py, h, w)
    flat = x.reshape(n, c, h * w)
    values = [flat[..., corner.index] for corner in corners]
    out = np.zeros((n, c, h * w))
    for corner, vals in zip(corners, values):
        out += vals * corner.weight

    def backward(g):
        g = (g if batched else g[None]).reshape(n, c, h * w)
        grad_flat = np.zeros((h * w, n * c))
        d_px = np.zeros(h * w)
        d_py = np.zeros(h * w)
        for corner, vals in zip(corners, values):
            np.add.at(grad_flat, corner.index, (g * corner.weight).reshape(n * c, h * w).T)
            weighted = (g * vals).sum(axis=(0, 1)) * corner.valid
            d_px += weighted * corner.sx * corner.wy
            d_py += weighted * corner.wx * corner.sy
        grad_img = grad_flat.T.reshape(n, c, h, w)
        grad_grid = np.stack([d_px * half_w, d_py * half_h], axis=1)
        return (grad_img if batched else grad_img[0], grad_grid)

    out = out.reshape(n, c, h, w)
    return make_result("grid_sample", out if batched else out[0], (img, grid), backward)


def warp_spatial(img: Tensor, theta: AffineMap | Tensor) -> Tensor:
    theta = theta if isinstance(theta, AffineMap) else AffineMap(MapKind.SPATIAL, theta)
    if theta.kind is not MapKind.SPATIAL:
        raise ShapeError("warp_spatial needs a spatial map")
    h, w = img.shape[-2:]
    return grid_sample(img, affine_grid(theta.matrix, h, w))


def warp_color(img: Tensor, phi: AffineMap | Tensor) -> Tensor:
    """(r', g', b')ᵀ = phi·(r, g, b)ᵀ + phi_B at every pixel."""
    phi = phi if isinstance(phi, AffineMap) else AffineMap(MapKind.COLOR, phi)
    if phi.kind is not MapKind.COLOR:
        raise ShapeError("warp_color needs a colour map")
    x, batched = _to_batch(img)
    n, c, h, w = x.shape
    if c != 3:
        raise ShapeError(f"warp_color needs 3 channels, got {c}")
    flat = x.reshape(n, 3, h * w)
    linear = phi.matrix.data[:, :3]
    bias = phi.matrix.data[:, 3]
    out = np.einsum("ij,njp->nip", linear, flat) + bias[None, :, None]

    def backward(g):
        g = (g if batched else g[None]).reshape(n, 3, h * w)
        grad_x = np.einsum("ij,nip->njp", linear, g).reshape(n, 3, h, w)
        grad_linear = np.einsum("nip,njp->ij", g, flat)
        grad_bias = g.sum(axis=(0, 2))
        grad_phi = np.concatenate([grad_linear, grad_bias[:, None]], axis=1)
        return (grad_x if batched else grad_x[0], grad_phi)

    out = out.reshape(n, 3, h, w)
    return make_result("warp_color", out if batched else out[0], (img, phi.matrix), backward)
