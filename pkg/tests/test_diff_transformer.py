import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.diff_transformer import (
    AffineMap,
    MapKind,
    affine_grid,
    extend_square,
    identity_matrix,
    normalized_shift_to_pixels,
    warp_color,
    warp_spatial,
)
from src.my_util.errors import DomainError, ShapeError
from src.tensor_core import Tensor
from src.tensor_core import sum as tsum
from src.transforms import Image, TransformKind, apply_spatial
from src.verification import check_gradient


def smooth_image(side: int = 16) -> np.ndarray:
    ys, xs = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    base = np.sin(2 * np.pi * xs / 32.0) * np.cos(2 * np.pi * ys / 32.0)
    return np.stack([0.5 + 0.2 * base, 0.5 - 0.2 * base, 0.4 + 0.1 * base])


class TestAffineMap:
    def test_spatial_identity_extends_to_eye(self):
        assert_array_equal(extend_square(AffineMap.identity(MapKind.SPATIAL)).data, np.eye(3))

    def test_zero_color_map(self):
        expected = np.zeros((4, 4))
        expected[3, 3] = 1.0
        assert_array_equal(extend_square(AffineMap(MapKind.COLOR, np.zeros((3, 4)))).data, expected)

    def test_homogeneous_component_preserved(self, rng):
        a_hat = extend_square(AffineMap(MapKind.SPATIAL, rng.normal(size=(2, 3)))).data
        assert a_hat @ np.array([0.3, -1.2, 1.0]) @ np.array([0.0, 0.0, 1.0]) == 1.0

    def test_wrong_shape(self):
        with pytest.raises(ShapeError):
            AffineMap(MapKind.SPATIAL, np.zeros((3, 4)))

    def test_non_finite(self):
        m = identity_matrix(MapKind.COLOR)
        m[0, 0] = np.inf
        with pytest.raises(DomainError):
            AffineMap(MapKind.COLOR, m)


class TestWarpSpatial:
    def test_identity(self, rng):
        img = rng.uniform(size=(3, 5, 7))
        assert_allclose(warp_spatial(Tensor(img), AffineMap.identity(MapKind.SPATIAL)).data, img, atol=1e-9)

    def test_batched_identity(self, rng):
        img = rng.uniform(size=(2, 3, 4, 4))
        assert warp_spatial(Tensor(img), np.eye(2, 3)).shape == (2, 3, 4, 4)

    def test_grid_corners(self):
        grid = affine_grid(Tensor(np.eye(2, 3)), 3, 5).data
        assert_array_equal(grid[0], [-1.0, -1.0])
        assert_array_equal(grid[-1], [1.0, 1.0])

    def test_shift_matches_pixel_translation(self, rng):
        pixels = rng.integers(0, 256, size=(4, 4, 3)).astype(np.float64)
        theta = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.0]])
        warped = Image.from_chw(warp_spatial(Tensor(Image(pixels).to_chw()), theta).data)
        # the sampling grid moves right by 0.75 px, so the image moves left by the same amount
        v = -normalized_shift_to_pixels(0.5, 4) / 4
        assert_allclose(warped.pixels, apply_spatial(TransformKind.TRANSLATE_X, Image(pixels), v).pixels, atol=1e-6)

    def test_shift_conversion(self):
        assert normalized_shift_to_pixels(0.5, 4) == 0.75
        assert normalized_shift_to_pixels(2.0, 9) == 8.0

    def test_inverse_map_restores_interior(self):
        img = smooth_image()
        c, s = math.cos(math.radians(10)), math.sin(math.radians(10))
        forward = np.array([[c, -s, 0.05], [s, c, -0.03]])
        inverse = np.linalg.inv(np.vstack([forward, [0.0, 0.0, 1.0]]))[:2]
        restored = warp_spatial(warp_spatial(Tensor(img), forward), inverse).data
        assert np.abs(restored - img)[:, 4:12, 4:12].mean() <= 2 / 255

    def test_out_of_domain_is_zero(self, rng):
        out = warp_spatial(Tensor(rng.uniform(0.5, 1.0, size=(3, 4, 4))), np.array([[1.0, 0.0, 5.0], [0.0, 1.0, 0.0]]))
        assert_array_equal(out.data, np.zeros((3, 4, 4)))

    def test_needs_spatial_map(self, rng):
        with pytest.raises(ShapeError):
            warp_spatial(Tensor(rng.uniform(size=(3, 4, 4))), AffineMap.identity(MapKind.COLOR))

    def test_gradients(self, rng):
        r = Tensor(rng.normal(size=(3, 5, 5)))
        theta = np.array([[0.93, 0.06, 0.21], [-0.04, 1.02, 0.33]])
        reports = check_gradient("warp_spatial", lambda img, t: tsum(r * warp_spatial(img, t)), [rng.uniform(size=(3, 5, 5)), theta])
        assert all(rep.passed for rep in reports), reports


class TestWarpColor:
    def test_identity_is_bit_exact(self, rng):
        img = rng.uniform(size=(3, 4, 5))
        assert_array_equal(warp_color(Tensor(img), AffineMap.identity(MapKind.COLOR)).data, img)

    def test_half_scale(self):
        img = np.array([1.0, 0.5, 0.0]).reshape(3, 1, 1)
        phi = np.hstack([0.5 * np.eye(3), np.zeros((3, 1))])
        assert_allclose(warp_color(Tensor(img), phi).data.ravel(), [0.5, 0.25, 0.0])

    def test_bias_shift(self, rng):
        img = rng.uniform(size=(3, 3, 3))
        phi = np.hstack([np.eye(3), np.full((3, 1), 0.1)])
        assert_allclose(warp_color(Tensor(img), phi).data, img + 0.1, atol=1e-15)

    def test_no_clamping(self):
        img = np.ones((3, 2, 2))
        out = warp_color(Tensor(img), np.hstack([2.0 * np.eye(3), np.zeros((3, 1))])).data
        assert_array_equal(out, np.full((3, 2, 2), 2.0))

    def test_needs_three_channels(self):
        with pytest.raises(ShapeError):
            warp_color(Tensor(np.ones((1, 2, 2, 2))), AffineMap.identity(MapKind.COLOR))

    def test_gradients(self, rng):
        r = Tensor(rng.normal(size=(2, 3, 3, 3)))
        phi = np.eye(3, 4) + rng.normal(0.0, 0.1, size=(3, 4))
        reports = check_gradient("warp_color", lambda img, p: tsum(r * warp_color(img, p)), [rng.uniform(size=(2, 3, 3, 3)), phi])
        assert all(rep.passed for rep in reports), reports
