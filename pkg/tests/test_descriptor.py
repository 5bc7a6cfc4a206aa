import math

import numpy as np
import pytest

from vidgeo.descriptor import (
    Heatmap,
    as_image,
    heatmap_shape,
    l2_distance,
    normalize,
    occlusion_heatmap,
)
from vidgeo.errors import DegenerateInputError, InvalidArgumentError


class TestL2Distance:
    def test_identity(self):
        v = np.array([1.0, 2.0, 3.0])
        assert l2_distance(v, v) == 0.0

    def test_unit_axes(self):
        assert l2_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(
            math.sqrt(2), abs=1e-15
        )

    def test_against_summation_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rng.standard_normal(64)
            b = rng.standard_normal(64)
            # independent elementwise accumulation
            expected = math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))
            assert l2_distance(a, b) == pytest.approx(expected, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            l2_distance(np.zeros(3), np.zeros(4))


class TestNormalize:
    def test_three_four_five(self):
        np.testing.assert_allclose(normalize(np.array([3.0, 4.0])), [0.6, 0.8], atol=1e-15)

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            v = rng.standard_normal(16)
            once = normalize(v)
            np.testing.assert_allclose(normalize(once), once, atol=1e-9)

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateInputError):
            normalize(np.zeros(8))

    def test_dot_product_identity(self):
        """d(a,b)^2 == 2 - 2 <a,b> for unit vectors, enabling dot-product retrieval."""
        rng = np.random.default_rng(2)
        for _ in range(100):
            a = normalize(rng.standard_normal(32))
            b = normalize(rng.standard_normal(32))
            assert l2_distance(a, b) ** 2 == pytest.approx(2 - 2 * float(a @ b), abs=1e-6)


def _mean_left_half(image: np.ndarray) -> np.ndarray:
    """Toy descriptor: mean color of the left image half, blind to the right."""
    img = as_image(image)
    half = img[:, : img.shape[1] // 2, :]
    return half.reshape(-1, 3).mean(axis=0)


class TestOcclusionHeatmap:
    def test_cell_count_formula(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            h = int(rng.integers(4, 40))
            w = int(rng.integers(4, 40))
            patch = int(rng.integers(1, min(h, w) + 1))
            stride = int(rng.integers(1, 8))
            img = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            hm = occlusion_heatmap(img, _mean_left_half(img), _mean_left_half, patch, stride)
            assert hm.values.shape == heatmap_shape(h, w, patch, stride)
            assert hm.values.shape == ((h - patch) // stride + 1, (w - patch) // stride + 1)

    def test_values_in_unit_interval(self):
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        hm = occlusion_heatmap(img, _mean_left_half(img), _mean_left_half, 4, 4)
        assert hm.values.min() >= 0.0 and hm.values.max() <= 1.0

    def test_whole_image_patch_degenerates_to_zero(self):
        img = np.full((8, 8, 3), 128, dtype=np.uint8)
        hm = occlusion_heatmap(img, _mean_left_half(img), _mean_left_half, 8, 8)
        assert hm.values.shape == (1, 1)
        assert hm.values[0, 0] == 0.0

    def test_untouched_region_gets_zero(self):
        """Occluding the right half cannot move a left-half-only descriptor."""
        rng = np.random.default_rng(5)
        img = rng.integers(1, 256, size=(8, 16, 3), dtype=np.uint8)
        hm = occlusion_heatmap(img, _mean_left_half(img), _mean_left_half, 4, 4)
        # columns 2 and 3 of the heatmap occlude x >= 8: fully in the right half
        assert np.all(hm.values[:, 2:] == 0.0)

    def test_argmax_matches_exhaustive_evaluation(self):
        rng = np.random.default_rng(6)
        img = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)

        def f(im):
            return as_image(im).astype(np.float64).reshape(-1)

        ref = f(img)  # unoccluded distance 0; any occlusion only increases it
        patch, stride = 2, 2
        hm = occlusion_heatmap(img, ref, f, patch, stride)
        raw = np.empty_like(hm.values)
        for i in range(raw.shape[0]):
            for j in range(raw.shape[1]):
                occ = img.copy()
                occ[i * stride : i * stride + patch, j * stride : j * stride + patch] = 0
                raw[i, j] = np.linalg.norm(f(occ) - ref)
        assert np.unravel_index(hm.values.argmax(), hm.values.shape) == np.unravel_index(
            raw.argmax(), raw.shape
        )

    def test_invariant_under_constant_distance_shift(self):
        """Min-max normalization cancels any constant added to all distances."""
        rng = np.random.default_rng(7)
        img = rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8)

        def g(im):
            return np.array([as_image(im).astype(np.float64).mean(), 0.0])

        def g_shifted(im):
            return g(im) + np.array([1000.0, 0.0])

        ref = np.array([-1.0, 0.0])  # below every mean, so distance = mean + 1 (+1000)
        a = occlusion_heatmap(img, ref, g, 3, 3)
        b = occlusion_heatmap(img, ref, g_shifted, 3, 3)
        np.testing.assert_allclose(a.values, b.values, atol=1e-9)

    def test_bad_patch_rejected(self):
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        with pytest.raises(InvalidArgumentError):
            occlusion_heatmap(img, np.zeros(3), _mean_left_half, 0, 1)
        with pytest.raises(InvalidArgumentError):
            occlusion_heatmap(img, np.zeros(3), _mean_left_half, 9, 1)
