import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from binsynth.raster import BinaryMask, RasterImage, quantize
from binsynth.thresholding import (AdaptiveParams, ThresholdParameterError, adaptive_threshold, despeckle,
                                   extract_ground_truth, local_mean, otsu)

from oracles import otsu_bruteforce, window_means


def gray(arr_u8):
    return RasterImage.from_uint8(np.asarray(arr_u8, dtype=np.uint8))


class TestOtsu:
    def test_two_levels_smallest_argmax(self):
        t, mask = otsu(gray([[10, 10], [200, 200]]))
        assert t == 10
        assert mask.data.tolist() == [[True, True], [False, False]]

    def test_constant_image(self):
        t, mask = otsu(gray(np.full((4, 4), 77)))
        assert t == 0 and mask.count() == 0

    @given(arrays(np.uint8, st.tuples(st.integers(1, 8), st.integers(1, 8))))
    @settings(max_examples=80, deadline=None)
    def test_matches_bruteforce(self, arr):
        t, mask = otsu(gray(arr))
        t_ref, mask_ref = otsu_bruteforce(arr)
        assert t == t_ref
        np.testing.assert_array_equal(mask.data, mask_ref)

    def test_bimodal(self):
        rng = np.random.default_rng(5)
        arr = np.where(rng.random((20, 20)) < 0.3, rng.integers(20, 60, (20, 20)), rng.integers(180, 230, (20, 20)))
        t, mask = otsu(gray(arr))
        t_ref, mask_ref = otsu_bruteforce(arr)
        assert t == t_ref
        np.testing.assert_array_equal(mask.data, mask_ref)

    def test_rejects_color(self):
        with pytest.raises(ThresholdParameterError):
            otsu(RasterImage(np.zeros((2, 2, 3))))


class TestAdaptiveParams:
    @pytest.mark.parametrize("window", [1, 2, 4, 30])
    def test_bad_window(self, window):
        with pytest.raises(ThresholdParameterError):
            AdaptiveParams(window=window)

    def test_bad_offset_and_method(self):
        with pytest.raises(ThresholdParameterError):
            AdaptiveParams(offset=1.5)
        with pytest.raises(ThresholdParameterError):
            AdaptiveParams(method="median")

    def test_sigma(self):
        assert AdaptiveParams(window=15, method="gaussian").sigma == 2.5


class TestAdaptive:
    def test_constant_all_background(self):
        mask = adaptive_threshold(RasterImage(np.full((9, 9), 0.4)), AdaptiveParams(3, 0.02))
        assert mask.count() == 0

    def test_single_dark_pixel(self):
        data = np.ones((5, 5))
        data[2, 2] = 0.0
        mask = adaptive_threshold(RasterImage(data), AdaptiveParams(3, 0.1))
        expected = np.zeros((5, 5), bool)
        expected[2, 2] = True
        np.testing.assert_array_equal(mask.data, expected)
        ref = data < window_means(data, 3) - 0.1
        np.testing.assert_array_equal(mask.data, ref)

    def test_window_too_large(self):
        with pytest.raises(ThresholdParameterError):
            adaptive_threshold(RasterImage(np.zeros((3, 5))), AdaptiveParams(9, 0.0))
        adaptive_threshold(RasterImage(np.zeros((3, 5))), AdaptiveParams(7, 0.0))

    @given(arrays(np.uint8, st.tuples(st.integers(2, 10), st.integers(2, 10))),
           st.sampled_from([3, 5]), st.floats(-0.2, 0.2))
    @settings(max_examples=60, deadline=None)
    def test_box_mean_matches_naive_oracle(self, arr, window, offset):
        img = gray(arr)
        ref_mean = window_means(img.data, window)
        np.testing.assert_allclose(local_mean(img.data, AdaptiveParams(window, 0.0)), ref_mean, atol=1e-12)
        mask = adaptive_threshold(img, AdaptiveParams(window, offset))
        thresh = ref_mean - offset
        decisive = np.abs(img.data - thresh) > 1e-12
        np.testing.assert_array_equal(mask.data[decisive], (img.data < thresh)[decisive])

    def test_gaussian_matches_explicit_kernel(self):
        rng = np.random.default_rng(9)
        data = rng.random((12, 10))
        window = 5
        sigma = window / 6
        x = np.arange(window) - 2
        k1 = np.exp(-0.5 * (x / sigma) ** 2)
        k2 = np.outer(k1, k1) / k1.sum() ** 2
        padded = np.pad(data, 2, mode="edge")
        ref = np.array([[np.sum(padded[y:y + 5, c:c + 5] * k2) for c in range(10)] for y in range(12)])
        np.testing.assert_allclose(local_mean(data, AdaptiveParams(5, 0.0, "gaussian")), ref, atol=1e-12)

    @given(arrays(np.uint8, (8, 8)), st.floats(-0.3, 0.3), st.floats(0.0, 0.3))
    @settings(max_examples=60, deadline=None)
    def test_offset_monotone(self, arr, offset, extra):
        img = gray(arr)
        lo = adaptive_threshold(img, AdaptiveParams(3, offset, "mean"))
        hi = adaptive_threshold(img, AdaptiveParams(3, min(offset + extra, 1.0), "mean"))
        assert not (hi.data & ~lo.data).any()

    @given(arrays(np.uint8, (7, 9)), st.sampled_from(["mean", "gaussian"]))
    @settings(max_examples=60, deadline=None)
    def test_inversion_swaps_roles(self, arr, method):
        img = gray(arr)
        inv = RasterImage(1.0 - img.data)
        p = AdaptiveParams(5, 0.0, method)
        mean = local_mean(img.data, p)
        off_mean = np.abs(img.data - mean) > 1e-9
        a = adaptive_threshold(img, p).data
        b = adaptive_threshold(inv, p).data
        np.testing.assert_array_equal(a[off_mean], ~b[off_mean])


class TestGroundTruth:
    def test_white_page_empty(self):
        assert extract_ground_truth(RasterImage(np.ones((40, 40)))).count() == 0

    def test_despeckle_clears_isolated(self):
        m = np.zeros((5, 5), bool)
        m[2, 2] = True
        m[0, 0] = m[0, 1] = True
        out = despeckle(BinaryMask(m)).data
        assert not out[2, 2] and out[0, 0] and out[0, 1]

    def test_isolated_dark_pixel_removed(self):
        data = np.ones((20, 20))
        data[10, 10] = 0.0
        img = RasterImage(data)
        assert extract_ground_truth(img, AdaptiveParams(3, 0.1), clean=False).count() == 1
        assert extract_ground_truth(img, AdaptiveParams(3, 0.1)).count() == 0

    def test_strokes_recovered(self):
        data = np.full((60, 80), 0.95)
        data[20:23, 10:70] = 0.15   # horizontal stroke
        data[10:50, 40:43] = 0.2    # vertical stroke
        truth = data < 0.5
        mask = extract_ground_truth(RasterImage(data))
        assert (mask.data == truth).mean() > 0.99
        assert mask.data[truth].mean() > 0.95

    def test_color_input(self):
        data = np.full((30, 30, 3), 0.9)
        data[14:16, 5:25] = 0.1
        assert extract_ground_truth(RasterImage(data)).data[14:16, 5:25].all()
