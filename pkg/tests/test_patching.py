import numpy as np
import pytest
from hypothesis import given, strategies as st

from binsynth.patching import (PatchSpec, PatchWarning, augment_aligned, augment_set, crop_aligned,
                               crop_patches, patch_offsets)
from binsynth.raster import ALL_TRANSFORMS, BinaryMask, RasterImage, apply_transform


def test_paper_stride_example():
    img = RasterImage(np.zeros((480, 960)))
    patches = crop_patches(img, PatchSpec(480, 240))
    assert [off for off, _ in patches] == [(0, 0), (240, 0), (480, 0)]
    assert all(p.shape == (480, 480) for _, p in patches)


@pytest.mark.parametrize("stride", [1, 7, 480])
def test_exact_fit_single_patch(stride):
    assert patch_offsets(480, 480, PatchSpec(480, stride)) == [(0, 0)]


def test_too_small_warns_and_returns_empty():
    with pytest.warns(PatchWarning):
        assert crop_patches(RasterImage(np.zeros((480, 479))), PatchSpec(480, 240)) == []


@given(st.integers(1, 60), st.integers(1, 60), st.integers(1, 30), st.integers(1, 30))
def test_count_formula(h, w, size, stride):
    offs = patch_offsets(h, w, PatchSpec(size, stride))
    if h < size or w < size:
        assert offs == []
    else:
        assert len(offs) == ((w - size) // stride + 1) * ((h - size) // stride + 1)
        assert offs == sorted(offs, key=lambda o: (o[1], o[0]))
        assert all(x + size <= w and y + size <= h for x, y in offs)


def test_patch_content_matches_source():
    data = np.random.default_rng(0).random((10, 12))
    for (x, y), p in crop_patches(RasterImage(data), PatchSpec(4, 3)):
        np.testing.assert_array_equal(p.data, data[y:y + 4, x:x + 4])


class TestAugment:
    def test_constant_patch(self):
        outs = augment_set(RasterImage(np.full((3, 3), 0.2)))
        assert len(outs) == 8 and all(o == outs[0] for o in outs)

    def test_asymmetric_patch_all_distinct(self):
        patch = RasterImage(np.arange(9).reshape(3, 3) / 8.0)
        outs = augment_set(patch)
        assert all(outs[i] != outs[j] for i in range(8) for j in range(i + 1, 8))

    def test_first_is_identity(self):
        patch = RasterImage(np.random.default_rng(1).random((4, 4)))
        assert augment_set(patch)[0] == patch

    def test_non_square(self):
        with pytest.raises(ValueError):
            augment_set(RasterImage(np.zeros((3, 4))))


class TestAligned:
    def test_offsets_shared(self):
        img = RasterImage(np.random.default_rng(2).random((20, 30)))
        gt = BinaryMask(np.zeros((20, 30), bool))
        spec = PatchSpec(8, 5)
        assert [o for o, _, _ in crop_aligned(img, gt, spec)] == [o for o, _ in crop_patches(img, spec)]

    def test_empty_gt(self):
        img = RasterImage(np.zeros((16, 16)))
        pairs = crop_aligned(img, BinaryMask(np.zeros((16, 16), bool)), PatchSpec(8, 8))
        assert all(g.count() == 0 for _, _, g in pairs)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            crop_aligned(RasterImage(np.zeros((4, 4))), BinaryMask(np.zeros((4, 5), bool)), PatchSpec(2, 2))

    @given(st.integers(0, 2 ** 32 - 1))
    def test_alignment_under_transforms(self, seed):
        rng = np.random.default_rng(seed)
        ink = rng.random((12, 12)) < 0.3
        img = RasterImage(np.where(ink, 0.1, 0.9))
        for _, p, g in crop_aligned(img, BinaryMask(ink), PatchSpec(6, 3)):
            for tp, tg in augment_aligned(p, g):
                np.testing.assert_array_equal(tp.data < 0.5, tg.data)
        assert len(augment_aligned(RasterImage(np.zeros((2, 2))), BinaryMask(np.zeros((2, 2), bool)))) == 8

    def test_rotation_keeps_coincidence(self):
        ink = np.zeros((5, 5), bool)
        ink[0, 1] = True
        img = RasterImage(np.where(ink, 0.0, 1.0))
        t = ALL_TRANSFORMS[1]
        assert np.array_equal(apply_transform(img, t).data == 0.0, apply_transform(BinaryMask(ink), t).data)
