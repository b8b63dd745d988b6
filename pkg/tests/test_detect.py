"""Change detection: luma, blur, thresholding, regions, spill rate, SSIM."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spillscope.core import EditBox, ProbeConfig
from spillscope.detect import (
    change_map,
    extract_regions,
    gaussian_blur,
    gaussian_kernel,
    spill_rate,
    ssim_map,
    ssim_outside_box,
    to_grayscale,
)

from _oracles import (
    blur_oracle_dense,
    luma_oracle,
    region_features_oracle,
    ssim_oracle,
)


def _rgb(h, w, seed=0):
    return np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8)


class TestGrayscale:
    def test_frozen_values(self):
        img = np.array([[[255, 0, 0], [0, 255, 0]],
                        [[0, 0, 255], [255, 255, 255]]], dtype=np.uint8)
        g = to_grayscale(img)
        assert g[0, 0] == pytest.approx(76.245, abs=1e-9)
        assert g[0, 1] == pytest.approx(149.685, abs=1e-9)
        assert g[1, 0] == pytest.approx(29.07, abs=1e-9)
        assert g[1, 1] == pytest.approx(255.0, abs=1e-9)

    def test_matches_oracle(self):
        img = _rgb(7, 5, seed=3)
        assert np.allclose(to_grayscale(img), luma_oracle(img), atol=1e-12)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            to_grayscale(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(ValueError):
            to_grayscale(np.zeros((4, 4, 4), dtype=np.uint8))


class TestBlur:
    def test_kernel_shape_and_norm(self):
        k = gaussian_kernel(2.0)
        assert len(k) == 13  # radius ceil(3 * 2) = 6
        assert k.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.array_equal(k, k[::-1])
        assert len(gaussian_kernel(1.1)) == 9  # radius ceil(3.3) = 4

    def test_kernel_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            gaussian_kernel(0.0)

    def test_constant_image_unchanged(self):
        g = np.full((20, 30), 42.5)
        assert np.allclose(gaussian_blur(g, 2.0), 42.5, atol=1e-12)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("sigma", [0.8, 1.5, 2.0])
    def test_matches_dense_oracle(self, seed, sigma):
        g = np.random.default_rng(seed).uniform(0, 255, (30, 41))
        assert np.allclose(gaussian_blur(g, sigma),
                           blur_oracle_dense(g, sigma), atol=1e-9)

    def test_border_is_mirrored(self):
        # a one-pixel-wide image column blurred along rows: symmetric
        # padding must reproduce the interior average near the edge
        g = np.zeros((12, 12))
        g[:, 0] = 100.0
        out = gaussian_blur(g, 2.0)
        # edge column keeps more of its value than interior leakage alone
        assert out[6, 0] > out[6, 1] > out[6, 2]


class TestChangeMap:
    def test_exact_threshold_is_not_changed(self):
        # uniform pair with luma difference exactly tau: strict comparison
        a = np.full((32, 32, 3), 100, dtype=np.uint8)
        b = np.full((32, 32, 3), 115, dtype=np.uint8)
        changed = change_map(a, b, EditBox(4, 4, 8, 8), ProbeConfig())
        assert not changed.any()

    def test_just_above_threshold_is_changed(self):
        a = np.full((32, 32, 3), 100, dtype=np.uint8)
        b = np.full((32, 32, 3), 116, dtype=np.uint8)
        box = EditBox(4, 4, 8, 8)
        changed = change_map(a, b, box, ProbeConfig())
        assert changed.sum() == 32 * 32 - 16
        assert not changed[box.slices()].any()

    def test_identical_pair(self):
        a = _rgb(24, 24, seed=5)
        changed = change_map(a, a.copy(), EditBox(0, 0, 4, 4), ProbeConfig())
        assert not changed.any()

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="differ"):
            change_map(_rgb(8, 8), _rgb(8, 9), EditBox(0, 0, 2, 2),
                       ProbeConfig())

    def test_box_must_fit(self):
        with pytest.raises(ValueError):
            change_map(_rgb(16, 16), _rgb(16, 16), EditBox(0, 0, 20, 4),
                       ProbeConfig())


class TestSpillRate:
    def test_hand_counted(self):
        changed = np.zeros((10, 10), dtype=bool)
        box = EditBox(2, 2, 4, 4)
        changed[0, 0] = changed[0, 1] = changed[9, 9] = True
        changed[5, 2:6] = True  # 4 more
        assert spill_rate(changed, box) == 7 / 96

    def test_box_covering_everything(self):
        changed = np.zeros((8, 8), dtype=bool)
        assert spill_rate(changed, EditBox(0, 0, 8, 8)) == 0.0

    def test_counts_subminimal_regions(self):
        # spill rate is pixel-level: a single changed pixel counts even
        # though no region survives the area filter
        changed = np.zeros((10, 10), dtype=bool)
        changed[9, 9] = True
        box = EditBox(0, 0, 5, 5)
        assert spill_rate(changed, box) == 1 / 75
        assert extract_regions(changed, box, ProbeConfig()) == []


class TestExtractRegions:
    def test_hand_built_mask(self):
        mask = np.zeros((12, 14), dtype=bool)
        mask[1:4, 1:5] = True        # area 12, bbox (1,1,5,4)
        mask[6:8, 8:11] = True       # area 6, bbox (8,6,11,8)
        mask[10, 0] = True           # area 1, filtered out
        box = EditBox(12, 10, 14, 12)
        config = ProbeConfig(min_area=2)
        regions = extract_regions(mask, box, config)
        assert [r.area for r in regions] == [12, 6]
        assert regions[0].bbox == (1, 1, 5, 4)
        assert regions[0].centroid == (2.5, 2.0)
        assert regions[1].bbox == (8, 6, 11, 8)
        cx, cy = 13.0, 11.0
        assert regions[0].d_pixels == pytest.approx(
            math.hypot(2.5 - cx, 2.0 - cy), abs=1e-12)
        assert regions[0].d_norm == pytest.approx(
            regions[0].d_pixels / math.hypot(2, 2), abs=1e-12)

    def test_diagonal_pixels_are_one_region(self):
        mask = np.zeros((6, 6), dtype=bool)
        mask[1, 1] = mask[2, 2] = mask[3, 3] = True
        regions = extract_regions(mask, EditBox(4, 4, 6, 6),
                                  ProbeConfig(min_area=1))
        assert len(regions) == 1
        assert regions[0].area == 3

    def test_min_area_is_inclusive(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[0, 0:3] = True
        box = EditBox(5, 5, 7, 7)
        assert len(extract_regions(mask, box, ProbeConfig(min_area=3))) == 1
        assert len(extract_regions(mask, box, ProbeConfig(min_area=4))) == 0

    def test_ordering_ties(self):
        mask = np.zeros((12, 12), dtype=bool)
        mask[8:10, 0:2] = True   # area 4 at y=8, x=0
        mask[0:2, 6:8] = True    # area 4 at y=0, x=6
        mask[0:2, 0:2] = True    # area 4 at y=0, x=0
        mask[4:6, 4:8] = True    # area 8: biggest first
        regions = extract_regions(mask, EditBox(10, 10, 12, 12),
                                  ProbeConfig(min_area=1))
        assert [r.area for r in regions] == [8, 4, 4, 4]
        assert [r.bbox[:2] for r in regions[1:]] == [(0, 0), (6, 0), (0, 8)]

    def test_empty_mask(self):
        mask = np.zeros((8, 8), dtype=bool)
        assert extract_regions(mask, EditBox(0, 0, 2, 2), ProbeConfig()) == []

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_flood_fill_oracle(self, seed):
        rng = np.random.default_rng(seed)
        mask = rng.random((48, 64)) < 0.35
        box = EditBox(10, 10, 24, 20)
        mask[box.slices()] = False
        config = ProbeConfig(min_area=4)
        impl = extract_regions(mask, box, config)
        oracle = region_features_oracle(mask, box, config.min_area)
        assert len(impl) == len(oracle)
        for ri, ro in zip(impl, oracle):
            assert ri.area == ro["area"]
            assert ri.bbox == ro["bbox"]
            assert ri.centroid == pytest.approx(ro["centroid"], abs=1e-12)
            assert ri.d_norm == pytest.approx(ro["d_norm"], abs=1e-12)


class TestSsim:
    def test_identical_is_one(self):
        g = np.random.default_rng(1).uniform(0, 255, (20, 20))
        assert np.allclose(ssim_map(g, g.copy()), 1.0, atol=1e-12)

    def test_symmetry_is_exact(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(0, 255, (16, 18))
        b = rng.uniform(0, 255, (16, 18))
        assert np.array_equal(ssim_map(a, b), ssim_map(b, a))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_windowed_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(0, 255, (20, 24))
        b = np.clip(a + rng.normal(0, 20, a.shape), 0, 255)
        assert np.abs(ssim_map(a, b) - ssim_oracle(a, b)).max() < 1e-6

    def test_too_small_image(self):
        g = np.zeros((10, 30))
        with pytest.raises(ValueError, match="smaller"):
            ssim_map(g, g)

    def test_outside_box_masking(self):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
        box = EditBox(12, 12, 28, 28)
        assert ssim_outside_box(img, img.copy(), box) == pytest.approx(1.0, abs=1e-12)
        # an edit strictly inside the box still lowers nearby outside
        # windows, so the mean dips below 1 without any outside change
        edited = img.copy()
        edited[16:24, 16:24] = 255 - edited[16:24, 16:24]
        val = ssim_outside_box(img, edited, box)
        assert 0.8 < val < 1.0

    def test_lower_for_bigger_outside_change(self):
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
        box = EditBox(0, 0, 8, 8)
        mild = img.copy()
        mild[30:34, 30:34] = 0
        heavy = np.ascontiguousarray(255 - img)
        assert ssim_outside_box(img, heavy, box) \
            < ssim_outside_box(img, mild, box) \
            < ssim_outside_box(img, img.copy(), box)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 16), sigma=st.floats(0.5, 3.0))
def test_blur_oracle_property(seed, sigma):
    g = np.random.default_rng(seed).uniform(0, 255, (18, 22))
    assert np.allclose(gaussian_blur(g, sigma), blur_oracle_dense(g, sigma),
                       atol=1e-9)
