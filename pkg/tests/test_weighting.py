"""Gray dilation, mask construction, and weighted loss application."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from heatmapreg import (
    DomainError,
    LandmarkSet,
    LossParams,
    ShapeError,
    WeightMask,
    apply_weighted_loss,
    baseline_weight_map,
    batch_loss,
    build_mask,
    gray_dilate_3x3,
    render_heatmap,
)


def brute_force_dilate(grid):
    h, w = grid.shape
    out = np.empty_like(grid)
    for i in range(h):
        for j in range(w):
            out[i, j] = grid[max(i - 1, 0) : i + 2, max(j - 1, 0) : j + 2].max()
    return out


# ---------------------------------------------------------------------------
# dilation
# ---------------------------------------------------------------------------

def test_dilate_zeros_stay_zero():
    assert not gray_dilate_3x3(np.zeros((1, 8, 8))).any()


def test_dilate_single_pixel_becomes_block():
    grid = np.zeros((1, 9, 9))
    grid[0, 4, 4] = 1.0
    out = gray_dilate_3x3(grid)
    assert (out[0, 3:6, 3:6] == 1.0).all()
    assert out[0].sum() == 9.0


def test_dilate_matches_brute_force_on_rendered_gaussian():
    stack = render_heatmap(LandmarkSet(np.array([[13.4, 9.7]])), (24, 24))
    out = gray_dilate_3x3(stack)
    assert_allclose(out[0], brute_force_dilate(stack.channels[0]), rtol=0, atol=0)


def test_dilate_matches_brute_force_on_random_grids():
    rng = np.random.default_rng(5)
    for _ in range(20):
        grid = rng.uniform(0, 1, (6, 6))
        assert_allclose(gray_dilate_3x3(grid)[0], brute_force_dilate(grid))


def test_dilate_clips_window_at_corners():
    grid = np.zeros((1, 4, 4))
    grid[0, 0, 0] = 0.7
    out = gray_dilate_3x3(grid)
    assert out[0, 0, 0] == 0.7
    assert out[0, 1, 1] == 0.7
    assert out[0, 2, 2] == 0.0


# ---------------------------------------------------------------------------
# mask construction
# ---------------------------------------------------------------------------

def test_mask_of_zero_stack_is_empty():
    assert not build_mask(np.zeros((2, 8, 8))).mask.any()


def test_mask_sandwich_around_threshold_support():
    stack = render_heatmap(LandmarkSet(np.array([[16.0, 16.0]])), (32, 32))
    grid = stack.channels[0]
    mask = build_mask(stack).mask[0]
    above = grid >= 0.2
    above_dilated = brute_force_dilate(above.astype(float)) > 0
    assert (mask & above).sum() == above.sum()          # contains the support
    assert mask.sum() > above.sum()                     # strictly larger
    assert (mask & ~above_dilated).sum() == 0           # inside its dilation


def test_mask_support_count_matches_brute_force():
    stack = render_heatmap(LandmarkSet(np.array([[16.0, 16.0]])), (32, 32))
    expected = int((brute_force_dilate(stack.channels[0]) >= 0.2).sum())
    assert int(build_mask(stack).mask.sum()) == expected
    # sigma=1 peak-normalized support: 3x3 block over 0.2, dilated to 5x5
    assert expected == 25


def test_mask_contains_all_foreground_pixels():
    rng = np.random.default_rng(9)
    pts = rng.uniform(5, 26, (4, 2))
    stack = render_heatmap(LandmarkSet(pts), (32, 32))
    mask = build_mask(stack).mask
    assert bool(mask[stack.channels > 0].all())


def test_weight_mask_validation():
    with pytest.raises(DomainError):
        WeightMask(np.ones((1, 2, 2), dtype=bool), weight=0.0)


# ---------------------------------------------------------------------------
# weighted application
# ---------------------------------------------------------------------------

def test_empty_mask_multiplier_is_identity():
    rng = np.random.default_rng(2)
    loss = rng.uniform(0, 1, (2, 5, 5))
    mask = WeightMask(np.zeros((2, 5, 5), dtype=bool))
    weighted, mean = apply_weighted_loss(loss, mask)
    assert_allclose(weighted, loss)
    assert_allclose(mean, loss.mean())


def test_full_mask_multiplies_by_w_plus_one():
    loss = np.ones((1, 3, 3))
    mask = WeightMask(np.ones((1, 3, 3), dtype=bool), weight=10.0)
    weighted, mean = apply_weighted_loss(loss, mask)
    assert_allclose(weighted, 11.0)
    assert_allclose(mean, 11.0)


def test_weighted_loss_matches_elementwise_oracle():
    rng = np.random.default_rng(3)
    loss = rng.uniform(0, 2, (3, 4, 4))
    mask_arr = rng.uniform(0, 1, (3, 4, 4)) > 0.6
    weighted, mean = apply_weighted_loss(loss, WeightMask(mask_arr, weight=10.0))
    total = 0.0
    for c in range(3):
        for i in range(4):
            for j in range(4):
                expected = loss[c, i, j] * (10.0 * mask_arr[c, i, j] + 1.0)
                assert_allclose(weighted[c, i, j], expected, rtol=1e-15)
                total += expected
    assert_allclose(mean, total / loss.size, rtol=1e-14)


def test_weighted_loss_is_linear_in_the_loss_grid():
    rng = np.random.default_rng(4)
    a = rng.uniform(0, 1, (2, 4, 4))
    b = rng.uniform(0, 1, (2, 4, 4))
    mask = WeightMask(rng.uniform(0, 1, (2, 4, 4)) > 0.5)
    wa, _ = apply_weighted_loss(a, mask)
    wb, _ = apply_weighted_loss(b, mask)
    wab, _ = apply_weighted_loss(2.0 * a + 3.0 * b, mask)
    assert_allclose(wab, 2.0 * wa + 3.0 * wb, rtol=1e-12)


def test_weighted_loss_shape_mismatch():
    with pytest.raises(ShapeError):
        apply_weighted_loss(np.ones((1, 3, 3)), WeightMask(np.ones((1, 4, 4), dtype=bool)))


# ---------------------------------------------------------------------------
# baseline weight map
# ---------------------------------------------------------------------------

def test_baseline_pixel_values():
    gt = np.array([[[0.0, 1.0], [0.5, 0.2]]])
    out = baseline_weight_map(gt, weight=10.0)
    assert_allclose(out, [[[1.0, 11.0], [6.0, 3.0]]])


def test_baseline_matches_elementwise_oracle():
    rng = np.random.default_rng(8)
    gt = rng.uniform(0, 1, (2, 6, 6))
    out = baseline_weight_map(gt, weight=7.0)
    for c in range(2):
        for i in range(6):
            for j in range(6):
                assert_allclose(out[c, i, j], gt[c, i, j] * 7.0 + 1.0, rtol=1e-15)


def test_baseline_rejects_nonpositive_weight():
    with pytest.raises(DomainError):
        baseline_weight_map(np.zeros((1, 2, 2)), weight=-1.0)


# ---------------------------------------------------------------------------
# full pipeline against a single-pass oracle
# ---------------------------------------------------------------------------

def test_pipeline_matches_single_pass_oracle_on_random_stacks():
    rng = np.random.default_rng(42)
    params = LossParams()
    for _ in range(25):
        gt = rng.uniform(0, 1, (3, 8, 8))
        pred = rng.uniform(0, 1, (3, 8, 8))
        loss, _ = batch_loss(gt, pred, params)
        mask = build_mask(gt, weight=10.0)
        _, mean = apply_weighted_loss(loss, mask)

        total = 0.0
        for c in range(3):
            for i in range(8):
                for j in range(8):
                    dil = gt[c, max(i - 1, 0) : i + 2, max(j - 1, 0) : j + 2].max()
                    m = 1.0 if dil >= 0.2 else 0.0
                    total += loss[c, i, j] * (10.0 * m + 1.0)
        assert abs(mean - total / loss.size) < 1e-12


def test_mask_of_mask_reproduces_superset_of_support():
    rng = np.random.default_rng(13)
    gt = rng.uniform(0, 1, (1, 10, 10))
    mask = build_mask(gt).mask.astype(np.float64)
    again = build_mask(mask).mask
    assert bool(again[mask > 0].all())
