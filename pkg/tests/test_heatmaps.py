"""Rendering, quarter-pixel decoding, and pixel classification."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from heatmapreg import (
    DomainError,
    GaussianSpec,
    HeatmapStack,
    LandmarkSet,
    OutOfFrameError,
    PixelClass,
    ShapeError,
    classify_pixels,
    decode_landmarks,
    render_heatmap,
)

FRAME = (64, 64)


def render_one(x, y, frame=FRAME, **kwargs):
    return render_heatmap(LandmarkSet(np.array([[x, y]])), frame, **kwargs)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def test_interior_landmark_has_exactly_kernel_support_nonzeros():
    stack = render_one(32.0, 32.0)
    assert int((stack.channels[0] > 0).sum()) == 49
    assert stack.channels[0].max() == 1.0
    assert np.unravel_index(stack.channels[0].argmax(), FRAME) == (32, 32)


def test_foreground_fraction_is_49_over_4096():
    stack = render_one(20.0, 30.0)
    assert int((stack.channels[0] > 0).sum()) / (64 * 64) == 49 / 4096


def test_corner_landmark_clips_to_16_nonzeros():
    stack = render_one(0.0, 0.0)
    assert int((stack.channels[0] > 0).sum()) == 16
    assert stack.channels[0][0, 0] == 1.0


def test_subpixel_landmark_peaks_at_nearest_pixel():
    stack = render_one(20.3, 20.8)
    assert np.unravel_index(stack.channels[0].argmax(), FRAME) == (21, 20)
    assert stack.channels[0].max() == 1.0


def test_halfway_tie_rounds_toward_larger_index():
    stack = render_one(20.5, 20.0)
    h = stack.channels[0]
    # window is centered at x=21; both x=20 and x=21 carry the peak value
    assert h[20, 21] == 1.0
    assert int((h > 0).sum()) == 49
    assert h[20, 24] > 0 and h[20, 17] == 0


def test_out_of_frame_rejected_unless_clamped():
    with pytest.raises(OutOfFrameError):
        render_one(70.0, 10.0)
    stack = render_one(70.0, 10.0, clamp=True)
    assert np.unravel_index(stack.channels[0].argmax(), FRAME) == (10, 63)


def test_rendered_intensities_stay_in_unit_range():
    rng = np.random.default_rng(11)
    pts = rng.uniform(5, 58, (8, 2))
    stack = render_heatmap(LandmarkSet(pts), FRAME)
    stack.validate_unit_range()
    for chan in stack.channels:
        assert chan.max() == 1.0


def test_strict_peak_for_interior_integer_landmarks():
    rng = np.random.default_rng(3)
    pts = rng.integers(4, 60, (10, 2)).astype(float)
    stack = render_heatmap(LandmarkSet(pts), FRAME)
    for chan in stack.channels:
        top2 = np.sort(chan.ravel())[-2:]
        assert top2[1] > top2[0]


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------

def test_quarter_shift_toward_larger_neighbor():
    chan = np.zeros((1, 32, 32))
    chan[0, 10, 10] = 1.0
    chan[0, 10, 11] = 0.6   # right > left
    chan[0, 10, 9] = 0.4
    chan[0, 9, 10] = 0.5    # vertical neighbors equal
    chan[0, 11, 10] = 0.5
    decoded = decode_landmarks(chan)
    assert_allclose(decoded.landmarks.points[0], [10.25, 10.0])


def test_symmetric_peak_decodes_exactly():
    stack = render_one(24.0, 17.0)
    decoded = decode_landmarks(stack)
    assert_allclose(decoded.landmarks.points[0], [24.0, 17.0])
    assert not decoded.degenerate.any()


def test_no_shift_when_peak_on_border():
    chan = np.zeros((1, 8, 8))
    chan[0, 0, 3] = 1.0
    chan[0, 0, 4] = 0.9
    chan[0, 1, 3] = 0.8
    decoded = decode_landmarks(chan)
    # x axis has both neighbors and shifts; y axis is clipped at the border
    assert_allclose(decoded.landmarks.points[0], [3.25, 0.0])


def test_all_zero_channel_returns_frame_center_with_flag():
    pred = np.zeros((2, 16, 32))
    pred[1, 4, 4] = 1.0
    decoded = decode_landmarks(pred)
    assert_allclose(decoded.landmarks.points[0], [15.5, 7.5])
    assert decoded.degenerate.tolist() == [True, False]


def test_decode_beats_argmax_on_subpixel_centers():
    # derived oracle: sweep sub-pixel x offsets, compare both decoders
    offsets = np.linspace(-0.45, 0.45, 19)
    quarter_err, argmax_err = [], []
    for dx in offsets:
        stack = render_one(20.0 + dx, 20.0)
        chan = stack.channels[0]
        decoded_x = decode_landmarks(stack).landmarks.points[0, 0]
        argmax_x = float(np.argmax(chan.max(axis=0)))
        quarter_err.append(abs(decoded_x - (20.0 + dx)))
        argmax_err.append(abs(argmax_x - (20.0 + dx)))
    assert np.mean(quarter_err) < np.mean(argmax_err)


def test_render_decode_round_trip_within_quarter_pixel():
    rng = np.random.default_rng(23)
    pts = rng.integers(4, 60, (12, 2)).astype(float)
    stack = render_heatmap(LandmarkSet(pts), FRAME)
    decoded = decode_landmarks(stack)
    assert np.abs(decoded.landmarks.points - pts).max() <= 0.25


def test_decode_rejects_empty_stack():
    with pytest.raises(ShapeError):
        decode_landmarks(np.zeros((0, 8, 8)))


# ---------------------------------------------------------------------------
# pixel classification
# ---------------------------------------------------------------------------

def test_all_zero_grid_is_all_background():
    classes = classify_pixels(np.zeros((1, 16, 16)))
    assert (classes == PixelClass.BACKGROUND).all()


def test_gaussian_support_counts():
    stack = render_one(32.0, 32.0)
    classes = classify_pixels(stack)
    assert int((classes == PixelClass.FOREGROUND).sum()) == 49


def test_difficult_background_matches_brute_force_dilation():
    stack = render_one(30.0, 33.0)
    grid = stack.channels[0]
    classes = classify_pixels(stack)[0]
    h, w = grid.shape
    for i in range(h):
        for j in range(w):
            neighborhood = grid[max(i - 1, 0) : i + 2, max(j - 1, 0) : j + 2]
            if grid[i, j] > 0:
                expected = PixelClass.FOREGROUND
            elif neighborhood.max() > 0:
                expected = PixelClass.DIFFICULT_BACKGROUND
            else:
                expected = PixelClass.BACKGROUND
            assert classes[i, j] == expected


def test_difficult_background_forms_one_pixel_ring():
    stack = render_one(32.0, 32.0)
    classes = classify_pixels(stack)[0]
    difficult = np.argwhere(classes == PixelClass.DIFFICULT_BACKGROUND)
    assert len(difficult) == 9 * 9 - 7 * 7
    assert difficult[:, 0].min() == 28 and difficult[:, 0].max() == 36


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

def test_landmark_set_shape_validation():
    with pytest.raises(ShapeError):
        LandmarkSet(np.zeros((3, 3)))
    with pytest.raises(ShapeError):
        LandmarkSet(np.zeros((3, 2)), visibility=np.zeros(2, dtype=int))


def test_landmark_set_is_immutable():
    lm = LandmarkSet(np.array([[1.0, 2.0]]))
    with pytest.raises(ValueError):
        lm.points[0, 0] = 5.0


def test_heatmap_stack_validation():
    with pytest.raises(ShapeError):
        HeatmapStack(np.zeros((4, 4)))
    with pytest.raises(DomainError):
        HeatmapStack(np.full((1, 2, 2), np.nan))
    with pytest.raises(DomainError):
        HeatmapStack(np.full((1, 2, 2), 1.5)).validate_unit_range()


def test_gaussian_spec_validation():
    with pytest.raises(DomainError):
        GaussianSpec(sigma=0.0)
    with pytest.raises(DomainError):
        GaussianSpec(size=6)
