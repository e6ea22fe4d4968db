"""Loss values, gradients, branch continuity, and the adaptation property."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from heatmapreg import (
    DomainError,
    HeatmapStack,
    LossKind,
    LossParams,
    ShapeError,
    awing_loss,
    batch_loss,
    evaluate_loss,
    influence,
    l1_loss,
    loss_grid,
    mse_loss,
    wing_loss,
)

DEFAULTS = LossParams()
ALL_KINDS = [LossKind.MSE, LossKind.L1, LossKind.WING, LossKind.AWING]


# ---------------------------------------------------------------------------
# closed-form spot values (reference numbers from a 40-digit mpmath session)
# ---------------------------------------------------------------------------

def test_wing_value_matches_high_precision_reference():
    # omega * ln(1 + 0.1/eps) at omega=14, eps=1
    assert_allclose(wing_loss(1.0, 0.9).value, 1.3343425172605480, rtol=1e-13)


def test_awing_value_matches_high_precision_reference():
    # omega * ln(1 + 0.05^(alpha-1)) at defaults, y=1
    assert_allclose(awing_loss(1.0, 0.95).value, 0.5094127690171576, rtol=1e-13)


@pytest.mark.parametrize(
    "y,expected",
    [
        (0.0, 1.0874527684160884),
        (0.5, 3.6816815885911041),
        (1.0, 11.0056376561778910),
    ],
)
def test_awing_influence_matches_high_precision_reference(y, expected):
    assert_allclose(influence(0.05, y, DEFAULTS), expected, rtol=1e-12)


def test_adaptation_direction_influence_increases_with_target():
    values = [influence(0.05, y, DEFAULTS) for y in (0.0, 0.5, 1.0)]
    assert values[0] < values[1] < values[2]


# ---------------------------------------------------------------------------
# simple definitions
# ---------------------------------------------------------------------------

def test_mse_definition():
    surface = mse_loss(1.0, 0.0)
    assert surface.value == 1.0
    assert surface.gradient == -2.0
    assert_allclose(mse_loss(0.5, 0.3).value, 0.04)


def test_l1_definition_and_zero_convention():
    assert l1_loss(0.2, 0.7) == l1_loss(0.7, 0.2)
    assert l1_loss(0.2, 0.7).gradient == 1.0
    zero = l1_loss(0.4, 0.4)
    assert zero.value == 0.0 and zero.gradient == 0.0


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("y", [0.0, 0.5, 1.0])
def test_zero_error_gives_zero_value_and_gradient(kind, y):
    surface = evaluate_loss(y, y, DEFAULTS.with_kind(kind))
    assert surface.value == 0.0
    assert surface.gradient == 0.0


def test_wing_gradient_discontinuity_convention():
    # gradient jumps to omega/(eps + d) magnitude immediately off zero
    assert wing_loss(0.5, 0.5).gradient == 0.0
    near = wing_loss(0.5, 0.5 + 1e-9).gradient
    assert near == pytest.approx(14.0, rel=1e-6)


# ---------------------------------------------------------------------------
# branch continuity
# ---------------------------------------------------------------------------

def test_wing_branches_agree_at_omega():
    params = LossParams(omega=0.8, kind=LossKind.WING)
    below = wing_loss(1.0, 1.0 - (0.8 - 1e-12), params).value
    above = wing_loss(1.0, 1.0 - (0.8 + 1e-12), params).value
    assert abs(below - above) < 1e-9


@pytest.mark.parametrize("y", np.round(np.linspace(0.0, 1.0, 11), 10).tolist())
def test_awing_value_continuity_at_theta(y):
    lo = awing_loss(y, y - (DEFAULTS.theta - 1e-12)).value
    hi = awing_loss(y, y - (DEFAULTS.theta + 1e-12)).value
    assert abs(lo - hi) < 1e-9


@pytest.mark.parametrize("y", np.round(np.linspace(0.0, 1.0, 11), 10).tolist())
def test_awing_gradient_continuity_at_theta(y):
    # one-sided finite differences from each branch meet at the seam
    h = 1e-7
    theta = DEFAULTS.theta

    def value(delta):
        return awing_loss(y, y - delta).value

    inner = (value(theta) - value(theta - h)) / h
    outer = (value(theta + h) - value(theta)) / h
    assert abs(inner - outer) < 1e-6


@pytest.mark.parametrize("y", [0.0, 0.3, 0.7, 1.0])
def test_awing_gradient_vanishes_smoothly_at_zero(y):
    assert abs(awing_loss(y, y - 1e-4).gradient) < 1e-3
    assert abs(awing_loss(y, y + 1e-4).gradient) < 1e-3


def test_awing_linear_branch_influence_is_constant():
    a_small = influence(0.6, 1.0, DEFAULTS)
    a_large = influence(0.9, 1.0, DEFAULTS)
    assert_allclose(a_small, a_large, rtol=1e-12)
    assert_allclose(a_small, 9.7978496055976038, rtol=1e-12)


# ---------------------------------------------------------------------------
# gradients against central finite differences
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind", ALL_KINDS)
def test_analytic_gradients_match_finite_differences(kind):
    params = DEFAULTS.with_kind(kind)
    h = 1e-6
    ys = np.linspace(0.0, 1.0, 17)
    yhats = np.linspace(0.0, 1.0, 17)
    for y in ys:
        for yhat in yhats:
            delta = abs(y - yhat)
            if delta < 1e-3 or abs(delta - params.theta) < 1e-3:
                continue
            grad = evaluate_loss(y, yhat, params).gradient
            fd = (
                evaluate_loss(y, yhat + h, params).value
                - evaluate_loss(y, yhat - h, params).value
            ) / (2 * h)
            assert abs(grad - fd) / max(abs(grad), abs(fd)) < 1e-5


# ---------------------------------------------------------------------------
# symmetry property
# ---------------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(
    y=st.floats(0.0, 1.0),
    delta=st.floats(0.0, 1.0),
    kind=st.sampled_from(ALL_KINDS),
)
def test_loss_is_symmetric_in_the_error(y, delta, kind):
    params = DEFAULTS.with_kind(kind)
    plus = evaluate_loss(y, y + delta, params).value
    minus = evaluate_loss(y, y - delta, params).value
    assert plus == pytest.approx(minus, rel=1e-12, abs=0.0)


# ---------------------------------------------------------------------------
# batched evaluation
# ---------------------------------------------------------------------------

def test_batch_loss_zero_when_equal():
    rng = np.random.default_rng(0)
    stack = HeatmapStack(rng.uniform(0, 1, (2, 4, 4)))
    _, mean = batch_loss(stack, stack, DEFAULTS)
    assert mean == 0.0


def test_batch_loss_degenerate_shape_reduces_to_scalar_op():
    gt = np.full((1, 1, 1), 0.8)
    pred = np.full((1, 1, 1), 0.3)
    grid, mean = batch_loss(gt, pred, DEFAULTS)
    scalar = awing_loss(0.8, 0.3).value
    assert_allclose(grid[0, 0, 0], scalar)
    assert_allclose(mean, scalar)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_batch_loss_matches_per_element_loop(kind):
    rng = np.random.default_rng(7)
    params = DEFAULTS.with_kind(kind)
    gt = rng.uniform(0, 1, (2, 4, 4))
    pred = rng.uniform(0, 1, (2, 4, 4))
    grid, mean = batch_loss(gt, pred, params)
    total = 0.0
    for c in range(2):
        for i in range(4):
            for j in range(4):
                value = evaluate_loss(gt[c, i, j], pred[c, i, j], params).value
                assert_allclose(grid[c, i, j], value, rtol=1e-14)
                total += value
    assert_allclose(mean, total / 32.0, rtol=1e-13)


def test_batch_loss_shape_mismatch():
    with pytest.raises(ShapeError):
        batch_loss(np.zeros((1, 4, 4)), np.zeros((1, 4, 5)), DEFAULTS)


# ---------------------------------------------------------------------------
# parameter validation
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "kwargs",
    [
        {"omega": 0.0},
        {"epsilon": -1.0},
        {"theta": 0.0},
        {"theta": 1.5},
        {"alpha": 2.0},
    ],
)
def test_invalid_params_rejected(kwargs):
    with pytest.raises(DomainError):
        LossParams(**kwargs)


def test_awing_rejects_targets_outside_unit_range():
    with pytest.raises(DomainError):
        awing_loss(1.2, 0.5)
    with pytest.raises(DomainError):
        loss_grid(np.array([0.5, -0.1]), np.array([0.5, 0.5]), DEFAULTS)
