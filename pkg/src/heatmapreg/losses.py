"""Elementwise regression losses with closed-form values and gradients.

Four loss kinds are provided. With error d = |y - yhat|:

* ``mse``:  (y - yhat)^2
* ``l1``:   |y - yhat|, gradient defined as 0 at d = 0
* ``wing``: w * ln(1 + d/eps) while d < w, else d - C with
  C = w - w*ln(1 + w/eps) chosen so the two branches meet at d = w
* ``awing``: w * ln(1 + (d/eps)^(alpha - y)) while d < theta, else
  A*d - C, where A and C are functions of the target intensity y chosen so
  value and gradient are both continuous at d = theta.

The ``awing`` exponent alpha - y adapts the curvature to the target: near
y = 1 the loss keeps a strong gradient on small errors (wing-like), near
y = 0 it flattens toward MSE behaviour. alpha must exceed 2 so the exponent
stays above 1 for targets in [0, 1], which keeps the gradient continuous
(and zero) at d = 0.

Gradients are taken with respect to the prediction yhat, treating the target
y as data. All arithmetic is in float64.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DomainError, ShapeError
from .heatmaps import as_channels

__all__ = [
    "LossKind",
    "LossParams",
    "LossSurface",
    "loss_grid",
    "mse_loss",
    "l1_loss",
    "wing_loss",
    "awing_loss",
    "evaluate_loss",
    "influence",
    "batch_loss",
]


class LossKind(str, enum.Enum):
    MSE = "mse"
    L1 = "l1"
    WING = "wing"
    AWING = "awing"


@dataclass(frozen=True)
class LossParams:
    """Hyperparameters shared by all loss evaluations.

    ``omega`` scales the nonlinear region, ``epsilon`` its curvature,
    ``theta`` is the awing branch threshold (a fraction of the [0, 1]
    intensity range), and ``alpha`` the awing adaptation exponent base.
    """

    omega: float = 14.0
    epsilon: float = 1.0
    theta: float = 0.5
    alpha: float = 2.1
    kind: LossKind = LossKind.AWING

    def __post_init__(self):
        if self.omega <= 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        if self.epsilon <= 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.theta <= 1:
            raise DomainError(f"theta must lie in (0, 1], got {self.theta}")
        if self.alpha <= 2:
            raise DomainError(
                f"alpha must exceed 2 so the exponent alpha - y stays above 1 "
                f"for targets in [0, 1], got {self.alpha}"
            )
        object.__setattr__(self, "kind", LossKind(self.kind))

    def with_kind(self, kind: LossKind | str) -> "LossParams":
        return replace(self, kind=LossKind(kind))


@dataclass(frozen=True)
class LossSurface:
    """Loss value and its derivative with respect to the prediction."""

    value: float
    gradient: float


def _check_awing_targets(y: np.ndarray) -> None:
    if y.size and (y.min() < 0.0 or y.max() > 1.0):
        raise DomainError("awing targets must lie in [0, 1]")


def _mse(y, yhat):
    diff = yhat - y
    return diff * diff, 2.0 * diff


def _l1(y, yhat):
    diff = yhat - y
    return np.abs(diff), np.sign(diff)


def _wing(y, yhat, p: LossParams):
    diff = yhat - y
    d = np.abs(diff)
    sign = np.sign(diff)
    c = p.omega - p.omega * np.log1p(p.omega / p.epsilon)
    nonlinear = d < p.omega
    value = np.where(nonlinear, p.omega * np.log1p(d / p.epsilon), d - c)
    grad = np.where(nonlinear, p.omega / (p.epsilon + d), 1.0) * sign
    return value, grad


def _awing(y, yhat, p: LossParams):
    _check_awing_targets(y)
    diff = yhat - y
    d = np.abs(diff)
    sign = np.sign(diff)
    expo = p.alpha - y
    ratio = d / p.epsilon
    pow_e = np.power(ratio, expo)
    # ratio^(expo-1) = ratio^expo / ratio; the exponent exceeds alpha - 1 - y > 0,
    # so the d = 0 limit is 0
    pow_e1 = np.divide(pow_e, ratio, out=np.zeros_like(pow_e), where=ratio > 0)
    # linear-branch slope and offset, functions of the target intensity
    t = p.theta / p.epsilon
    t_pow = np.exp(expo * np.log(t))
    a = p.omega * expo * (t_pow / t) / (p.epsilon * (1.0 + t_pow))
    c = p.theta * a - p.omega * np.log1p(t_pow)
    nonlinear = d < p.theta
    value = np.where(nonlinear, p.omega * np.log1p(pow_e), a * d - c)
    grad_nl = p.omega * expo * pow_e1 / (p.epsilon * (1.0 + pow_e))
    grad = np.where(nonlinear, grad_nl, a) * sign
    return value, grad


def loss_grid(y, yhat, params: LossParams):
    """Vectorized loss evaluation.

    Returns ``(values, gradients)`` arrays broadcast from ``y`` and ``yhat``;
    gradients are d(loss)/d(yhat).
    """
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if params.kind is LossKind.MSE:
        return _mse(y, yhat)
    if params.kind is LossKind.L1:
        return _l1(y, yhat)
    if params.kind is LossKind.WING:
        return _wing(y, yhat, params)
    return _awing(y, yhat, params)


def _scalar(y: float, yhat: float, params: LossParams) -> LossSurface:
    value, grad = loss_grid(y, yhat, params)
    return LossSurface(float(value), float(grad))


def mse_loss(y: float, yhat: float) -> LossSurface:
    value, grad = _mse(np.float64(y), np.float64(yhat))
    return LossSurface(float(value), float(grad))


def l1_loss(y: float, yhat: float) -> LossSurface:
    value, grad = _l1(np.float64(y), np.float64(yhat))
    return LossSurface(float(value), float(grad))


def wing_loss(y: float, yhat: float, params: LossParams = LossParams()) -> LossSurface:
    return _scalar(y, yhat, params.with_kind(LossKind.WING))


def awing_loss(y: float, yhat: float, params: LossParams = LossParams()) -> LossSurface:
    return _scalar(y, yhat, params.with_kind(LossKind.AWING))


def evaluate_loss(y: float, yhat: float, params: LossParams) -> LossSurface:
    """Scalar loss of the kind selected in ``params``."""
    return _scalar(y, yhat, params)


def influence(error, y, params: LossParams):
    """Gradient magnitude |d(loss)/d(yhat)| at prediction yhat = y - error.

    Large influence at a given error means training focuses on pixels with
    that error; the adaptive loss raises influence on small errors as the
    target intensity y approaches 1.
    """
    error = np.asarray(error, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, grad = loss_grid(y, y - error, params)
    out = np.abs(grad)
    return float(out) if out.ndim == 0 else out


def batch_loss(gt, pred, params: LossParams):
    """Elementwise loss over matching stacks: (per-pixel grid, scalar mean)."""
    gt_arr = as_channels(gt)
    pred_arr = as_channels(pred)
    if gt_arr.shape != pred_arr.shape:
        raise ShapeError(
            f"stack shapes differ: gt {gt_arr.shape} vs pred {pred_arr.shape}"
        )
    values, _ = loss_grid(gt_arr, pred_arr, params)
    return values, float(values.mean())
