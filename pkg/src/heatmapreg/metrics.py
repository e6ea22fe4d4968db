"""Alignment evaluation metrics: NME, failure rate, CED curve, AUC, PCK.

Per-image NME is the mean Euclidean landmark error divided by a face-scale
normalization factor (inter-ocular, inter-pupil, torso, or a constant).
Aggregates over a set of images: failure rate above an NME threshold, the
cumulative error distribution (CED) sampled on a uniform grid, the area
under that curve normalized by the threshold, and PCK.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DegenerateNormalizationError,
    DomainError,
    ShapeError,
    UndefinedMetricError,
)
from .heatmaps import LandmarkSet

__all__ = [
    "NormalizationRule",
    "MetricsReport",
    "nme",
    "failure_rate",
    "ced_auc",
    "pck",
    "compute_report",
]

CED_GRID_POINTS = 1001


@dataclass(frozen=True)
class NormalizationRule:
    """How to derive the scale factor d from the ground-truth landmarks.

    * ``interocular(i, j)`` / ``torso(i, j)``: distance between landmarks i, j
    * ``interpupil(left, right)``: distance between the centroids of two
      landmark index sets (eye centers)
    * ``constant(d)``: a fixed value
    """

    kind: str
    indices: tuple = ()
    value: float = 0.0

    @classmethod
    def interocular(cls, i: int, j: int) -> "NormalizationRule":
        return cls("interocular", (int(i), int(j)))

    @classmethod
    def torso(cls, i: int, j: int) -> "NormalizationRule":
        return cls("torso", (int(i), int(j)))

    @classmethod
    def interpupil(cls, left, right) -> "NormalizationRule":
        return cls(
            "interpupil", (tuple(int(i) for i in left), tuple(int(i) for i in right))
        )

    @classmethod
    def constant(cls, d: float) -> "NormalizationRule":
        if d <= 0:
            raise DegenerateNormalizationError(f"constant factor must be > 0, got {d}")
        return cls("constant", value=float(d))

    def factor(self, gt: LandmarkSet) -> float:
        pts = gt.points
        if self.kind == "constant":
            d = self.value
        elif self.kind in ("interocular", "torso"):
            i, j = self.indices
            self._check_indices((i, j), len(pts))
            d = float(np.linalg.norm(pts[i] - pts[j]))
        elif self.kind == "interpupil":
            left, right = self.indices
            self._check_indices(left + right, len(pts))
            d = float(
                np.linalg.norm(pts[list(left)].mean(axis=0) - pts[list(right)].mean(axis=0))
            )
        else:
            raise DomainError(f"unknown normalization kind {self.kind!r}")
        if d <= 0:
            raise DegenerateNormalizationError(
                f"{self.kind} normalization factor is {d}; reference points coincide"
            )
        return d

    @staticmethod
    def _check_indices(indices, n: int) -> None:
        bad = [i for i in indices if not 0 <= i < n]
        if bad:
            raise DomainError(f"normalization indices {bad} outside schema of size {n}")


def _paired(gt: LandmarkSet, pred: LandmarkSet) -> tuple[np.ndarray, np.ndarray]:
    if len(gt) != len(pred):
        raise ShapeError(f"landmark counts differ: gt {len(gt)} vs pred {len(pred)}")
    return gt.points, pred.points


def nme(gt: LandmarkSet, pred: LandmarkSet, norm: NormalizationRule) -> float:
    """Normalized mean error: mean per-landmark Euclidean error over d."""
    gt_pts, pred_pts = _paired(gt, pred)
    d = norm.factor(gt)
    errors = np.linalg.norm(pred_pts - gt_pts, axis=1)
    return float(errors.mean() / d)


def failure_rate(nmes, threshold: float) -> float:
    """Fraction of images whose NME strictly exceeds the threshold."""
    values = np.asarray(nmes, dtype=np.float64)
    if threshold <= 0:
        raise DomainError(f"threshold must be positive, got {threshold}")
    if values.size == 0:
        raise UndefinedMetricError("failure rate of an empty NME list is undefined")
    return float((values > threshold).mean())


def ced_auc(nmes, threshold: float):
    """CED curve and its normalized area.

    The curve is the empirical CDF of the NME values sampled on a uniform
    grid over [0, threshold]; the AUC is its trapezoidal integral divided by
    the threshold, so all-zero errors give exactly 1.

    Returns ``(curve, auc)`` with ``curve`` a list of (nme, fraction) pairs.
    """
    values = np.asarray(nmes, dtype=np.float64)
    if threshold <= 0:
        raise DomainError(f"threshold must be positive, got {threshold}")
    if values.size == 0:
        raise UndefinedMetricError("CED/AUC of an empty NME list is undefined")
    grid = np.linspace(0.0, threshold, CED_GRID_POINTS)
    fractions = (values[np.newaxis, :] <= grid[:, np.newaxis]).mean(axis=1)
    auc = float(np.trapz(fractions, grid) / threshold)
    return list(zip(grid.tolist(), fractions.tolist())), auc


def pck(
    gt: LandmarkSet,
    pred: LandmarkSet,
    norm: NormalizationRule,
    fraction: float = 0.2,
) -> float:
    """Fraction of landmarks within ``fraction * d`` of the ground truth (inclusive)."""
    if fraction <= 0:
        raise DomainError(f"fraction must be positive, got {fraction}")
    gt_pts, pred_pts = _paired(gt, pred)
    d = norm.factor(gt)
    errors = np.linalg.norm(pred_pts - gt_pts, axis=1)
    return float((errors <= fraction * d).mean())


@dataclass(frozen=True)
class MetricsReport:
    """Per-image NMEs plus the aggregate summaries at their stated thresholds."""

    per_image_nme: tuple[float, ...]
    fr: float
    fr_threshold: float
    auc: float
    auc_threshold: float
    ced: tuple = ()
    pck: float | None = None
    mean_nme: float = field(init=False, default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "per_image_nme", tuple(self.per_image_nme))
        object.__setattr__(self, "ced", tuple(self.ced))
        object.__setattr__(self, "mean_nme", float(np.mean(self.per_image_nme)))


def compute_report(
    nmes,
    fr_threshold: float = 0.10,
    auc_threshold: float = 0.10,
    pck_value: float | None = None,
) -> MetricsReport:
    """Bundle the aggregate metrics for a list of per-image NMEs."""
    curve, auc = ced_auc(nmes, auc_threshold)
    return MetricsReport(
        per_image_nme=tuple(float(v) for v in nmes),
        fr=failure_rate(nmes, fr_threshold),
        fr_threshold=fr_threshold,
        auc=auc,
        auc_threshold=auc_threshold,
        ced=tuple(curve),
        pck=pck_value,
    )
