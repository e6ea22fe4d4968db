"""Weighted loss maps: emphasize foreground and difficult background pixels.

The mask M is 1 wherever the 3x3 gray dilation of the ground-truth stack
reaches 0.2 and 0 elsewhere; a loss grid is reweighted elementwise by
(W * M + 1). A continuous baseline variant weights by the raw ground-truth
intensity instead (gt * W + 1) with no dilation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ShapeError
from .heatmaps import as_channels

__all__ = [
    "DEFAULT_MASK_THRESHOLD",
    "DEFAULT_WEIGHT",
    "WeightMask",
    "gray_dilate_3x3",
    "build_mask",
    "apply_weighted_loss",
    "baseline_weight_map",
]

DEFAULT_MASK_THRESHOLD = 0.2
DEFAULT_WEIGHT = 10.0


def gray_dilate_3x3(grid) -> np.ndarray:
    """Per-channel 3x3 gray dilation (neighborhood maximum).

    The window is clipped at frame edges, so border pixels take the maximum
    over their in-frame neighbors only.
    """
    arr = as_channels(grid)
    padded = np.pad(
        arr, ((0, 0), (1, 1), (1, 1)), mode="constant", constant_values=-np.inf
    )
    h, w = arr.shape[1:]
    out = np.full_like(arr, -np.inf)
    for dy in range(3):
        for dx in range(3):
            np.maximum(out, padded[:, dy : dy + h, dx : dx + w], out=out)
    return out


@dataclass(frozen=True)
class WeightMask:
    """Binary mask plus the scalar weight applied where the mask is set."""

    mask: np.ndarray
    weight: float = DEFAULT_WEIGHT

    def __post_init__(self):
        mask = np.ascontiguousarray(np.asarray(self.mask, dtype=bool))
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)
        if self.weight <= 0:
            raise DomainError(f"weight must be positive, got {self.weight}")

    def multiplier(self) -> np.ndarray:
        """Per-pixel factor W * M + 1."""
        return self.weight * self.mask.astype(np.float64) + 1.0


def build_mask(
    gt,
    weight: float = DEFAULT_WEIGHT,
    threshold: float = DEFAULT_MASK_THRESHOLD,
) -> WeightMask:
    """Mask = 1 where the 3x3 gray-dilated ground truth reaches ``threshold``."""
    dilated = gray_dilate_3x3(gt)
    return WeightMask(dilated >= threshold, weight)


def apply_weighted_loss(loss_grid, mask: WeightMask):
    """Reweight a per-pixel loss grid by (W * M + 1): (grid, scalar mean)."""
    loss_arr = as_channels(loss_grid)
    if loss_arr.shape != mask.mask.shape:
        raise ShapeError(
            f"loss grid shape {loss_arr.shape} does not match mask {mask.mask.shape}"
        )
    weighted = loss_arr * mask.multiplier()
    return weighted, float(weighted.mean())


def baseline_weight_map(gt, weight: float = DEFAULT_WEIGHT) -> np.ndarray:
    """Continuous multiplier gt * W + 1 (no dilation, no threshold)."""
    if weight <= 0:
        raise DomainError(f"weight must be positive, got {weight}")
    return as_channels(gt) * weight + 1.0
