"""Coordinate-encoding channels for convolution inputs.

Generates normalized X/Y grids in [-1, 1], a radius grid (1.0 at frame
corners), and boundary-masked X/Y variants that keep coordinates only where
a boundary prediction is at least a threshold (0.05 by default).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DomainError, ShapeError

__all__ = [
    "BOUNDARY_COORD_THRESHOLD",
    "COORD_CHANNEL_ORDER",
    "CoordChannels",
    "make_xy_radius",
    "mask_boundary_coords",
    "concat_channels",
]

BOUNDARY_COORD_THRESHOLD = 0.05

# fixed append order for concat_channels
COORD_CHANNEL_ORDER = ("cx", "cy", "radius", "bx", "by")


@dataclass(frozen=True)
class CoordChannels:
    """H x W coordinate grids; bx/by are None until a boundary mask is applied."""

    cx: np.ndarray
    cy: np.ndarray
    radius: np.ndarray
    bx: np.ndarray | None = None
    by: np.ndarray | None = None

    def get(self, name: str) -> np.ndarray:
        if name not in COORD_CHANNEL_ORDER:
            raise DomainError(f"unknown coordinate channel {name!r}")
        value = getattr(self, name)
        if value is None:
            raise DomainError(
                f"channel {name!r} requested but no boundary mask has been applied"
            )
        return value


def make_xy_radius(frame: tuple[int, int]) -> CoordChannels:
    """Build cx, cy, radius grids for an (H, W) frame.

    cx varies only along x as 2*c/(W-1) - 1; cy analogously along y; radius
    is the Euclidean norm of (cx, cy) scaled by 1/sqrt(2) so corners are 1.
    """
    h, w = frame
    if h < 2 or w < 2:
        raise DomainError(f"frame axes must be >= 2 pixels, got {frame}")
    cx = np.tile(2.0 * np.arange(w) / (w - 1) - 1.0, (h, 1))
    cy = np.tile((2.0 * np.arange(h) / (h - 1) - 1.0)[:, np.newaxis], (1, w))
    radius = np.sqrt(cx**2 + cy**2) / np.sqrt(2.0)
    return CoordChannels(cx=cx, cy=cy, radius=radius)


def mask_boundary_coords(
    coords: CoordChannels,
    boundary_pred: np.ndarray,
    threshold: float = BOUNDARY_COORD_THRESHOLD,
) -> CoordChannels:
    """Fill bx/by: coordinates where ``boundary_pred >= threshold``, else 0."""
    pred = np.asarray(boundary_pred, dtype=np.float64)
    if pred.shape != coords.cx.shape:
        raise ShapeError(
            f"boundary prediction shape {pred.shape} does not match "
            f"coordinate grids {coords.cx.shape}"
        )
    keep = pred >= threshold
    return replace(
        coords,
        bx=np.where(keep, coords.cx, 0.0),
        by=np.where(keep, coords.cy, 0.0),
    )


def concat_channels(grid, coords: CoordChannels, selection=()) -> np.ndarray:
    """Append selected coordinate channels to a (C, H, W) feature grid.

    Channels are appended in the fixed order cx, cy, radius, bx, by no matter
    how the selection is ordered. An empty selection returns the input grid
    unchanged.
    """
    arr = np.asarray(grid, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"feature grid must have shape (C, H, W), got {arr.shape}")
    chosen = set(selection)
    unknown = chosen - set(COORD_CHANNEL_ORDER)
    if unknown:
        raise DomainError(f"unknown coordinate channels: {sorted(unknown)}")
    extra = [coords.get(name) for name in COORD_CHANNEL_ORDER if name in chosen]
    if not extra:
        return arr
    for chan in extra:
        if chan.shape != arr.shape[1:]:
            raise ShapeError(
                f"coordinate grid shape {chan.shape} does not match "
                f"feature frame {arr.shape[1:]}"
            )
    return np.concatenate([arr, np.stack(extra)], axis=0)
