"""Boundary channel generation from landmark polylines.

Boundary lines are defined as sequences of landmark indices, rasterized by
linear interpolation at unit steps, turned into a soft channel through a
Gaussian of the exact Euclidean distance transform, and merged into one
channel by pixelwise maximum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .exceptions import DomainError, SchemaError, ShapeError
from .heatmaps import LandmarkSet

__all__ = [
    "BoundarySegment",
    "BoundarySchema",
    "FIVE_POINT_SCHEMA",
    "rasterize_boundary",
    "boundary_heatmap",
    "merge_boundaries",
    "boundary_channel",
]

DISTANCE_CUTOFF_SIGMAS = 3.0


@dataclass(frozen=True)
class BoundarySegment:
    """One polyline: ordered landmark indices, optionally closed into a loop."""

    indices: tuple[int, ...]
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(self.indices) < 2:
            raise SchemaError(
                f"boundary segment needs at least 2 points, got {self.indices}"
            )


@dataclass(frozen=True)
class BoundarySchema:
    """Collection of boundary polylines over a landmark schema."""

    segments: tuple[BoundarySegment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def validate(self, num_landmarks: int) -> None:
        for seg in self.segments:
            bad = [i for i in seg.indices if not 0 <= i < num_landmarks]
            if bad:
                raise SchemaError(
                    f"segment references landmark indices {bad} outside "
                    f"schema of size {num_landmarks}"
                )

    @classmethod
    def parse(cls, text: str) -> "BoundarySchema":
        """Parse the plain-text format: one 'closed|open i j k ...' line per segment."""
        segments = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            flag = fields[0].lower()
            if flag not in ("closed", "open"):
                raise SchemaError(
                    f"line {lineno}: expected 'closed' or 'open', got {fields[0]!r}"
                )
            try:
                indices = tuple(int(f) for f in fields[1:])
            except ValueError as exc:
                raise SchemaError(f"line {lineno}: non-integer landmark index") from exc
            segments.append(BoundarySegment(indices, closed=flag == "closed"))
        return cls(tuple(segments))


# Synthetic 5-landmark face layout: 0/1 eyes, 2 nose, 3/4 mouth corners.
FIVE_POINT_SCHEMA = BoundarySchema(
    (
        BoundarySegment((0, 3)),    # left cheek line
        BoundarySegment((1, 4)),    # right cheek line
        BoundarySegment((3, 4)),    # mouth line
    )
)


def rasterize_boundary(
    landmarks: LandmarkSet,
    schema: BoundarySchema,
    frame: tuple[int, int],
) -> np.ndarray:
    """Rasterize all schema polylines onto a binary (H, W) grid.

    Consecutive landmarks are linearly interpolated at steps of at most one
    pixel and each sample is rounded to its nearest pixel. Segments that
    reference an unlabeled landmark are skipped with a warning.
    """
    h, w = frame
    schema.validate(len(landmarks))
    grid = np.zeros((h, w), dtype=np.float64)
    drawable = landmarks.visible_mask()
    pts = landmarks.points
    for seg in schema.segments:
        if not drawable[list(seg.indices)].all():
            warnings.warn(
                f"skipping boundary segment {seg.indices}: unlabeled landmark",
                stacklevel=2,
            )
            continue
        indices = seg.indices + (seg.indices[0],) if seg.closed else seg.indices
        for a, b in zip(indices[:-1], indices[1:]):
            p0, p1 = pts[a], pts[b]
            steps = max(1, int(np.ceil(np.hypot(*(p1 - p0)))))
            ts = np.linspace(0.0, 1.0, steps + 1)
            samples = p0 + ts[:, np.newaxis] * (p1 - p0)
            xs = np.floor(samples[:, 0] + 0.5).astype(int)
            ys = np.floor(samples[:, 1] + 0.5).astype(int)
            keep = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
            grid[ys[keep], xs[keep]] = 1.0
    return grid


def boundary_heatmap(raster: np.ndarray, sigma: float = 1.0) -> np.ndarray:
    """Soft boundary channel exp(-D^2 / (2 sigma^2)) from a binary raster.

    D is the exact Euclidean distance to the nearest boundary pixel; the
    output is cut to zero beyond 3 sigma. An all-zero raster maps to an
    all-zero channel.
    """
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    mask = np.asarray(raster, dtype=bool)
    if mask.ndim != 2:
        raise ShapeError(f"raster must be 2-D, got shape {mask.shape}")
    if not mask.any():
        return np.zeros(mask.shape, dtype=np.float64)
    dist = ndimage.distance_transform_edt(~mask)
    out = np.exp(-(dist**2) / (2.0 * sigma * sigma))
    out[dist > DISTANCE_CUTOFF_SIGMAS * sigma] = 0.0
    return out


def merge_boundaries(grids, frame: tuple[int, int] | None = None) -> np.ndarray:
    """Pixelwise maximum over per-segment grids.

    An empty list yields an all-zero grid, for which ``frame`` must be given.
    """
    grids = [np.asarray(g, dtype=np.float64) for g in grids]
    if not grids:
        if frame is None:
            raise ShapeError("merging an empty grid list requires explicit frame dims")
        return np.zeros(frame, dtype=np.float64)
    shape = grids[0].shape
    for g in grids[1:]:
        if g.shape != shape:
            raise ShapeError(f"grid shapes differ: {shape} vs {g.shape}")
    out = grids[0].copy()
    for g in grids[1:]:
        np.maximum(out, g, out=out)
    return out


def boundary_channel(
    landmarks: LandmarkSet,
    schema: BoundarySchema,
    frame: tuple[int, int],
    sigma: float = 1.0,
) -> np.ndarray:
    """Per-segment rasterize -> soften -> merge, in one call."""
    per_segment = [
        boundary_heatmap(
            rasterize_boundary(landmarks, BoundarySchema((seg,)), frame), sigma
        )
        for seg in schema.segments
    ]
    return merge_boundaries(per_segment, frame=frame)
