"""Ground-truth heatmap rendering, sub-pixel decoding, and pixel classification.

A heatmap stack holds one channel per landmark (plus, optionally, one boundary
channel). Rendering places a truncated Gaussian at each landmark; decoding
recovers sub-pixel coordinates from a predicted stack with the quarter-pixel
refinement rule; classification splits the grid into foreground, difficult
background, and plain background pixels.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, OutOfFrameError, ShapeError

__all__ = [
    "Visibility",
    "LandmarkSet",
    "GaussianSpec",
    "HeatmapStack",
    "PixelClass",
    "DecodedLandmarks",
    "render_heatmap",
    "decode_landmarks",
    "classify_pixels",
]


class Visibility(enum.IntEnum):
    """Per-landmark annotation state."""

    UNLABELED = 0
    OCCLUDED = 1
    VISIBLE = 2


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LandmarkSet:
    """Ordered 2D keypoints in heatmap-frame pixel units.

    ``points`` has shape (N, 2) as (x, y); ``visibility`` is an optional
    (N,) array of :class:`Visibility` values (all VISIBLE when omitted).
    The point count is fixed at construction.
    """

    points: np.ndarray
    visibility: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ShapeError(f"points must have shape (N, 2), got {pts.shape}")
        object.__setattr__(self, "points", _frozen(pts))
        if self.visibility is not None:
            vis = np.asarray(self.visibility, dtype=np.int64)
            if vis.shape != (len(pts),):
                raise ShapeError(
                    f"visibility must have shape ({len(pts)},), got {vis.shape}"
                )
            object.__setattr__(self, "visibility", _frozen(vis))

    def __len__(self) -> int:
        return len(self.points)

    def visible_mask(self) -> np.ndarray:
        """Boolean mask of points usable for drawing (not UNLABELED)."""
        if self.visibility is None:
            return np.ones(len(self), dtype=bool)
        return self.visibility != Visibility.UNLABELED

    def in_frame(self, frame: tuple[int, int]) -> bool:
        h, w = frame
        pts = self.points[self.visible_mask()]
        if len(pts) == 0:
            return True
        return bool(
            (pts[:, 0] >= 0).all()
            and (pts[:, 0] < w).all()
            and (pts[:, 1] >= 0).all()
            and (pts[:, 1] < h).all()
        )


@dataclass(frozen=True)
class GaussianSpec:
    """Truncated rendering kernel: standard deviation and odd window side."""

    sigma: float = 1.0
    size: int = 7

    def __post_init__(self):
        if self.sigma <= 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.size < 1 or self.size % 2 == 0:
            raise DomainError(f"kernel size must be odd and >= 1, got {self.size}")


@dataclass(frozen=True)
class HeatmapStack:
    """C x H x W stack of real-valued channels.

    Ground-truth stacks produced by this package keep every intensity in
    [0, 1] with a single peak of exactly 1.0 per landmark channel; predicted
    stacks (e.g. raw network output) may hold any finite values.
    """

    channels: np.ndarray
    has_boundary_channel: bool = False

    def __post_init__(self):
        arr = np.asarray(self.channels, dtype=np.float64)
        if arr.ndim != 3:
            raise ShapeError(f"channels must have shape (C, H, W), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise DomainError("heatmap stack contains non-finite values")
        object.__setattr__(self, "channels", _frozen(arr))

    @property
    def frame(self) -> tuple[int, int]:
        return self.channels.shape[1], self.channels.shape[2]

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def num_landmark_channels(self) -> int:
        return self.num_channels - (1 if self.has_boundary_channel else 0)

    def landmark_channels(self) -> np.ndarray:
        return self.channels[: self.num_landmark_channels]

    def validate_unit_range(self) -> None:
        """Raise unless every intensity lies in [0, 1] (ground-truth contract)."""
        arr = self.channels
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise DomainError("ground-truth intensities must lie in [0, 1]")


class PixelClass(enum.IntEnum):
    """Role of a pixel on a ground-truth stack."""

    BACKGROUND = 0
    DIFFICULT_BACKGROUND = 1
    FOREGROUND = 2


def as_channels(stack) -> np.ndarray:
    """Accept a HeatmapStack or a (C, H, W) / (H, W) array; return (C, H, W)."""
    if isinstance(stack, HeatmapStack):
        return stack.channels
    arr = np.asarray(stack, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3:
        raise ShapeError(f"expected (C, H, W) or (H, W) array, got shape {arr.shape}")
    return arr


def render_heatmap(
    landmarks: LandmarkSet,
    frame: tuple[int, int],
    kernel: GaussianSpec = GaussianSpec(),
    clamp: bool = False,
) -> HeatmapStack:
    """Render one truncated-Gaussian channel per landmark.

    The kernel window is centered on the landmark's rounded pixel (ties round
    toward the larger index). Within the window the Gaussian is evaluated at
    pixel centers around the *continuous* landmark position and then scaled so
    the peak pixel is exactly 1.0; everything outside the window stays zero.
    Interior landmarks therefore produce exactly ``size**2`` nonzero pixels,
    and the peak sits on the integer pixel nearest the landmark.

    Out-of-frame landmarks raise :class:`OutOfFrameError` unless ``clamp`` is
    set, in which case they are clamped onto the frame first.
    """
    h, w = frame
    if h < 1 or w < 1:
        raise DomainError(f"frame must be positive, got {frame}")
    pts = np.array(landmarks.points, dtype=np.float64, copy=True)
    if clamp:
        pts[:, 0] = np.clip(pts[:, 0], 0.0, w - 1.0)
        pts[:, 1] = np.clip(pts[:, 1], 0.0, h - 1.0)
    elif not (
        (pts[:, 0] >= 0).all()
        and (pts[:, 0] < w).all()
        and (pts[:, 1] >= 0).all()
        and (pts[:, 1] < h).all()
    ):
        raise OutOfFrameError(f"landmark outside {w}x{h} frame (pass clamp=True to clamp)")

    half = kernel.size // 2
    two_sigma_sq = 2.0 * kernel.sigma * kernel.sigma
    out = np.zeros((len(pts), h, w), dtype=np.float64)
    for c, (x, y) in enumerate(pts):
        # round half-up so ties go toward the larger index
        cx = int(np.floor(x + 0.5))
        cy = int(np.floor(y + 0.5))
        x0, x1 = max(cx - half, 0), min(cx + half, w - 1)
        y0, y1 = max(cy - half, 0), min(cy + half, h - 1)
        xs = np.arange(x0, x1 + 1, dtype=np.float64)
        ys = np.arange(y0, y1 + 1, dtype=np.float64)[:, np.newaxis]
        patch = np.exp(-((xs - x) ** 2 + (ys - y) ** 2) / two_sigma_sq)
        out[c, y0 : y1 + 1, x0 : x1 + 1] = patch / patch.max()
    return HeatmapStack(out)


@dataclass(frozen=True)
class DecodedLandmarks:
    """Decoded coordinates plus a per-channel degenerate (all-zero) flag."""

    landmarks: LandmarkSet
    degenerate: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self):
        object.__setattr__(
            self, "degenerate", _frozen(np.asarray(self.degenerate, dtype=bool))
        )


def decode_landmarks(pred) -> DecodedLandmarks:
    """Decode each channel's peak to sub-pixel coordinates.

    Takes the argmax pixel and shifts it a quarter pixel per axis toward the
    larger of the two axis-adjacent neighbors. No shift is applied on an axis
    whose neighbors are equal or when the peak sits on the frame border.
    All-zero channels decode to the frame center and are flagged degenerate.
    """
    arr = as_channels(pred)
    c, h, w = arr.shape
    if c < 1:
        raise ShapeError("prediction stack has no channels")
    coords = np.empty((c, 2), dtype=np.float64)
    degenerate = np.zeros(c, dtype=bool)
    for k in range(c):
        chan = arr[k]
        if not chan.any():
            coords[k] = ((w - 1) / 2.0, (h - 1) / 2.0)
            degenerate[k] = True
            continue
        flat = int(np.argmax(chan))
        py, px = divmod(flat, w)
        x = float(px)
        y = float(py)
        if 0 < px < w - 1:
            right, left = chan[py, px + 1], chan[py, px - 1]
            if right > left:
                x += 0.25
            elif left > right:
                x -= 0.25
        if 0 < py < h - 1:
            below, above = chan[py + 1, px], chan[py - 1, px]
            if below > above:
                y += 0.25
            elif above > below:
                y -= 0.25
        coords[k] = (x, y)
    return DecodedLandmarks(LandmarkSet(coords), degenerate)


def classify_pixels(gt) -> np.ndarray:
    """Classify every pixel of a ground-truth stack.

    Foreground: intensity > 0. Difficult background: zero intensity whose 3x3
    gray dilation is positive (i.e. adjacent to foreground). Background:
    everything else. Returns a (C, H, W) array of :class:`PixelClass` values.
    """
    from .weighting import gray_dilate_3x3

    arr = as_channels(gt)
    dilated = gray_dilate_3x3(arr)
    out = np.full(arr.shape, PixelClass.BACKGROUND, dtype=np.int64)
    out[(arr == 0.0) & (dilated > 0.0)] = PixelClass.DIFFICULT_BACKGROUND
    out[arr > 0.0] = PixelClass.FOREGROUND
    return out
