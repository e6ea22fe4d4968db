"""Synthetic face-like dataset for desk-scale training experiments.

Each sample is a grayscale image rendered from a jittered 5-landmark
template (two eyes, nose tip, two mouth corners): bright blobs at the
landmarks, faint boundary strokes between them, and additive noise. Ground
truth is the landmark set plus a 6-channel heatmap stack (5 landmark
channels and one merged boundary channel).

Samples regenerate bit-exactly from (seed, index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import FIVE_POINT_SCHEMA, boundary_channel
from .heatmaps import GaussianSpec, HeatmapStack, LandmarkSet, render_heatmap

__all__ = ["SyntheticSample", "generate_sample", "generate_dataset", "EDGE_MARGIN"]

EDGE_MARGIN = 4.0

# landmark offsets as fractions of frame size, relative to the frame center
_TEMPLATE = np.array(
    [
        [-0.20, -0.12],  # left eye
        [0.20, -0.12],   # right eye
        [0.00, 0.04],    # nose tip
        [-0.13, 0.20],   # left mouth corner
        [0.13, 0.20],    # right mouth corner
    ]
)

NUM_LANDMARKS = len(_TEMPLATE)


def _disc(sigma):
    def stamp(dx, dy):
        return np.exp(-(dx**2 + dy**2) / (2 * sigma**2))

    return stamp


def _ring(dx, dy):
    r = np.sqrt(dx**2 + dy**2)
    return np.exp(-((r - 2.5) ** 2) / (2 * 0.7**2))


def _dot_pair(axis):
    def stamp(dx, dy):
        du, dv = (dx, dy) if axis == 0 else (dy, dx)
        lobe_a = np.exp(-((du - 2.2) ** 2 + dv**2) / (2 * 0.9**2))
        lobe_b = np.exp(-((du + 2.2) ** 2 + dv**2) / (2 * 0.9**2))
        return lobe_a + lobe_b

    return stamp


# One distinct micro-pattern per landmark: small disc, ring, large disc, and
# two dot pairs (horizontal and vertical). Shape and scale, not brightness,
# encode which landmark a blob is, so a small-receptive-field network can
# assign blobs to output channels and the training runs compare losses rather
# than global-context reasoning. None of the stamps is line-like, so the
# boundary strokes cannot imitate one.
_STAMPS = (_disc(1.3), _ring, _disc(2.8), _dot_pair(0), _dot_pair(1))


@dataclass(frozen=True)
class SyntheticSample:
    image: np.ndarray        # (1, H, W) grayscale in [0, 1]
    landmarks: LandmarkSet
    heatmaps: HeatmapStack   # landmark channels + boundary channel


def _sample_landmarks(rng: np.random.Generator, frame) -> np.ndarray:
    h, w = frame
    scale_xy = np.array([w, h], dtype=np.float64)
    lo = EDGE_MARGIN
    hi = np.array([w - 1 - EDGE_MARGIN, h - 1 - EDGE_MARGIN])
    for _ in range(64):
        scale = rng.uniform(0.80, 1.15)
        angle = rng.uniform(-0.26, 0.26)
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        center = np.array([w / 2.0, h / 2.0]) + rng.uniform(-0.06, 0.06, 2) * scale_xy
        pts = center + scale * (_TEMPLATE * scale_xy) @ rot.T
        pts += rng.uniform(-1.5, 1.5, pts.shape)
        if (pts >= lo).all() and (pts <= hi).all():
            return pts
    return np.clip(pts, lo, hi)


def _render_image(rng: np.random.Generator, pts: np.ndarray, frame) -> np.ndarray:
    h, w = frame
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)[:, np.newaxis]
    img = np.zeros((h, w), dtype=np.float64)
    for (x, y), stamp in zip(pts, _STAMPS):
        img += 0.9 * stamp(xs - x, ys - y)
    strokes = boundary_channel(LandmarkSet(pts), FIVE_POINT_SCHEMA, frame, sigma=0.8)
    img += 0.15 * strokes
    img += rng.normal(0.0, 0.03, img.shape)
    return np.clip(img, 0.0, 1.0)[np.newaxis]


def generate_sample(seed: int, index: int, frame=(64, 64)) -> SyntheticSample:
    """Deterministically generate the ``index``-th sample of stream ``seed``."""
    rng = np.random.default_rng([seed, index])
    pts = _sample_landmarks(rng, frame)
    landmarks = LandmarkSet(pts)
    image = _render_image(rng, pts, frame)
    gaussians = render_heatmap(landmarks, frame, GaussianSpec())
    boundary = boundary_channel(landmarks, FIVE_POINT_SCHEMA, frame, sigma=1.0)
    stack = HeatmapStack(
        np.concatenate([gaussians.channels, boundary[np.newaxis]]),
        has_boundary_channel=True,
    )
    return SyntheticSample(image=image, landmarks=landmarks, heatmaps=stack)


def generate_dataset(seed: int, count: int, frame=(64, 64)) -> list[SyntheticSample]:
    return [generate_sample(seed, i, frame) for i in range(count)]
