"""On-disk formats: heatmap dumps, landmark annotations, model parameters.

Heatmap dump (binary, little-endian): magic ``HMAP``, u32 C, u32 H, u32 W,
then C*H*W float32 values row-major per channel.

Annotation file (UTF-8 text): one image per line as
``image-id W H x,y[,v] x,y[,v] ...`` with whitespace between points and
commas within a point; the optional v is 0 unlabeled / 1 occluded / 2
visible and defaults to visible.

Model parameter dump (binary, little-endian): magic ``TNET``, u32 tensor
count, then per tensor u32 ndim, u32 dims..., float32 data row-major.
"""

from __future__ import annotations

import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .exceptions import SchemaError, ShapeError
from .heatmaps import HeatmapStack, LandmarkSet

__all__ = [
    "write_heatmap_dump",
    "read_heatmap_dump",
    "write_annotations",
    "read_annotations",
    "write_model_params",
    "read_model_params",
    "atomic_write_text",
]

HEATMAP_MAGIC = b"HMAP"
MODEL_MAGIC = b"TNET"


@contextmanager
def _atomic_binary(path):
    """Write to a temp file in the target directory, rename on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    """Write UTF-8 text atomically (no partial file is ever visible)."""
    with _atomic_binary(path) as fh:
        fh.write(text.encode("utf-8"))


def write_heatmap_dump(path, stack) -> None:
    arr = stack.channels if isinstance(stack, HeatmapStack) else np.asarray(stack)
    if arr.ndim != 3:
        raise ShapeError(f"heatmap dump requires a (C, H, W) array, got {arr.shape}")
    c, h, w = arr.shape
    with _atomic_binary(path) as fh:
        fh.write(HEATMAP_MAGIC)
        fh.write(struct.pack("<III", c, h, w))
        fh.write(arr.astype("<f4").tobytes())


def read_heatmap_dump(path, has_boundary_channel: bool = False) -> HeatmapStack:
    raw = Path(path).read_bytes()
    if raw[:4] != HEATMAP_MAGIC:
        raise SchemaError(f"{path}: not a heatmap dump (bad magic {raw[:4]!r})")
    c, h, w = struct.unpack("<III", raw[4:16])
    expected = 16 + 4 * c * h * w
    if len(raw) != expected:
        raise SchemaError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=16).reshape(c, h, w)
    return HeatmapStack(data.astype(np.float64), has_boundary_channel)


def _format_point(x: float, y: float, v: int | None) -> str:
    fields = [repr(float(x)), repr(float(y))]
    if v is not None:
        fields.append(str(int(v)))
    return ",".join(fields)


def write_annotations(path, records) -> None:
    """Write (image_id, (W, H), LandmarkSet) records, one per line."""
    lines = []
    for image_id, (w, h), landmarks in records:
        if any(ch.isspace() for ch in str(image_id)):
            raise SchemaError(f"image id {image_id!r} must not contain whitespace")
        vis = landmarks.visibility
        points = " ".join(
            _format_point(x, y, None if vis is None else vis[i])
            for i, (x, y) in enumerate(landmarks.points)
        )
        lines.append(f"{image_id} {int(w)} {int(h)} {points}")
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_annotations(path):
    """Parse an annotation file into (image_id, (W, H), LandmarkSet) records."""
    records = []
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 4:
            raise SchemaError(f"{path}:{lineno}: expected 'id W H x,y ...'")
        image_id = fields[0]
        try:
            w, h = int(fields[1]), int(fields[2])
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: bad frame dimensions") from exc
        points, vis, has_vis = [], [], False
        for token in fields[3:]:
            parts = token.split(",")
            if len(parts) not in (2, 3):
                raise SchemaError(f"{path}:{lineno}: bad point {token!r}")
            try:
                points.append((float(parts[0]), float(parts[1])))
                if len(parts) == 3:
                    has_vis = True
                    vis.append(int(parts[2]))
                else:
                    vis.append(2)
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: bad point {token!r}") from exc
        landmarks = LandmarkSet(
            np.array(points), np.array(vis) if has_vis else None
        )
        records.append((image_id, (w, h), landmarks))
    return records


def write_model_params(path, tensors) -> None:
    tensors = [np.asarray(t) for t in tensors]
    with _atomic_binary(path) as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(tensors)))
        for t in tensors:
            fh.write(struct.pack("<I", t.ndim))
            fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
            fh.write(t.astype("<f4").tobytes())


def read_model_params(path) -> list[np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != MODEL_MAGIC:
        raise SchemaError(f"{path}: not a model dump (bad magic {raw[:4]!r})")
    offset = 4
    (count,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    tensors = []
    for _ in range(count):
        (ndim,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}I", raw, offset)
        offset += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(raw, dtype="<f4", count=size, offset=offset)
        offset += 4 * size
        tensors.append(data.reshape(shape).astype(np.float64))
    if offset != len(raw):
        raise SchemaError(f"{path}: trailing bytes after {count} tensors")
    return tensors
