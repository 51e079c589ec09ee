"""Raster masks: validation, COCO-style RLE codecs, geometry and raw file formats.

Binary masks are 2D ``uint8`` arrays holding only 0 and 1; soft maps are 2D
``float64`` arrays of finite values. Both are row-major ``(height, width)``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels
from .errors import FormatError, InputError

__all__ = [
    "BBox",
    "RleMask",
    "as_binary_mask",
    "as_soft_map",
    "rle_encode",
    "rle_decode",
    "rle_compress",
    "rle_decompress",
    "rasterize_polygon",
    "crop",
    "resize_bilinear",
    "resize_nearest",
    "mask_area",
    "mask_iou",
    "tight_box",
    "write_binary_mask",
    "read_binary_mask",
    "write_soft_map",
    "read_soft_map",
]


@dataclass(frozen=True)
class BBox:
    """Integer-aligned box; ``x, y`` is the top-left pixel, ``w, h`` >= 1."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise InputError(f"BBox.{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.w < 1 or self.h < 1:
            raise InputError(f"BBox extent must be >= 1, got w={self.w} h={self.h}")

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> BBox:
        """Round a fractional detector box outward: floor the origin, ceil the far edge."""
        vals = (x, y, w, h)
        if not all(math.isfinite(float(v)) for v in vals):
            raise InputError(f"non-finite box {vals}")
        x0 = math.floor(x)
        y0 = math.floor(y)
        x1 = math.ceil(x + w)
        y1 = math.ceil(y + h)
        return cls(x0, y0, max(x1 - x0, 1), max(y1 - y0, 1))

    @property
    def x1(self) -> int:
        return self.x + self.w

    @property
    def y1(self) -> int:
        return self.y + self.h

    def to_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class RleMask:
    """Column-major run lengths, alternating background/foreground, background first."""

    size: tuple[int, int]
    counts: tuple[int, ...]

    def __post_init__(self):
        h, w = (int(v) for v in self.size)
        object.__setattr__(self, "size", (h, w))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @property
    def height(self) -> int:
        return self.size[0]

    @property
    def width(self) -> int:
        return self.size[1]

    def area(self) -> int:
        return sum(self.counts[1::2])


def as_binary_mask(m, name: str = "mask") -> np.ndarray:
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InputError(f"{name} must be a non-empty 2D array, got shape {a.shape}")
    if a.dtype == bool:
        return a.astype(np.uint8)
    if not np.isin(a, (0, 1)).all():
        raise InputError(f"{name} must contain only 0 and 1")
    return a.astype(np.uint8, copy=False)


def as_soft_map(m, name: str = "map") -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InputError(f"{name} must be a non-empty 2D array, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InputError(f"{name} contains NaN or infinite values")
    return a


def rle_encode(mask) -> RleMask:
    m = as_binary_mask(mask)
    return RleMask(m.shape, kernels.rle_encode(m))


def _check_counts(counts, size) -> tuple[int, int]:
    h, w = (int(v) for v in size)
    if h < 1 or w < 1:
        raise FormatError(f"RLE size must be positive, got {[h, w]}")
    if any(c < 0 for c in counts):
        raise FormatError("RLE counts must be nonnegative")
    total = sum(counts)
    if total != h * w:
        raise FormatError(f"RLE counts sum to {total}, expected height*width = {h * w}")
    return h, w


def rle_decode(rle: RleMask) -> np.ndarray:
    h, w = _check_counts(rle.counts, rle.size)
    return kernels.rle_decode(list(rle.counts), h, w)


def rle_compress(rle: RleMask) -> str:
    """COCO compressed counts string (6-bit units offset by 48, delta-coded from index 3)."""
    return kernels.rle_to_string(list(rle.counts))


def rle_decompress(text: str, size) -> RleMask:
    if not isinstance(text, str):
        raise FormatError(f"compressed counts must be a string, got {type(text).__name__}")
    counts = kernels.rle_from_string(text)
    _check_counts(counts, size)
    return RleMask(tuple(size), counts)


def rasterize_polygon(vertices, width: int, height: int) -> np.ndarray:
    """Fill a polygon by pixel-center containment under the even-odd rule."""
    pts = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        raise InputError(f"polygon needs at least 3 vertices, got {len(pts)}")
    if width < 1 or height < 1:
        raise InputError(f"canvas must be at least 1x1, got {width}x{height}")
    cy = np.arange(height, dtype=np.float64) + 0.5
    cx = np.arange(width, dtype=np.float64) + 0.5
    inside = np.zeros((height, width), dtype=bool)
    x0, y0 = pts[:, 0], pts[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    for ax, ay, bx, by in zip(x0, y0, x1, y1):
        if ay == by:
            continue
        # half-open in y so shared vertices count once
        rows = (cy >= min(ay, by)) & (cy < max(ay, by))
        if not rows.any():
            continue
        ys = cy[rows]
        xs = ax + (ys - ay) * (bx - ax) / (by - ay)
        inside[rows] ^= cx[None, :] < xs[:, None]
    return inside.astype(np.uint8)


def crop(m, box: BBox) -> np.ndarray:
    """Window of ``m`` under ``box``; parts outside the image are zero."""
    a = np.asarray(m)
    if a.ndim != 2:
        raise InputError(f"crop expects a 2D array, got shape {a.shape}")
    out = np.zeros((box.h, box.w), dtype=a.dtype)
    H, W = a.shape
    sx0, sy0 = max(box.x, 0), max(box.y, 0)
    sx1, sy1 = min(box.x1, W), min(box.y1, H)
    if sx0 < sx1 and sy0 < sy1:
        out[sy0 - box.y : sy1 - box.y, sx0 - box.x : sx1 - box.x] = a[sy0:sy1, sx0:sx1]
    return out


def _source_coords(n_out: int, n_in: int) -> np.ndarray:
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    return np.clip(src, 0.0, n_in - 1)


def resize_bilinear(m, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize with the half-pixel (align-corners-false) convention."""
    a = as_soft_map(m)
    if out_w < 1 or out_h < 1:
        raise InputError(f"output size must be >= 1, got {out_w}x{out_h}")
    h, w = a.shape
    if (h, w) == (out_h, out_w):
        return a.copy()
    sy = _source_coords(out_h, h)
    sx = _source_coords(out_w, w)
    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]
    top = a[y0][:, x0] * (1.0 - fx) + a[y0][:, x1] * fx
    bottom = a[y1][:, x0] * (1.0 - fx) + a[y1][:, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def resize_nearest(m, out_w: int, out_h: int) -> np.ndarray:
    a = as_binary_mask(m)
    if out_w < 1 or out_h < 1:
        raise InputError(f"output size must be >= 1, got {out_w}x{out_h}")
    h, w = a.shape
    ry = np.minimum(((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.intp), h - 1)
    rx = np.minimum(((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.intp), w - 1)
    return a[ry][:, rx].copy()


def mask_area(m) -> int:
    return int(np.count_nonzero(m))


def mask_iou(a, b) -> float:
    """Jaccard index; two empty masks agree perfectly (1.0)."""
    a = as_binary_mask(a, "a")
    b = as_binary_mask(b, "b")
    if a.shape != b.shape:
        raise InputError(f"mask shapes differ: {a.shape} vs {b.shape}")
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return inter / union


def tight_box(m) -> BBox | None:
    """Smallest box covering the foreground, or None for an empty mask."""
    rows = np.flatnonzero(np.asarray(m).any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(np.asarray(m).any(axis=0))
    return BBox(int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1))


_HEADER = struct.Struct("<4sII")


def _pack(magic: bytes, shape, payload: bytes) -> bytes:
    return _HEADER.pack(magic, shape[0], shape[1]) + payload


def _unpack(raw: bytes, magic: bytes, itemsize: int) -> tuple[int, int, bytes]:
    if len(raw) < _HEADER.size:
        raise FormatError(f"file too short for a {magic.decode()} header ({len(raw)} bytes)")
    got, h, w = _HEADER.unpack_from(raw)
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}")
    body = raw[_HEADER.size :]
    if len(body) != h * w * itemsize:
        raise FormatError(f"payload is {len(body)} bytes, expected {h * w * itemsize} for {h}x{w}")
    return h, w, body


def write_binary_mask(path, m) -> None:
    """Write a ``B2M1`` file: magic, u32 height, u32 width, one byte per pixel."""
    a = as_binary_mask(m)
    Path(path).write_bytes(_pack(b"B2M1", a.shape, a.tobytes(order="C")))


def read_binary_mask(path) -> np.ndarray:
    h, w, body = _unpack(Path(path).read_bytes(), b"B2M1", 1)
    a = np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()
    if a.max(initial=0) > 1:
        raise FormatError("B2M1 payload holds values other than 0 and 1")
    return a


def write_soft_map(path, m) -> None:
    """Write a ``B2F1`` file: the ``B2M1`` header followed by little-endian float32 values."""
    a = as_soft_map(m)
    Path(path).write_bytes(_pack(b"B2F1", a.shape, a.astype("<f4").tobytes(order="C")))


def read_soft_map(path) -> np.ndarray:
    h, w, body = _unpack(Path(path).read_bytes(), b"B2F1", 4)
    return np.frombuffer(body, dtype="<f4").reshape(h, w).astype(np.float64)
