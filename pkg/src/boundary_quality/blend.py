"""Basis assembly: per-instance masks from global basis channels and spatial attention.

Each channel of a :class:`BasisStack` is cropped to the instance box, resized
to a common resolution and blended with per-pixel softmax weights taken from
the instance's attention logits. An image-level boundary map can ride along as
one extra channel.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError, StateError
from .losses import sigmoid
from .masks import BBox, as_soft_map, crop, resize_bilinear

__all__ = [
    "BasisStack",
    "AttentionMap",
    "append_boundary_basis",
    "basis_box",
    "attention_weights",
    "assemble_instance",
    "paste_instance",
    "write_basis_stack",
    "read_basis_stack",
    "write_attention_maps",
    "read_attention_maps",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class BasisStack:
    """``channels`` has shape (C, H_b, W_b); with ``has_boundary_channel`` the last one is the boundary basis."""

    channels: np.ndarray
    stride: int = 4
    has_boundary_channel: bool = False

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float64)
        if ch.ndim != 3 or min(ch.shape) < 1:
            raise InputError(f"basis channels must have shape (C, H, W) with C, H, W >= 1, got {ch.shape}")
        if not np.isfinite(ch).all():
            raise InputError("basis channels contain NaN or infinite values")
        if self.stride < 1:
            raise InputError(f"stride must be >= 1, got {self.stride}")
        object.__setattr__(self, "channels", _frozen(ch))

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def num_mask_bases(self) -> int:
        return self.num_channels - int(self.has_boundary_channel)

    @property
    def shape(self) -> tuple[int, int]:
        return self.channels.shape[1], self.channels.shape[2]


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """Per-instance attention logits of shape (C, r, r)."""

    logits: np.ndarray

    def __post_init__(self):
        lg = np.asarray(self.logits, dtype=np.float64)
        if lg.ndim != 3 or lg.shape[1] != lg.shape[2] or min(lg.shape) < 1:
            raise InputError(f"attention logits must have shape (C, r, r), got {lg.shape}")
        if not np.isfinite(lg).all():
            raise InputError("attention logits contain NaN or infinite values")
        object.__setattr__(self, "logits", _frozen(lg))

    @property
    def num_channels(self) -> int:
        return self.logits.shape[0]

    @property
    def resolution(self) -> int:
        return self.logits.shape[1]


def append_boundary_basis(stack: BasisStack, boundary) -> BasisStack:
    if stack.has_boundary_channel:
        raise StateError("basis stack already carries a boundary channel")
    b = as_soft_map(boundary, "boundary")
    if b.shape != stack.shape:
        raise InputError(f"boundary map is {b.shape}, basis channels are {stack.shape}")
    channels = np.concatenate([stack.channels, b[None]], axis=0)
    return BasisStack(channels, stride=stack.stride, has_boundary_channel=True)


def basis_box(box: BBox, stride: int) -> BBox:
    """Image-space box mapped onto the basis grid, rounded outward."""
    x0 = box.x // stride
    y0 = box.y // stride
    x1 = -(-box.x1 // stride)
    y1 = -(-box.y1 // stride)
    return BBox(x0, y0, max(x1 - x0, 1), max(y1 - y0, 1))


def attention_weights(att: AttentionMap, out_res: int) -> np.ndarray:
    """Per-pixel softmax over channels of the bilinearly upsampled logits, shape (C, R, R)."""
    up = np.stack([resize_bilinear(c, out_res, out_res) for c in att.logits])
    up = up - up.max(axis=0, keepdims=True)
    e = np.exp(up)
    return e / e.sum(axis=0, keepdims=True)


def assemble_instance(stack: BasisStack, att: AttentionMap, box: BBox, out_res: int = 56) -> np.ndarray:
    """R x R mask probabilities for one instance."""
    if att.num_channels != stack.num_channels:
        raise InputError(
            f"attention has {att.num_channels} channels, basis stack has {stack.num_channels}"
        )
    if out_res < 1:
        raise InputError(f"out_res must be >= 1, got {out_res}")
    bb = basis_box(box, stack.stride)
    crops = np.stack([resize_bilinear(crop(c, bb), out_res, out_res) for c in stack.channels])
    weights = attention_weights(att, out_res)
    blended = (weights * crops).sum(axis=0)
    return sigmoid(blended)


def paste_instance(prob, box: BBox, image_w: int, image_h: int, threshold: float = 0.5) -> np.ndarray:
    """Resize probabilities to the box, place them on an image-sized canvas, binarize."""
    p = as_soft_map(prob, "prob")
    if image_w < 1 or image_h < 1:
        raise InputError(f"image size must be >= 1, got {image_w}x{image_h}")
    resized = resize_bilinear(p, box.w, box.h)
    out = np.zeros((image_h, image_w), dtype=np.uint8)
    x0, y0 = max(box.x, 0), max(box.y, 0)
    x1, y1 = min(box.x1, image_w), min(box.y1, image_h)
    if x0 < x1 and y0 < y1:
        window = resized[y0 - box.y : y1 - box.y, x0 - box.x : x1 - box.x]
        out[y0:y1, x0:x1] = window >= threshold
    return out


_STACK_HEADER = struct.Struct("<4sIII")


def write_basis_stack(path, stack: BasisStack) -> None:
    """``B2S1``: magic, u32 C, H_b, W_b, channel-major float32 values, one flag byte."""
    c = stack.num_channels
    h, w = stack.shape
    payload = stack.channels.astype("<f4").tobytes(order="C")
    flag = b"\x01" if stack.has_boundary_channel else b"\x00"
    Path(path).write_bytes(_STACK_HEADER.pack(b"B2S1", c, h, w) + payload + flag)


def read_basis_stack(path, stride: int = 4) -> BasisStack:
    raw = Path(path).read_bytes()
    if len(raw) < _STACK_HEADER.size + 1:
        raise FormatError(f"{path}: too short for a B2S1 basis stack")
    magic, c, h, w = _STACK_HEADER.unpack_from(raw)
    if magic != b"B2S1":
        raise FormatError(f"{path}: bad magic {magic!r}, expected b'B2S1'")
    n = c * h * w * 4
    if len(raw) != _STACK_HEADER.size + n + 1:
        raise FormatError(f"{path}: expected {_STACK_HEADER.size + n + 1} bytes, found {len(raw)}")
    flag = raw[-1]
    if flag not in (0, 1):
        raise FormatError(f"{path}: boundary flag byte must be 0 or 1, got {flag}")
    values = np.frombuffer(raw, dtype="<f4", count=c * h * w, offset=_STACK_HEADER.size)
    return BasisStack(values.reshape(c, h, w), stride=stride, has_boundary_channel=bool(flag))


def write_attention_maps(path, maps) -> None:
    """``B2A1``: magic, u32 record count, then per record u32 C, u32 r and C*r*r float32 logits."""
    parts = [struct.pack("<4sI", b"B2A1", len(maps))]
    for a in maps:
        parts.append(struct.pack("<II", a.num_channels, a.resolution))
        parts.append(a.logits.astype("<f4").tobytes(order="C"))
    Path(path).write_bytes(b"".join(parts))


def read_attention_maps(path) -> list[AttentionMap]:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise FormatError(f"{path}: too short for a B2A1 attention file")
    magic, n = struct.unpack_from("<4sI", raw)
    if magic != b"B2A1":
        raise FormatError(f"{path}: bad magic {magic!r}, expected b'B2A1'")
    off = 8
    out = []
    for k in range(n):
        if off + 8 > len(raw):
            raise FormatError(f"{path}: record {k} header truncated")
        c, r = struct.unpack_from("<II", raw, off)
        off += 8
        size = c * r * r
        if off + 4 * size > len(raw):
            raise FormatError(f"{path}: record {k} payload truncated")
        logits = np.frombuffer(raw, dtype="<f4", count=size, offset=off).reshape(c, r, r)
        out.append(AttentionMap(logits))
        off += 4 * size
    if off != len(raw):
        raise FormatError(f"{path}: {len(raw) - off} trailing bytes after {n} records")
    return out

