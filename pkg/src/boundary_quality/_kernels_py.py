"""Pure-Python / numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function. Used when the compiled
extension is unavailable or ``BQ_PURE_PYTHON`` is set.
"""

import numpy as np

from .errors import FormatError


def rle_encode(mask):
    """Column-major, background-first run lengths of a 2D {0,1} array."""
    flat = np.ascontiguousarray(mask, dtype=np.uint8).T.ravel()
    if flat.size == 0:
        return [0]
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    edges = np.concatenate(([0], change, [flat.size]))
    counts = np.diff(edges).tolist()
    if flat[0] == 1:
        counts.insert(0, 0)
    return counts


def rle_decode(counts, height, width):
    values = np.arange(len(counts), dtype=np.uint8) & 1
    flat = np.repeat(values, np.asarray(counts, dtype=np.int64))
    return np.ascontiguousarray(flat.reshape(width, height).T)


def rle_to_string(counts):
    out = []
    for i, x in enumerate(counts):
        x = int(x)
        if i > 2:
            x -= int(counts[i - 2])
        more = True
        while more:
            c = x & 0x1F
            x >>= 5
            more = x != -1 if c & 0x10 else x != 0
            if more:
                c |= 0x20
            out.append(chr(c + 48))
    return "".join(out)


def rle_from_string(text):
    counts = []
    p = 0
    n = len(text)
    while p < n:
        x = 0
        k = 0
        more = True
        while more:
            if p >= n:
                raise FormatError(f"truncated continuation at end of compressed counts (offset {p})")
            code = ord(text[p])
            if code < 48 or code > 111:
                raise FormatError(f"character {text[p]!r} at offset {p} outside code range 48..111")
            c = code - 48
            if k >= 12:
                raise FormatError(f"run length at offset {p} overflows 64 bits")
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            p += 1
            k += 1
            if not more and c & 0x10:
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        counts.append(x)
    return counts


def laplacian(image, eight):
    a = np.asarray(image, dtype=np.float64)
    h, w = a.shape
    p = np.zeros((h + 2, w + 2), dtype=np.float64)
    p[1:-1, 1:-1] = a
    out = p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
    if eight:
        out = out + p[:-2, :-2] + p[:-2, 2:] + p[2:, :-2] + p[2:, 2:]
        out -= 8.0 * a
    else:
        out -= 4.0 * a
    return out


def greedy_match(ious, threshold, gt_ignore):
    """Greedy assignment of score-ordered predictions to ground truths.

    Non-ignored ground truths are tried first; ties keep the lower index.
    Returns one ground-truth index per prediction, ``-1`` when unmatched.
    """
    ious = np.asarray(ious, dtype=np.float64)
    n_pred, n_gt = ious.shape
    ignore = np.asarray(gt_ignore, dtype=bool)
    taken = [False] * n_gt
    result = np.full(n_pred, -1, dtype=np.int64)
    for d in range(n_pred):
        row = ious[d]
        best = -1
        for want_ignored in (False, True):
            best_iou = threshold
            for g in range(n_gt):
                if taken[g] or bool(ignore[g]) != want_ignored:
                    continue
                v = row[g]
                if v >= best_iou and (best == -1 or v > best_iou):
                    best = g
                    best_iou = v
            if best != -1:
                break
        if best != -1:
            taken[best] = True
            result[d] = best
    return result
