# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

from .errors import FormatError

cnp.import_array()


def rle_encode(mask):
    cdef const unsigned char[:, :] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1], r, c
    cdef unsigned char cur = 0, v
    cdef long long run = 0
    counts = []
    for c in range(w):
        for r in range(h):
            v = m[r, c]
            if v != cur:
                counts.append(run)
                run = 0
                cur = v
            run += 1
    counts.append(run)
    return counts


def rle_decode(counts, Py_ssize_t height, Py_ssize_t width):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.zeros((height, width), dtype=np.uint8)
    cdef unsigned char[:, :] o = out
    cdef Py_ssize_t pos = 0, i, j, n, r, c
    cdef unsigned char val = 0
    for i in range(len(counts)):
        n = counts[i]
        if val:
            for j in range(pos, pos + n):
                c = j // height
                r = j - c * height
                o[r, c] = 1
        pos += n
        val ^= 1
    return out


def rle_to_string(counts):
    cdef Py_ssize_t i, m = len(counts)
    cdef long long x
    cdef long long[:] cnts = np.asarray(counts, dtype=np.int64).reshape(-1)
    cdef int c, more
    cdef bytearray buf = bytearray()
    for i in range(m):
        x = cnts[i]
        if i > 2:
            x -= cnts[i - 2]
        more = 1
        while more:
            c = <int>(x & 0x1F)
            x >>= 5
            if c & 0x10:
                more = x != -1
            else:
                more = x != 0
            if more:
                c |= 0x20
            buf.append(c + 48)
    return buf.decode("ascii")


def rle_from_string(str text):
    cdef bytes raw = text.encode("utf-8")
    cdef const unsigned char* s = raw
    cdef Py_ssize_t n = len(raw), p = 0, m
    cdef long long x
    cdef int k, c, more
    counts = []
    if n != len(text):
        for p in range(len(text)):
            if not 48 <= ord(text[p]) <= 111:
                raise FormatError(
                    f"character {text[p]!r} at offset {p} outside code range 48..111"
                )
    while p < n:
        x = 0
        k = 0
        more = 1
        while more:
            if p >= n:
                raise FormatError(f"truncated continuation at end of compressed counts (offset {p})")
            c = s[p]
            if c < 48 or c > 111:
                raise FormatError(f"character {chr(c)!r} at offset {p} outside code range 48..111")
            c -= 48
            if k >= 12:
                raise FormatError(f"run length at offset {p} overflows 64 bits")
            x |= (<long long>(c & 0x1F)) << (5 * k)
            more = c & 0x20
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= (<long long>-1) << (5 * k)
        m = len(counts)
        if m > 2:
            x += <long long>counts[m - 2]
        counts.append(x)
    return counts


def laplacian(image, bint eight):
    cdef const double[:, :] a = np.ascontiguousarray(image, dtype=np.float64)
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1], r, c
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((h, w), dtype=np.float64)
    cdef double[:, :] o = out
    cdef double acc
    for r in range(h):
        for c in range(w):
            acc = 0.0
            if r > 0:
                acc += a[r - 1, c]
            if r < h - 1:
                acc += a[r + 1, c]
            if c > 0:
                acc += a[r, c - 1]
            if c < w - 1:
                acc += a[r, c + 1]
            if eight:
                if r > 0 and c > 0:
                    acc += a[r - 1, c - 1]
                if r > 0 and c < w - 1:
                    acc += a[r - 1, c + 1]
                if r < h - 1 and c > 0:
                    acc += a[r + 1, c - 1]
                if r < h - 1 and c < w - 1:
                    acc += a[r + 1, c + 1]
                o[r, c] = acc - 8.0 * a[r, c]
            else:
                o[r, c] = acc - 4.0 * a[r, c]
    return out


def greedy_match(ious, double threshold, gt_ignore):
    cdef const double[:, :] m = np.ascontiguousarray(ious, dtype=np.float64)
    cdef const unsigned char[:] ign = np.ascontiguousarray(gt_ignore, dtype=np.uint8)
    cdef Py_ssize_t n_pred = m.shape[0], n_gt = m.shape[1], d, g, best
    cdef int pass_ignored
    cdef double best_iou, v
    cdef cnp.ndarray[cnp.int64_t, ndim=1] result = np.full(n_pred, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] taken_arr = np.zeros(n_gt, dtype=np.uint8)
    cdef unsigned char[:] taken = taken_arr
    for d in range(n_pred):
        best = -1
        for pass_ignored in range(2):
            best_iou = threshold
            for g in range(n_gt):
                if taken[g] or (ign[g] != 0) != (pass_ignored != 0):
                    continue
                v = m[d, g]
                if v >= best_iou and (best == -1 or v > best_iou):
                    best = g
                    best_iou = v
            if best != -1:
                break
        if best != -1:
            taken[best] = 1
            result[d] = best
    return result
