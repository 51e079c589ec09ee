"""Slow, independent reference computations used to check the fast paths.

Nothing here imports the package's numeric code; everything is loops over
Python scalars.
"""

import math
from fractions import Fraction


def runs_to_rows(counts, height, width):
    """Expand column-major runs by walking pixel positions one at a time."""
    rows = [[0] * width for _ in range(height)]
    pos = 0
    val = 0
    for n in counts:
        for _ in range(n):
            c, r = divmod(pos, height)
            rows[r][c] = val
            pos += 1
        val ^= 1
    return rows


def laplacian_loops(img, eight=False):
    h, w = len(img), len(img[0])

    def at(r, c):
        return img[r][c] if 0 <= r < h and 0 <= c < w else 0.0

    out = [[0.0] * w for _ in range(h)]
    for r in range(h):
        for c in range(w):
            if eight:
                s = sum(at(r + dr, c + dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0))
                out[r][c] = s - 8 * at(r, c)
            else:
                s = at(r - 1, c) + at(r + 1, c) + at(r, c - 1) + at(r, c + 1)
                out[r][c] = s - 4 * at(r, c)
    return out


def boundary_loops(mask, eight=False):
    lap = laplacian_loops([[float(v) for v in row] for row in mask], eight)
    return [[1 if v != 0 else 0 for v in row] for row in lap]


def dice_loops(a, b, eps=1.0):
    num = 0.0
    sa = 0.0
    sb = 0.0
    for ra, rb in zip(a, b):
        for x, y in zip(ra, rb):
            num += x * y
            sa += x * x
            sb += y * y
    return (2 * num + eps) / (sa + sb + eps)


def iou_loops(a, b):
    inter = union = 0
    for ra, rb in zip(a, b):
        for x, y in zip(ra, rb):
            inter += x and y
            union += x or y
    return 1.0 if union == 0 else inter / union


def crop_loops(mask, x, y, w, h):
    H, W = len(mask), len(mask[0])
    return [
        [mask[r][c] if 0 <= r < H and 0 <= c < W else 0 for c in range(x, x + w)]
        for r in range(y, y + h)
    ]


def bilinear_at(img, out_h, out_w, i, j):
    """Value of output pixel (i, j) of a half-pixel-convention bilinear resize."""
    h, w = len(img), len(img[0])
    sy = min(max((i + 0.5) * h / out_h - 0.5, 0.0), h - 1)
    sx = min(max((j + 0.5) * w / out_w - 0.5, 0.0), w - 1)
    y0, x0 = int(math.floor(sy)), int(math.floor(sx))
    y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
    fy, fx = sy - y0, sx - x0
    top = img[y0][x0] * (1 - fx) + img[y0][x1] * fx
    bot = img[y1][x0] * (1 - fx) + img[y1][x1] * fx
    return top * (1 - fy) + bot * fy


def assemble_loops(channels, logits, box, stride, res):
    """Per-pixel softmax blend of cropped basis channels, squashed with the logistic."""
    x, y, w, h = box
    bx0, by0 = x // stride, y // stride
    bx1, by1 = -(-(x + w) // stride), -(-(y + h) // stride)
    crops = [crop_loops(ch, bx0, by0, bx1 - bx0, by1 - by0) for ch in channels]
    out = [[0.0] * res for _ in range(res)]
    for i in range(res):
        for j in range(res):
            zs = [bilinear_at(lg, res, res, i, j) for lg in logits]
            m = max(zs)
            ws = [math.exp(z - m) for z in zs]
            tot = sum(ws)
            s = sum(wk / tot * bilinear_at(cr, res, res, i, j) for wk, cr in zip(ws, crops))
            out[i][j] = 1.0 / (1.0 + math.exp(-s))
    return out


def greedy_loops(ious, threshold):
    """Visit predictions in order; each takes the best free GT at or above threshold, lowest index on ties."""
    taken = set()
    out = []
    for row in ious:
        best, best_iou = -1, None
        for g, v in enumerate(row):
            if g in taken or v < threshold:
                continue
            if best_iou is None or v > best_iou:
                best, best_iou = g, v
        if best >= 0:
            taken.add(best)
        out.append(best)
    return out


def brute_force_ap(preds, gts, thresholds):
    """COCO-style AP by explicit PR enumeration.

    ``preds``: list of (image_id, category, mask_rows, score);
    ``gts``: list of (image_id, category, mask_rows).
    Returns (AP, {threshold: mean over categories}).
    """
    cats = sorted({p[1] for p in preds} | {g[1] for g in gts})
    per_t = {}
    for t in thresholds:
        vals = []
        for cat in cats:
            order = sorted(
                [i for i, p in enumerate(preds) if p[1] == cat],
                key=lambda i: (-preds[i][3], preds[i][0], i),
            )
            cat_gts = [j for j, g in enumerate(gts) if g[1] == cat]
            n_gt = len(cat_gts)
            if n_gt == 0 and not order:
                continue
            taken = set()
            hits = []
            for i in order:
                img = preds[i][0]
                best, best_iou = None, None
                for j in cat_gts:
                    if gts[j][0] != img or j in taken:
                        continue
                    v = iou_loops(preds[i][2], gts[j][2])
                    if v >= t and (best_iou is None or v > best_iou):
                        best, best_iou = j, v
                if best is not None:
                    taken.add(best)
                hits.append(best is not None)
            if n_gt == 0:
                vals.append(0.0)
                continue
            points = []
            for k in range(1, len(hits) + 1):
                tp = sum(hits[:k])
                points.append((Fraction(tp, n_gt), tp / k))
            interp = []
            for r in range(101):
                cands = [p for rec, p in points if rec >= Fraction(r, 100)]
                interp.append(max(cands) if cands else 0.0)
            vals.append(math.fsum(interp) / 101)
        per_t[t] = math.fsum(vals) / len(vals) if vals else None
    valid = [v for v in per_t.values() if v is not None]
    return (math.fsum(valid) / len(valid) if valid else 0.0), per_t
