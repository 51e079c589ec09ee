"""Mask quality targets, the unified mask score, greedy matching and re-ranking."""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._backend import kernels
from .boundary import DiceConfig, LaplacianConfig, boundary_score_for_masks
from .errors import InputError
from .masks import BBox, RleMask, as_binary_mask, crop, mask_iou, resize_bilinear, rle_decode, tight_box

__all__ = [
    "InstancePrediction",
    "GroundTruth",
    "ScoreBreakdown",
    "RERANK_MODES",
    "score_targets",
    "fuse_score",
    "iou_matrix",
    "match_predictions_to_gt",
    "score_breakdowns",
    "rerank",
]

RERANK_MODES = ("class_only", "oracle", "oracle_iou", "oracle_boundary", "external")


def _check_unit(name, v, allow_none=False):
    if v is None and allow_none:
        return
    if v is None or not (0.0 <= float(v) <= 1.0):
        raise InputError(f"{name} must lie in [0, 1], got {v!r}")


def _binary(mask) -> np.ndarray:
    if isinstance(mask, RleMask):
        return rle_decode(mask)
    return as_binary_mask(mask)


@dataclass(frozen=True)
class InstancePrediction:
    category: int
    box: BBox
    mask: object
    s_class: float
    s_iou: float | None = None
    s_boundary: float | None = None
    image_id: int = 0
    score: float | None = None

    def __post_init__(self):
        _check_unit("s_class", self.s_class)
        _check_unit("s_iou", self.s_iou, allow_none=True)
        _check_unit("s_boundary", self.s_boundary, allow_none=True)

    @property
    def ranking_score(self) -> float:
        return self.s_class if self.score is None else self.score

    def binary(self) -> np.ndarray:
        return _binary(self.mask)


@dataclass(frozen=True)
class GroundTruth:
    image_id: int
    category: int
    mask: object
    id: int = 0
    box: BBox | None = None

    def binary(self) -> np.ndarray:
        return _binary(self.mask)

    def bbox(self) -> BBox | None:
        return self.box if self.box is not None else tight_box(self.binary())


@dataclass(frozen=True)
class ScoreBreakdown:
    s_class: float
    s_iou: float
    s_boundary: float
    s_mask: float

    @classmethod
    def of(cls, s_class, s_iou, s_boundary) -> ScoreBreakdown:
        return cls(s_class, s_iou, s_boundary, fuse_score(s_class, s_iou, s_boundary))


def score_targets(
    pred: InstancePrediction,
    gt_mask,
    lcfg: LaplacianConfig | None = None,
    dcfg: DiceConfig | None = None,
    resolution: int | None = None,
) -> tuple[float, float]:
    """Regression targets (mask IoU, boundary Dice) measured inside the predicted box.

    ``resolution`` switches from the native box size to a fixed square
    resolution (crops resized bilinearly and re-binarized at 0.5).
    """
    p = crop(pred.binary(), pred.box)
    g = crop(as_binary_mask(gt_mask, "gt_mask"), pred.box)
    if resolution is not None:
        p = (resize_bilinear(p, resolution, resolution) >= 0.5).astype(np.uint8)
        g = (resize_bilinear(g, resolution, resolution) >= 0.5).astype(np.uint8)
    return mask_iou(p, g), boundary_score_for_masks(p, g, lcfg, dcfg)


def fuse_score(s_class: float, s_iou: float, s_boundary: float) -> float:
    """Unified mask score: class confidence times the geometric mean of the two quality scores."""
    _check_unit("s_class", s_class)
    _check_unit("s_iou", s_iou)
    _check_unit("s_boundary", s_boundary)
    return s_class * math.sqrt(s_iou * s_boundary)


def iou_matrix(pred_masks, gt_masks) -> np.ndarray:
    """Pairwise mask IoU, shape (len(pred_masks), len(gt_masks)); empty-vs-empty is 1."""
    if not pred_masks or not gt_masks:
        return np.zeros((len(pred_masks), len(gt_masks)), dtype=np.float64)
    P = np.stack([np.asarray(m, dtype=bool).ravel() for m in pred_masks]).astype(np.int64)
    G = np.stack([np.asarray(m, dtype=bool).ravel() for m in gt_masks]).astype(np.int64)
    inter = P @ G.T
    union = P.sum(1)[:, None] + G.sum(1)[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = inter / union
    out[union == 0] = 1.0
    return out


def match_predictions_to_gt(preds, gts, iou_threshold: float = 0.5) -> list[int]:
    """Greedy COCO-style matching within each (image, category) group.

    ``preds`` are visited in the given order, which callers sort by
    descending ranking score. Returns, per prediction, the index into ``gts``
    of its match or -1.
    """
    result = [-1] * len(preds)
    gt_groups = defaultdict(list)
    for j, g in enumerate(gts):
        gt_groups[(g.image_id, g.category)].append(j)
    pred_groups = defaultdict(list)
    for i, p in enumerate(preds):
        pred_groups[(p.image_id, p.category)].append(i)
    for key, pidx in pred_groups.items():
        gidx = gt_groups.get(key)
        if not gidx:
            continue
        ious = iou_matrix([preds[i].binary() for i in pidx], [gts[j].binary() for j in gidx])
        matched = kernels.greedy_match(ious, float(iou_threshold), np.zeros(len(gidx), dtype=np.uint8))
        for i, m in zip(pidx, matched):
            if m >= 0:
                result[i] = gidx[m]
    return result


def _sorted_by_score(preds):
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].ranking_score, i))
    return [preds[i] for i in order]


def _oracle_image(args):
    preds, gts, lcfg, dcfg, iou_threshold, resolution = args
    matches = match_predictions_to_gt(preds, gts, iou_threshold)
    out = []
    for p, m in zip(preds, matches):
        if m < 0:
            out.append((0.0, 0.0))
        else:
            out.append(score_targets(p, gts[m].binary(), lcfg, dcfg, resolution))
    return out


def score_breakdowns(
    preds,
    gts=None,
    mode: str = "oracle",
    lcfg: LaplacianConfig | None = None,
    dcfg: DiceConfig | None = None,
    iou_threshold: float = 0.5,
    resolution: int | None = None,
    jobs: int = 1,
) -> list[ScoreBreakdown]:
    """Per-prediction score breakdown, in input order.

    ``oracle`` measures true quality against the matched ground truth
    (unmatched predictions get zero quality); ``oracle_iou`` and
    ``oracle_boundary`` hold the other factor at 1. ``external`` fuses the
    ``s_iou``/``s_boundary`` already attached to each prediction and
    ``class_only`` holds both at 1.
    """
    if mode not in RERANK_MODES:
        raise InputError(f"unknown rerank mode {mode!r}; expected one of {RERANK_MODES}")
    preds = list(preds)
    if mode == "class_only":
        return [ScoreBreakdown(p.s_class, 1.0, 1.0, p.s_class) for p in preds]
    if mode == "external":
        out = []
        for i, p in enumerate(preds):
            if p.s_iou is None or p.s_boundary is None:
                missing = "s_iou" if p.s_iou is None else "s_boundary"
                raise InputError(f"prediction {i} lacks {missing}, required in external mode")
            out.append(ScoreBreakdown.of(p.s_class, p.s_iou, p.s_boundary))
        return out
    if gts is None:
        raise InputError(f"mode {mode!r} requires ground truths")
    targets = _oracle_targets(preds, list(gts), lcfg, dcfg, iou_threshold, resolution, jobs)
    out = []
    for p, (s_iou, s_b) in zip(preds, targets):
        if mode == "oracle_iou":
            s_b = 1.0
        elif mode == "oracle_boundary":
            s_iou = 1.0
        out.append(ScoreBreakdown.of(p.s_class, s_iou, s_b))
    return out


def rerank(
    preds,
    gts=None,
    mode: str = "class_only",
    lcfg: LaplacianConfig | None = None,
    dcfg: DiceConfig | None = None,
    iou_threshold: float = 0.5,
    resolution: int | None = None,
    jobs: int = 1,
) -> list[InstancePrediction]:
    """Attach ranking scores per ``mode`` (see :func:`score_breakdowns`) and sort by them, ties in input order."""
    preds = list(preds)
    parts = score_breakdowns(preds, gts, mode, lcfg, dcfg, iou_threshold, resolution, jobs)
    if mode == "class_only":
        scored = [replace(p, score=b.s_mask) for p, b in zip(preds, parts)]
    else:
        scored = [
            replace(p, s_iou=b.s_iou, s_boundary=b.s_boundary, score=b.s_mask)
            for p, b in zip(preds, parts)
        ]
    return _sorted_by_score(scored)


def _oracle_targets(preds, gts, lcfg, dcfg, iou_threshold, resolution, jobs):
    by_image = defaultdict(list)
    for i, p in enumerate(preds):
        by_image[p.image_id].append(i)
    gts_by_image = defaultdict(list)
    for g in gts:
        gts_by_image[g.image_id].append(g)
    images = sorted(by_image)
    tasks = []
    for img in images:
        idx = sorted(by_image[img], key=lambda i: (-preds[i].s_class, i))
        by_image[img] = idx
        tasks.append(([preds[i] for i in idx], gts_by_image.get(img, []), lcfg, dcfg, iou_threshold, resolution))
    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_oracle_image, tasks))
    else:
        results = [_oracle_image(t) for t in tasks]
    targets = [None] * len(preds)
    for img, res in zip(images, results):
        for i, t in zip(by_image[img], res):
            targets[i] = t
    return targets
