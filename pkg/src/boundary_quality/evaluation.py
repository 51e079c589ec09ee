"""COCO-style mask AP and the re-ranking experiment on synthetic corpora."""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .boundary import DiceConfig, LaplacianConfig
from .errors import InputError
from .scoring import iou_matrix, rerank
from .synth import DegradeSpec, SceneSpec, degrade_corpus, generate_corpus

__all__ = [
    "COCO_THRESHOLDS",
    "AREA_RANGES",
    "EvalResult",
    "interpolated_ap",
    "evaluate_ap",
    "EXPERIMENT_MODES",
    "experiment_rerank",
    "format_table",
]

COCO_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
AREA_RANGES = {"small": (0, 32**2), "medium": (32**2, 96**2), "large": (96**2, float("inf"))}
RECALL_POINTS = 101


@dataclass
class EvalResult:
    ap: float
    ap50: float | None
    ap75: float | None
    per_category: dict[int, float]
    aps: float | None = None
    apm: float | None = None
    apl: float | None = None
    per_threshold: dict[float, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "AP": self.ap,
            "AP50": self.ap50,
            "AP75": self.ap75,
            "APs": self.aps,
            "APm": self.apm,
            "APl": self.apl,
            "per_category": {str(k): v for k, v in sorted(self.per_category.items())},
            "per_threshold": {f"{k:.2f}": v for k, v in sorted(self.per_threshold.items())},
        }


def interpolated_ap(tp_flags, n_gt: int) -> float:
    """101-point interpolated AP of a ranked list of true/false positives.

    Recall point k/100 is reached when ``100 * tp >= k * n_gt``; the
    comparison is done in integers so no recall point is lost to rounding.
    """
    tp_flags = np.asarray(tp_flags, dtype=bool)
    if n_gt == 0 or tp_flags.size == 0:
        return 0.0
    tp = np.cumsum(tp_flags, dtype=np.int64)
    ranks = np.arange(1, tp.size + 1, dtype=np.int64)
    precision = tp / ranks
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    ks = np.arange(RECALL_POINTS, dtype=np.int64)
    # first rank whose recall reaches each point; tp is nondecreasing
    first = np.searchsorted(100 * tp, ks * n_gt, side="left")
    vals = np.where(first < tp.size, envelope[np.minimum(first, tp.size - 1)], 0.0)
    return math.fsum(vals.tolist()) / RECALL_POINTS


def _mean(values):
    values = list(values)
    return math.fsum(values) / len(values) if values else None


def _group(items, key):
    out = defaultdict(list)
    for i, it in enumerate(items):
        out[key(it)].append(i)
    return out


def _category_tables(preds, gts, thresholds, area_range, pred_areas, gt_areas, ious_cache):
    """AP per (threshold, category); categories with neither GT nor predictions are absent."""
    lo, hi = area_range
    preds_by = _group(preds, lambda p: (p.category, p.image_id))
    gts_by = _group(gts, lambda g: (g.category, g.image_id))
    categories = sorted({k[0] for k in preds_by} | {k[0] for k in gts_by})
    table = {t: {} for t in thresholds}
    for cat in categories:
        images = sorted({k[1] for k in preds_by if k[0] == cat} | {k[1] for k in gts_by if k[0] == cat})
        n_gt = 0
        per_image = []
        for img in images:
            pidx = sorted(preds_by.get((cat, img), []), key=lambda i: (-preds[i].ranking_score, i))
            gidx = gts_by.get((cat, img), [])
            g_ignore = np.array([not (lo <= gt_areas[j] <= hi) for j in gidx], dtype=np.uint8)
            n_gt += int(len(gidx) - g_ignore.sum())
            ious = ious_cache.get((cat, img))
            if ious is None:
                ious = iou_matrix([preds[i].binary() for i in pidx], [gts[j].binary() for j in gidx])
                ious_cache[(cat, img)] = ious
            per_image.append((img, pidx, g_ignore, ious))
        n_pred_in_range = sum(1 for _, pidx, _, _ in per_image for i in pidx if lo <= pred_areas[i] <= hi)
        if n_gt == 0 and n_pred_in_range == 0:
            continue
        for t in thresholds:
            ranked = []
            for img, pidx, g_ignore, ious in per_image:
                if pidx and len(g_ignore):
                    match = kernels.greedy_match(ious, float(t), g_ignore)
                else:
                    match = np.full(len(pidx), -1, dtype=np.int64)
                for i, m in zip(pidx, match):
                    if m >= 0:
                        ignored = bool(g_ignore[m])
                    else:
                        ignored = not (lo <= pred_areas[i] <= hi)
                    if not ignored:
                        ranked.append((-preds[i].ranking_score, img, i, m >= 0))
            ranked.sort(key=lambda r: r[:3])
            table[t][cat] = interpolated_ap([r[3] for r in ranked], n_gt) if n_gt else 0.0
    return table, categories


def _summarize(table, thresholds):
    per_threshold = {t: _mean(table[t].values()) for t in thresholds}
    valid = [v for v in per_threshold.values() if v is not None]
    return _mean(valid), per_threshold


def evaluate_ap(preds, gts, thresholds=COCO_THRESHOLDS, area_ranges=None) -> EvalResult:
    """Mask AP averaged over categories, then over IoU thresholds.

    Predictions are ranked by ``ranking_score`` (ties: image id, then input
    order). A category with ground truth but no predictions scores 0, as
    does one with predictions but no ground truth; a category with neither
    is skipped.
    """
    thresholds = tuple(float(t) for t in thresholds)
    if not thresholds or any(not 0.0 <= t <= 1.0 for t in thresholds):
        raise InputError(f"IoU thresholds must be a nonempty list within [0, 1], got {thresholds}")
    preds = list(preds)
    gts = list(gts)
    area_ranges = AREA_RANGES if area_ranges is None else area_ranges
    pred_areas = [int(np.count_nonzero(p.binary())) for p in preds]
    gt_areas = [int(np.count_nonzero(g.binary())) for g in gts]
    cache: dict = {}

    table, categories = _category_tables(
        preds, gts, thresholds, (-math.inf, math.inf), pred_areas, gt_areas, cache
    )
    ap, per_threshold = _summarize(table, thresholds)
    per_category = {}
    for cat in categories:
        vals = [table[t][cat] for t in thresholds if cat in table[t]]
        if vals:
            per_category[cat] = _mean(vals)

    by_area = {}
    for name, rng in area_ranges.items():
        t_area, _ = _category_tables(preds, gts, thresholds, rng, pred_areas, gt_areas, cache)
        by_area[name], _ = _summarize(t_area, thresholds)

    return EvalResult(
        ap=0.0 if ap is None else ap,
        ap50=per_threshold.get(0.5),
        ap75=per_threshold.get(0.75),
        per_category=per_category,
        aps=by_area.get("small"),
        apm=by_area.get("medium"),
        apl=by_area.get("large"),
        per_threshold=per_threshold,
    )


EXPERIMENT_MODES = ("class_only", "oracle_iou", "oracle_boundary", "oracle")


def experiment_rerank(
    scene_spec: SceneSpec,
    num_scenes: int,
    degrade_spec: DegradeSpec,
    modes=EXPERIMENT_MODES,
    lcfg: LaplacianConfig | None = None,
    dcfg: DiceConfig | None = None,
    thresholds=COCO_THRESHOLDS,
    jobs: int = 1,
) -> dict[str, EvalResult]:
    """Evaluate one fixed set of degraded predictions under several ranking modes."""
    scenes = generate_corpus(scene_spec, num_scenes)
    gts = [g for s in scenes for g in s.instances]
    preds = degrade_corpus(scenes, degrade_spec, lcfg)

    def run(mode):
        ranked = rerank(preds, gts, mode=mode, lcfg=lcfg, dcfg=dcfg)
        return evaluate_ap(ranked, gts, thresholds)

    modes = list(modes)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(run, modes))
    else:
        results = [run(m) for m in modes]
    return dict(zip(modes, results))


def _fmt(v):
    return "   -  " if v is None else f"{100 * v:6.2f}"


def format_table(results: dict[str, EvalResult]) -> str:
    """Aligned plain-text table, one row per mode, values in percent."""
    cols = ("AP", "AP50", "AP75", "APs", "APm", "APl")
    width = max([len("mode")] + [len(m) for m in results])
    lines = [f"{'mode':<{width}}  " + "  ".join(f"{c:>6}" for c in cols)]
    for mode, r in results.items():
        vals = (r.ap, r.ap50, r.ap75, r.aps, r.apm, r.apl)
        lines.append(f"{mode:<{width}}  " + "  ".join(_fmt(v) for v in vals))
    return "\n".join(lines)
