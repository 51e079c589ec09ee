"""Batch command-line front end.

Exit codes: 0 success, 2 I/O, 3 malformed input data, 4 contract or
configuration violation, 5 internal error. Gradcheck exits 1 when a loss
exceeds the tolerance.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .blend import (
    append_boundary_basis,
    assemble_instance,
    paste_instance,
    read_attention_maps,
    read_basis_stack,
)
from .boundary import DiceConfig, LaplacianConfig, extract_boundary
from .coco import (
    ground_truth_to_json,
    load_ground_truth,
    load_predictions,
    predictions_to_json,
    read_json,
    write_json,
)
from .config import Config, load_config
from .errors import BoundaryQualityError, FormatError
from .evaluation import EXPERIMENT_MODES, evaluate_ap, experiment_rerank, format_table
from .gradcheck import run_gradcheck
from .masks import BBox, read_soft_map, write_binary_mask
from .scoring import RERANK_MODES, rerank, score_breakdowns
from .synth import DegradeSpec, SceneSpec, degrade_corpus, generate_corpus

GRAD_TOLERANCE = 1e-4

# fixed corpus for the re-ranking experiment
EXPERIMENT_DEGRADE = dict(p_b=0.3, radius=2, sigma_c=0.05, morph="random", randomize=True, score_spread=0.5)


def _lcfg(cfg: Config) -> LaplacianConfig:
    return LaplacianConfig(cfg.connectivity)


def _dcfg(cfg: Config) -> DiceConfig:
    return DiceConfig(cfg.epsilon)


def _require_file(path: str) -> str:
    if not Path(path).is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path


def _out_dir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_boundary(args, cfg: Config) -> int:
    _, gts = load_ground_truth(_require_file(args.gt))
    out = _out_dir(args.out)
    lcfg = _lcfg(cfg)
    for g in gts:
        write_binary_mask(out / f"{g.id}.b2m", extract_boundary(g.binary(), lcfg))
    print(f"wrote {len(gts)} boundary masks to {out}")
    return 0


def cmd_score(args, cfg: Config) -> int:
    images, gts = load_ground_truth(_require_file(args.gt)) if args.gt else ({}, None)
    preds = load_predictions(_require_file(args.pred), images)
    parts = score_breakdowns(
        preds, gts, args.mode, _lcfg(cfg), _dcfg(cfg), jobs=cfg.workers,
    )
    records = predictions_to_json(preds, parts)
    write_json(args.out, records)
    mean = float(np.mean([b.s_mask for b in parts])) if parts else 0.0
    print(f"scored {len(parts)} predictions ({args.mode}); mean s_mask {mean:.4f}")
    return 0


def cmd_rerank(args, cfg: Config) -> int:
    images, gts = load_ground_truth(_require_file(args.gt)) if args.gt else ({}, None)
    preds = load_predictions(_require_file(args.pred), images)
    ranked = rerank(preds, gts, args.mode, _lcfg(cfg), _dcfg(cfg), jobs=cfg.workers)
    write_json(args.out, predictions_to_json(ranked))
    print(f"reranked {len(ranked)} predictions ({args.mode})")
    return 0


def cmd_eval(args, cfg: Config) -> int:
    images, gts = load_ground_truth(_require_file(args.gt))
    preds = load_predictions(_require_file(args.pred), images)
    result = evaluate_ap(preds, gts, cfg.ap_thresholds)
    write_json(args.out, result.to_dict())
    print(format_table({"predictions": result}))
    return 0


def cmd_blend(args, cfg: Config) -> int:
    stack = read_basis_stack(_require_file(args.basis), stride=args.stride)
    if args.boundary:
        stack = append_boundary_basis(stack, read_soft_map(_require_file(args.boundary)))
    maps = read_attention_maps(_require_file(args.attention))
    boxes = read_json(_require_file(args.boxes))
    if not isinstance(boxes, list) or len(boxes) != len(maps):
        raise FormatError(f"{args.boxes}: expected a list of {len(maps)} [x, y, w, h] boxes")
    out = _out_dir(args.out)
    summary = []
    for k, (att, b) in enumerate(zip(maps, boxes)):
        if not (isinstance(b, list) and len(b) == 4):
            raise FormatError(f"{args.boxes}: box {k} must be [x, y, w, h]")
        box = BBox.from_xywh(*b)
        prob = assemble_instance(stack, att, box, cfg.assembly_resolution)
        mask = paste_instance(prob, box, args.width, args.height)
        write_binary_mask(out / f"instance_{k}.b2m", mask)
        summary.append({"index": k, "bbox": box.to_list(), "area": int(mask.sum())})
    write_json(out / "blend.json", {"channels": stack.num_channels, "instances": summary})
    print(f"assembled {len(summary)} instances from {stack.num_channels} basis channels")
    return 0


def _degrade_spec(args, seed) -> DegradeSpec:
    return DegradeSpec(
        seed=seed,
        p_b=args.p_b,
        radius=args.radius,
        sigma_c=args.sigma_c,
        morph="random",
        randomize=True,
    )


def cmd_synth(args, cfg: Config) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    spec = SceneSpec(seed=seed, width=args.size, height=args.size)
    scenes = generate_corpus(spec, args.scenes)
    preds = degrade_corpus(scenes, _degrade_spec(args, seed), _lcfg(cfg))
    out = _out_dir(args.out)
    write_json(out / "gt.json", ground_truth_to_json(scenes, spec.num_categories))
    write_json(out / "pred.json", predictions_to_json(preds))
    n = sum(len(s.instances) for s in scenes)
    print(f"wrote {len(scenes)} scenes, {n} instances, {len(preds)} predictions to {out}")
    return 0


def cmd_experiment(args, cfg: Config) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    degrade_spec = DegradeSpec(seed=seed, **EXPERIMENT_DEGRADE)
    results = experiment_rerank(
        SceneSpec(seed=seed), args.scenes, degrade_spec, EXPERIMENT_MODES,
        _lcfg(cfg), _dcfg(cfg), cfg.ap_thresholds, jobs=cfg.workers,
    )
    table = format_table(results)
    payload = {
        "scenes": args.scenes,
        "seed": seed,
        "degrade": asdict(degrade_spec),
        "results": {m: r.to_dict() for m, r in results.items()},
    }
    write_json(args.out, payload)
    if args.table:
        Path(args.table).write_text(table + "\n")
    print(table)
    return 0


def cmd_gradcheck(args, cfg: Config) -> int:
    errors = run_gradcheck(instances=args.instances, step=args.step, seed=args.seed, lcfg=_lcfg(cfg))
    ok = all(v < GRAD_TOLERANCE for v in errors.values())
    if args.out:
        write_json(args.out, {"tolerance": GRAD_TOLERANCE, "max_relative_error": errors, "passed": ok})
    for name, v in errors.items():
        print(f"{name:<10} {v:.3e}  {'ok' if v < GRAD_TOLERANCE else 'FAIL'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    parser.add_argument("--config", help="JSON config file (default: $B2_CONFIG)")
    parser.add_argument("--jobs", type=int, help="worker threads; 0 = all cores")
    parser.add_argument("--connectivity", choices=("four", "eight"))
    parser.add_argument("--epsilon", type=float)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("boundary", help="write one B2M1 boundary mask per annotation")
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("score", help="attach s_iou / s_boundary / s_mask to predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt")
    p.add_argument("--mode", choices=("oracle", "external"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rerank", help="reorder predictions by a ranking mode")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt")
    p.add_argument("--mode", choices=RERANK_MODES, default="oracle")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("eval", help="COCO-style mask AP")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("blend", help="assemble instance masks from a basis stack and attention maps")
    p.add_argument("--basis", required=True, help="B2S1 basis stack")
    p.add_argument("--attention", required=True, help="B2A1 attention records")
    p.add_argument("--boxes", required=True, help="JSON list of [x, y, w, h], one per attention record")
    p.add_argument("--boundary", help="B2F1 boundary map appended as an extra basis channel")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_blend)

    p = sub.add_parser("synth", help="generate a synthetic GT corpus and degraded predictions")
    p.add_argument("--seed", type=int)
    p.add_argument("--scenes", type=int, default=20)
    p.add_argument("--size", type=int, default=160)
    p.add_argument("--p-b", dest="p_b", type=float, default=0.3)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--sigma-c", dest="sigma_c", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="compare ranking modes on a synthetic corpus")
    p.add_argument("--seed", type=int)
    p.add_argument("--scenes", type=int, default=200)
    p.add_argument("--out", required=True)
    p.add_argument("--table", help="also write the plain-text table here")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("gradcheck", help="finite-difference check of all loss gradients")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.config, jobs=args.jobs, connectivity=args.connectivity, epsilon=args.epsilon
        )
        return args.func(args, cfg)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except BoundaryQualityError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
