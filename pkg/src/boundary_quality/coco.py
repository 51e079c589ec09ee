"""COCO-style JSON corpora: ground-truth files and prediction lists."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import FormatError
from .masks import BBox, RleMask, rasterize_polygon, rle_compress, rle_decode, rle_decompress, rle_encode, tight_box
from .scoring import GroundTruth, InstancePrediction

__all__ = [
    "read_json",
    "write_json",
    "decode_segmentation",
    "encode_segmentation",
    "load_ground_truth",
    "load_predictions",
    "ground_truth_to_json",
    "predictions_to_json",
]


def read_json(path):
    """Parse a JSON file; a missing file raises ``OSError``, bad JSON raises FormatError."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from None


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def decode_segmentation(seg, height: int, width: int, what: str = "segmentation") -> np.ndarray:
    """RLE (list or compressed counts) or polygon list to a binary mask."""
    try:
        if isinstance(seg, dict):
            size = seg.get("size")
            counts = seg.get("counts")
            if not (isinstance(size, list) and len(size) == 2):
                raise FormatError("RLE 'size' must be [height, width]")
            if isinstance(counts, str):
                rle = rle_decompress(counts, size)
            elif isinstance(counts, list) and all(isinstance(c, int) for c in counts):
                rle = RleMask(tuple(size), counts)
            else:
                raise FormatError("RLE 'counts' must be a string or a list of integers")
            m = rle_decode(rle)
            if m.shape != (height, width):
                raise FormatError(f"RLE size {list(m.shape)} differs from image size {[height, width]}")
            return m
        if isinstance(seg, list) and seg:
            polys = seg if isinstance(seg[0], list) else [seg]
            out = np.zeros((height, width), dtype=np.uint8)
            for poly in polys:
                if len(poly) % 2:
                    raise FormatError("polygon has an odd number of coordinates")
                out |= rasterize_polygon(np.reshape(poly, (-1, 2)), width, height)
            return out
        raise FormatError("segmentation must be an RLE object or a nonempty polygon list")
    except FormatError as e:
        raise FormatError(f"{what}: {e}") from None
    except (TypeError, ValueError) as e:
        raise FormatError(f"{what}: {e}") from None


def encode_segmentation(mask) -> dict:
    rle = rle_encode(mask)
    return {"size": list(rle.size), "counts": rle_compress(rle)}


def _require(obj, key, what):
    if key not in obj:
        raise FormatError(f"{what}: missing field {key!r}")
    return obj[key]


def load_ground_truth(path) -> tuple[dict[int, tuple[int, int]], list[GroundTruth]]:
    """Returns image sizes ``{image_id: (width, height)}`` and the annotations."""
    data = read_json(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: ground truth must be a JSON object")
    images = {}
    for img in _require(data, "images", str(path)):
        images[int(_require(img, "id", "image"))] = (int(img["width"]), int(img["height"]))
    gts = []
    for ann in _require(data, "annotations", str(path)):
        ann_id = ann.get("id")
        what = f"annotation {ann_id}"
        image_id = int(_require(ann, "image_id", what))
        if image_id not in images:
            raise FormatError(f"{what}: unknown image_id {image_id}")
        w, h = images[image_id]
        mask = decode_segmentation(_require(ann, "segmentation", what), h, w, what)
        box = tight_box(mask)
        gts.append(
            GroundTruth(
                image_id=image_id,
                category=int(_require(ann, "category_id", what)),
                mask=mask,
                id=int(ann_id) if ann_id is not None else len(gts) + 1,
                box=box,
            )
        )
    return images, gts


def load_predictions(path, images: dict[int, tuple[int, int]] | None = None) -> list[InstancePrediction]:
    data = read_json(path)
    if not isinstance(data, list):
        raise FormatError(f"{path}: predictions must be a JSON array")
    preds = []
    for i, d in enumerate(data):
        what = f"prediction {i}"
        image_id = int(_require(d, "image_id", what))
        seg = _require(d, "segmentation", what)
        if isinstance(seg, dict) and "size" in seg:
            h, w = seg["size"]
        elif images and image_id in images:
            w, h = images[image_id]
        else:
            raise FormatError(f"{what}: polygon segmentation needs the image size from ground truth")
        mask = decode_segmentation(seg, h, w, what)
        bbox = _require(d, "bbox", what)
        if not (isinstance(bbox, list) and len(bbox) == 4):
            raise FormatError(f"{what}: bbox must be [x, y, w, h]")
        preds.append(
            InstancePrediction(
                category=int(_require(d, "category_id", what)),
                box=BBox.from_xywh(*bbox),
                mask=mask,
                s_class=float(_require(d, "score", what)),
                s_iou=None if d.get("s_iou") is None else float(d["s_iou"]),
                s_boundary=None if d.get("s_boundary") is None else float(d["s_boundary"]),
                image_id=image_id,
            )
        )
    return preds


def ground_truth_to_json(scenes, num_categories: int) -> dict:
    images = [{"id": s.image_id, "width": s.width, "height": s.height} for s in scenes]
    anns = []
    for s in scenes:
        for g in s.instances:
            m = g.binary()
            anns.append(
                {
                    "id": g.id,
                    "image_id": g.image_id,
                    "category_id": g.category,
                    "segmentation": encode_segmentation(m),
                    "area": int(m.sum()),
                    "bbox": g.bbox().to_list(),
                    "iscrowd": 0,
                }
            )
    cats = [{"id": c, "name": f"category_{c}"} for c in range(1, num_categories + 1)]
    return {"images": images, "annotations": anns, "categories": cats}


def predictions_to_json(preds, breakdowns=None) -> list[dict]:
    """Prediction records; ``breakdowns`` (one ScoreBreakdown per prediction) adds score fields."""
    out = []
    for k, p in enumerate(preds):
        rec = {
            "image_id": p.image_id,
            "category_id": p.category,
            "bbox": p.box.to_list(),
            "segmentation": encode_segmentation(p.binary()),
            "score": p.ranking_score,
        }
        if breakdowns is not None:
            b = breakdowns[k]
            rec.update(s_class=b.s_class, s_iou=b.s_iou, s_boundary=b.s_boundary, s_mask=b.s_mask)
        else:
            if p.s_iou is not None:
                rec["s_iou"] = p.s_iou
            if p.s_boundary is not None:
                rec["s_boundary"] = p.s_boundary
        out.append(rec)
    return out
