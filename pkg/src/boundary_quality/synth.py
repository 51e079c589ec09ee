"""Deterministic synthetic scenes and controlled prediction degradation.

All randomness comes from :class:`SplitMix64`, an integer-only generator, so
a given seed produces the same scenes on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import LaplacianConfig, extract_boundary
from .errors import GenerationError, InputError
from .masks import BBox, mask_area, rasterize_polygon, tight_box
from .scoring import GroundTruth, InstancePrediction

__all__ = [
    "SplitMix64",
    "derive_seed",
    "SceneSpec",
    "Scene",
    "DegradeSpec",
    "paint",
    "dilate",
    "erode",
    "generate_scene",
    "generate_corpus",
    "degrade",
    "degrade_corpus",
]

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Fold integer keys into a seed, giving independent streams per key tuple."""
    s = seed & _MASK64
    for k in keys:
        s = _mix64((s + _GAMMA + (k & _MASK64)) & _MASK64)
    return s


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        return _mix64(self.state)

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi], inclusive."""
        if hi < lo:
            raise InputError(f"empty range [{lo}, {hi}]")
        return lo + self.next_u64() % (hi - lo + 1)

    def normal(self) -> float:
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def uniform_array(self, n: int) -> np.ndarray:
        """``n`` consecutive uniforms, identical to ``n`` calls of :meth:`uniform`."""
        idx = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + idx * np.uint64(_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * _GAMMA) & _MASK64
        return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    width: int = 160
    height: int = 160
    min_instances: int = 2
    max_instances: int = 6
    shapes: tuple[str, ...] = ("rectangle", "ellipse", "polygon")
    num_categories: int = 3
    min_size: int = 6
    max_size: int = 150
    min_visible: int = 16
    max_attempts: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if self.width < 1 or self.height < 1:
            raise InputError(f"image size must be positive, got {self.width}x{self.height}")
        if not 1 <= self.min_instances <= self.max_instances:
            raise InputError(f"need 1 <= min_instances <= max_instances, got {self.min_instances}, {self.max_instances}")
        if not self.shapes or any(s not in ("rectangle", "ellipse", "polygon") for s in self.shapes):
            raise InputError(f"shapes must be drawn from rectangle/ellipse/polygon, got {self.shapes}")
        if self.num_categories < 1:
            raise InputError("num_categories must be >= 1")
        if not 1 <= self.min_size <= self.max_size:
            raise InputError(f"need 1 <= min_size <= max_size, got {self.min_size}, {self.max_size}")


@dataclass
class Scene:
    image_id: int
    width: int
    height: int
    instances: list[GroundTruth]
    footprints: list[dict] = field(default_factory=list)


def paint(footprints) -> list[np.ndarray]:
    """Visible masks under painter's order: later footprints cover earlier ones."""
    covered = None
    visible = []
    for fp in reversed(footprints):
        fp = np.asarray(fp, dtype=bool)
        if covered is None:
            covered = np.zeros_like(fp)
        visible.append((fp & ~covered).astype(np.uint8))
        covered |= fp
    return visible[::-1]


def dilate(m, radius: int) -> np.ndarray:
    """``radius`` steps of 4-neighbour dilation."""
    a = np.asarray(m, dtype=bool).copy()
    for _ in range(radius):
        b = a.copy()
        b[1:] |= a[:-1]
        b[:-1] |= a[1:]
        b[:, 1:] |= a[:, :-1]
        b[:, :-1] |= a[:, 1:]
        a = b
    return a.astype(np.uint8)


def erode(m, radius: int) -> np.ndarray:
    """``radius`` steps of 4-neighbour erosion; outside the image counts as background."""
    inv = 1 - np.pad(np.asarray(m, dtype=np.uint8), radius)
    grown = dilate(inv, radius)
    h, w = np.shape(m)
    return (1 - grown[radius : radius + h, radius : radius + w]).astype(np.uint8)


def _sample_shape(rng: SplitMix64, spec: SceneSpec):
    kind = spec.shapes[rng.randint(0, len(spec.shapes) - 1)]
    category = rng.randint(1, spec.num_categories)
    w = rng.randint(spec.min_size, min(spec.max_size, spec.width))
    h = rng.randint(spec.min_size, min(spec.max_size, spec.height))
    x = rng.randint(0, spec.width - w)
    y = rng.randint(0, spec.height - h)
    desc = {"kind": kind, "category": category, "x": x, "y": y, "w": w, "h": h}
    if kind == "rectangle":
        fp = np.zeros((spec.height, spec.width), dtype=np.uint8)
        fp[y : y + h, x : x + w] = 1
    elif kind == "ellipse":
        cy = np.arange(spec.height) + 0.5
        cx = np.arange(spec.width) + 0.5
        dy = (cy[:, None] - (y + h / 2)) / (h / 2)
        dx = (cx[None, :] - (x + w / 2)) / (w / 2)
        fp = (dx * dx + dy * dy <= 1.0).astype(np.uint8)
    else:
        k = rng.randint(3, 8)
        angles = sorted(rng.uniform() * 2 * math.pi for _ in range(k))
        pts = [
            (x + w / 2 + (w / 2) * math.cos(t), y + h / 2 + (h / 2) * math.sin(t))
            for t in angles
        ]
        desc["vertices"] = pts
        fp = rasterize_polygon(pts, spec.width, spec.height)
    return fp, desc


def generate_scene(spec: SceneSpec, image_id: int = 1) -> Scene:
    """Random occluding shapes; every kept instance keeps >= ``min_visible`` visible pixels."""
    rng = SplitMix64(derive_seed(spec.seed, image_id))
    target = rng.randint(spec.min_instances, spec.max_instances)
    footprints, descs = [], []
    attempts = 0
    while len(footprints) < target:
        if attempts >= spec.max_attempts:
            if len(footprints) >= spec.min_instances:
                break
            raise GenerationError(
                f"placed {len(footprints)} of at least {spec.min_instances} instances "
                f"after {spec.max_attempts} attempts (image {image_id})"
            )
        attempts += 1
        fp, desc = _sample_shape(rng, spec)
        visible = paint(footprints + [fp])
        if all(mask_area(v) >= spec.min_visible for v in visible):
            footprints.append(fp)
            descs.append(desc)
    visible = paint(footprints)
    instances = [
        GroundTruth(
            image_id=image_id,
            category=d["category"],
            mask=v,
            id=image_id * 1000 + k + 1,
            box=tight_box(v),
        )
        for k, (v, d) in enumerate(zip(visible, descs))
    ]
    return Scene(image_id, spec.width, spec.height, instances, descs)


def generate_corpus(spec: SceneSpec, num_scenes: int) -> list[Scene]:
    return [generate_scene(spec, image_id) for image_id in range(1, num_scenes + 1)]


@dataclass(frozen=True)
class DegradeSpec:
    """Boundary-band damage applied to ground truths to make predictions.

    With ``randomize`` each instance draws its own radius in [0, radius] and
    flip probability in [0, p_b); otherwise both are used as given.
    ``morph`` picks dilation, erosion, or a fair coin between them.
    """

    seed: int = 0
    p_b: float = 0.0
    radius: int = 0
    sigma_c: float = 0.0
    morph: str = "random"
    randomize: bool = False
    score_spread: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p_b <= 1.0:
            raise InputError(f"p_b must lie in [0, 1], got {self.p_b}")
        if self.radius not in (0, 1, 2):
            raise InputError(f"radius must be 0, 1 or 2, got {self.radius}")
        if not self.sigma_c >= 0:
            raise InputError(f"sigma_c must be >= 0, got {self.sigma_c}")
        if self.morph not in ("random", "dilate", "erode"):
            raise InputError(f"morph must be random, dilate or erode, got {self.morph!r}")
        if not 0.0 <= self.score_spread <= 1.0:
            raise InputError(f"score_spread must lie in [0, 1], got {self.score_spread}")


def degrade(gt: GroundTruth, spec: DegradeSpec, lcfg: LaplacianConfig | None = None) -> InstancePrediction:
    """Perturb a ground-truth mask inside the 2-pixel band around its boundary.

    The class score is ``clamp(1 - gap + noise)`` with ``gap`` drawn
    independently of the mask damage, so class confidence carries no
    information about mask quality.
    """
    rng = SplitMix64(derive_seed(spec.seed, gt.image_id, gt.id))
    m = gt.binary()
    radius = rng.randint(0, spec.radius) if spec.randomize else spec.radius
    coin = rng.uniform()
    op = spec.morph if spec.morph != "random" else ("dilate" if coin < 0.5 else "erode")
    p_b = spec.p_b * rng.uniform() if spec.randomize else spec.p_b
    gap = rng.uniform() * spec.score_spread
    noise = rng.normal() * spec.sigma_c

    band = dilate(extract_boundary(m, lcfg), 2).astype(bool)
    out = dilate(m, radius) if op == "dilate" else erode(m, radius)
    if p_b > 0:
        idx = np.flatnonzero(band)
        flips = rng.uniform_array(idx.size) < p_b
        flat = out.reshape(-1)
        flat[idx[flips]] ^= 1
    out = np.where(band, out, m).astype(np.uint8)

    box = tight_box(out) or gt.bbox() or BBox(0, 0, m.shape[1], m.shape[0])
    s_class = min(max(1.0 - gap + noise, 0.0), 1.0)
    return InstancePrediction(
        category=gt.category,
        box=box,
        mask=out,
        s_class=s_class,
        image_id=gt.image_id,
    )


def degrade_corpus(scenes, spec: DegradeSpec, lcfg: LaplacianConfig | None = None) -> list[InstancePrediction]:
    return [degrade(g, spec, lcfg) for s in scenes for g in s.instances]
