"""Basis-head and scoring-head objectives with analytic gradients.

Every loss returns a :class:`LossReport` whose ``gradient`` is the derivative
with respect to the loss's first argument and has that argument's shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import LaplacianConfig, extract_boundary, laplacian
from .errors import InputError
from .masks import as_binary_mask, as_soft_map

__all__ = [
    "LossReport",
    "ObjectiveWeights",
    "sigmoid",
    "bce_loss",
    "dice_loss",
    "boundary_loss",
    "basis_objective",
    "scoring_regression_loss",
    "finite_difference_gradient",
    "max_relative_error",
]


@dataclass(frozen=True, eq=False)
class LossReport:
    value: float
    gradient: np.ndarray


@dataclass(frozen=True)
class ObjectiveWeights:
    w_bce: float = 1.0
    w_dice: float = 1.0
    w_boundary: float = 1.0

    def __post_init__(self):
        for name in ("w_bce", "w_dice", "w_boundary"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise InputError(f"{name} must be a finite nonnegative number, got {v!r}")


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _pair(pred, gt, pred_name):
    p = as_soft_map(pred, pred_name)
    g = as_binary_mask(gt, "gt").astype(np.float64)
    if p.shape != g.shape:
        raise InputError(f"{pred_name} shape {p.shape} does not match gt shape {g.shape}")
    return p, g


def bce_loss(pred_logits, gt) -> LossReport:
    """Mean binary cross-entropy on logits, evaluated as softplus(-z) + (1 - g) z."""
    z, g = _pair(pred_logits, gt, "pred_logits")
    per_pixel = np.logaddexp(0.0, -z) + (1.0 - g) * z
    n = z.size
    return LossReport(float(per_pixel.mean()), (sigmoid(z) - g) / n)


def _dice(p, g, eps):
    num = 2.0 * np.sum(p * g) + eps
    den = np.sum(p * p) + np.sum(g * g) + eps
    value = 1.0 - num / den
    grad = -(2.0 * g * den - 2.0 * p * num) / (den * den)
    return float(value), grad


def dice_loss(pred_probs, gt, eps: float = 1.0) -> LossReport:
    p, g = _pair(pred_probs, gt, "pred_probs")
    if p.min() < 0.0 or p.max() > 1.0:
        raise InputError("pred_probs must lie in [0, 1]")
    if not eps > 0:
        raise InputError(f"eps must be positive, got {eps!r}")
    return LossReport(*_dice(p, g, eps))


def _boundary(p, target, cfg, eps):
    response = laplacian(p, cfg)
    value, grad_mag = _dice(np.abs(response), target, eps)
    # laplacian with zero padding and a symmetric stencil is self-adjoint
    grad = laplacian(np.sign(response) * grad_mag, cfg)
    return value, grad


def boundary_loss(
    pred_probs,
    gt,
    lcfg: LaplacianConfig | None = None,
    eps: float = 1.0,
    boundary_gt=None,
) -> LossReport:
    """Dice loss between |Laplacian(pred)| and the binary boundary of ``gt``.

    ``boundary_gt`` overrides the target boundary (otherwise extracted from
    ``gt``). The subgradient at zero response is 0.
    """
    p, g = _pair(pred_probs, gt, "pred_probs")
    if not eps > 0:
        raise InputError(f"eps must be positive, got {eps!r}")
    target = _boundary_target(g, boundary_gt, lcfg)
    return LossReport(*_boundary(p, target, lcfg, eps))


def _boundary_target(g, boundary_gt, lcfg):
    if boundary_gt is None:
        return extract_boundary(g.astype(np.uint8), lcfg).astype(np.float64)
    b = as_binary_mask(boundary_gt, "boundary_gt").astype(np.float64)
    if b.shape != g.shape:
        raise InputError(f"boundary_gt shape {b.shape} does not match gt shape {g.shape}")
    return b


def basis_objective(
    pred_logits,
    gt,
    boundary_gt=None,
    weights: ObjectiveWeights | None = None,
    lcfg: LaplacianConfig | None = None,
    eps: float = 1.0,
) -> LossReport:
    """Weighted BCE + Dice + boundary loss on logits, differentiated through the sigmoid."""
    weights = weights or ObjectiveWeights()
    z, g = _pair(pred_logits, gt, "pred_logits")
    value = 0.0
    grad = np.zeros_like(z)
    if weights.w_bce:
        r = bce_loss(z, g.astype(np.uint8))
        value += weights.w_bce * r.value
        grad += weights.w_bce * r.gradient
    if weights.w_dice or weights.w_boundary:
        p = sigmoid(z)
        dp = p * (1.0 - p)
        if weights.w_dice:
            v, gp = _dice(p, g, eps)
            value += weights.w_dice * v
            grad += weights.w_dice * gp * dp
        if weights.w_boundary:
            v, gp = _boundary(p, _boundary_target(g, boundary_gt, lcfg), lcfg, eps)
            value += weights.w_boundary * v
            grad += weights.w_boundary * gp * dp
    return LossReport(float(value), grad)


def scoring_regression_loss(pred, target) -> LossReport:
    """Half squared error over the (s_iou, s_boundary) pair."""
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    t = np.asarray(target, dtype=np.float64).reshape(-1)
    if p.shape != (2,) or t.shape != (2,):
        raise InputError("pred and target must each be an (s_iou, s_boundary) pair")
    if not (np.all((p >= 0) & (p <= 1)) and np.all((t >= 0) & (t <= 1))):
        raise InputError(f"scores must lie in [0, 1], got pred={p.tolist()} target={t.tolist()}")
    d = p - t
    return LossReport(float(0.5 * np.sum(d * d)), d)


def finite_difference_gradient(fn, x, step: float = 1e-4, mask=None) -> np.ndarray:
    """Central differences of scalar ``fn`` at ``x``; entries where ``mask`` is False are left 0."""
    x = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    sel = np.ones(flat.size, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).reshape(-1)
    for i in np.flatnonzero(sel):
        orig = flat[i]
        flat[i] = orig + step
        up = fn(x)
        flat[i] = orig - step
        down = fn(x)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def max_relative_error(analytic, numeric, mask=None, floor: float = 1e-8) -> float:
    """max |a - n| / max(|a|, |n|, floor) over the selected entries."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    rel = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    if mask is not None:
        rel = rel[np.asarray(mask, dtype=bool)]
    return float(rel.max(initial=0.0))
