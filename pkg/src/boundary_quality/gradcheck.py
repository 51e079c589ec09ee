"""Finite-difference verification of every loss gradient on random instances."""

from __future__ import annotations

import numpy as np

from .boundary import LaplacianConfig, laplacian
from .losses import (
    ObjectiveWeights,
    basis_objective,
    bce_loss,
    boundary_loss,
    dice_loss,
    finite_difference_gradient,
    max_relative_error,
    scoring_regression_loss,
    sigmoid,
)
from .synth import dilate

LOSSES = ("bce", "dice", "boundary", "objective", "scoring")


def _smooth_coords(probs, lcfg: LaplacianConfig, step: float) -> np.ndarray:
    """Coordinates whose perturbation cannot move any Laplacian response across zero."""
    response = laplacian(probs, lcfg)
    reach = 8.0 if lcfg.connectivity == "eight" else 4.0
    near_kink = np.abs(response) <= 2.0 * reach * step
    if lcfg.connectivity == "eight":
        padded = np.pad(near_kink, 1)
        h, w = near_kink.shape
        spread = np.zeros_like(near_kink)
        for dy in range(3):
            for dx in range(3):
                spread |= padded[dy : dy + h, dx : dx + w]
    else:
        spread = dilate(near_kink, 1).astype(bool)
    return ~spread


def check_loss(name: str, rng: np.random.Generator, size: int = 16, step: float = 1e-4, lcfg=None) -> float:
    """Max relative error between analytic and central-difference gradients for one random instance."""
    lcfg = lcfg or LaplacianConfig()
    gt = (rng.random((size, size)) < 0.5).astype(np.uint8)
    if name == "bce":
        z = rng.normal(0.0, 2.0, (size, size))
        rep = bce_loss(z, gt)
        num = finite_difference_gradient(lambda x: bce_loss(x, gt).value, z, step)
        return max_relative_error(rep.gradient, num)
    if name == "dice":
        p = rng.uniform(0.01, 0.99, (size, size))
        rep = dice_loss(p, gt)
        num = finite_difference_gradient(lambda x: dice_loss(x, gt).value, p, step)
        return max_relative_error(rep.gradient, num)
    if name == "boundary":
        p = rng.uniform(0.01, 0.99, (size, size))
        mask = _smooth_coords(p, lcfg, step)
        rep = boundary_loss(p, gt, lcfg)
        num = finite_difference_gradient(lambda x: boundary_loss(x, gt, lcfg).value, p, step, mask)
        return max_relative_error(rep.gradient, num, mask)
    if name == "objective":
        z = rng.normal(0.0, 2.0, (size, size))
        w = ObjectiveWeights(*rng.uniform(0.1, 2.0, 3))
        # sigmoid is 1/4-Lipschitz, so a logit step moves probabilities by at most step/4
        mask = _smooth_coords(sigmoid(z), lcfg, step / 4.0)
        rep = basis_objective(z, gt, weights=w, lcfg=lcfg)
        num = finite_difference_gradient(lambda x: basis_objective(x, gt, weights=w, lcfg=lcfg).value, z, step, mask)
        return max_relative_error(rep.gradient, num, mask)
    if name == "scoring":
        pred = rng.uniform(0.01, 0.99, 2)
        target = rng.uniform(0.0, 1.0, 2)
        rep = scoring_regression_loss(pred, target)
        num = finite_difference_gradient(lambda x: scoring_regression_loss(x, target).value, pred, step)
        return max_relative_error(rep.gradient, num)
    raise ValueError(f"unknown loss {name!r}")


def run_gradcheck(instances: int = 50, size: int = 16, step: float = 1e-4, seed: int = 0, losses=LOSSES, lcfg=None) -> dict[str, float]:
    """Worst relative error per loss over ``instances`` random cases."""
    out = {}
    for name in losses:
        # stream keyed by the loss, so a subset reproduces the full run
        rng = np.random.default_rng([seed, LOSSES.index(name)])
        out[name] = max(check_loss(name, rng, size, step, lcfg) for _ in range(instances))
    return out
