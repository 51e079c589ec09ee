"""Laplacian boundary extraction and the boundary Dice score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import InputError
from .masks import as_binary_mask, as_soft_map

__all__ = [
    "LaplacianConfig",
    "DiceConfig",
    "laplacian",
    "extract_boundary",
    "boundary_dice",
    "boundary_score_for_masks",
]


@dataclass(frozen=True)
class LaplacianConfig:
    connectivity: str = "four"
    padding: str = "zero"

    def __post_init__(self):
        if self.connectivity not in ("four", "eight"):
            raise InputError(f"connectivity must be 'four' or 'eight', got {self.connectivity!r}")
        if self.padding != "zero":
            raise InputError(f"only zero padding is supported, got {self.padding!r}")


@dataclass(frozen=True)
class DiceConfig:
    epsilon: float = 1.0

    def __post_init__(self):
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise InputError(f"epsilon must be a positive finite number, got {self.epsilon!r}")


def laplacian(m, cfg: LaplacianConfig | None = None) -> np.ndarray:
    """Zero-padded convolution with the 4- or 8-neighbour Laplacian stencil."""
    cfg = cfg or LaplacianConfig()
    a = as_soft_map(m)
    return kernels.laplacian(a, cfg.connectivity == "eight")


def extract_boundary(m, cfg: LaplacianConfig | None = None) -> np.ndarray:
    """Binary boundary: pixels whose Laplacian response is nonzero.

    Thresholding the magnitude picks up both the inner and the outer ring of
    each edge, so the result does not depend on mask polarity.
    """
    a = as_binary_mask(m)
    return (laplacian(a, cfg) != 0).astype(np.uint8)


def boundary_dice(b_pred, b_gt, cfg: DiceConfig | None = None) -> float:
    """(2 sum(p*g) + eps) / (sum(p^2) + sum(g^2) + eps) over all pixels."""
    cfg = cfg or DiceConfig()
    p = as_soft_map(b_pred, "b_pred")
    g = as_soft_map(b_gt, "b_gt")
    if p.shape != g.shape:
        raise InputError(f"boundary shapes differ: {p.shape} vs {g.shape}")
    num = 2.0 * float(np.sum(p * g)) + cfg.epsilon
    den = float(np.sum(p * p)) + float(np.sum(g * g)) + cfg.epsilon
    return num / den


def boundary_score_for_masks(
    m_pred,
    m_gt,
    lcfg: LaplacianConfig | None = None,
    dcfg: DiceConfig | None = None,
) -> float:
    p = as_binary_mask(m_pred, "m_pred")
    g = as_binary_mask(m_gt, "m_gt")
    if p.shape != g.shape:
        raise InputError(f"mask shapes differ: {p.shape} vs {g.shape}")
    return boundary_dice(extract_boundary(p, lcfg), extract_boundary(g, lcfg), dcfg)
