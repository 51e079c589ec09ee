"""Boundary-aware quality scoring, basis assembly and evaluation for instance masks."""

from ._backend import BACKEND
from .boundary import DiceConfig, LaplacianConfig, boundary_dice, boundary_score_for_masks, extract_boundary, laplacian
from .errors import BoundaryQualityError, FormatError, GenerationError, InputError, StateError
from .masks import BBox, RleMask, mask_iou, rle_compress, rle_decode, rle_decompress, rle_encode
from .scoring import GroundTruth, InstancePrediction, ScoreBreakdown, fuse_score, rerank, score_targets

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BBox",
    "BoundaryQualityError",
    "DiceConfig",
    "FormatError",
    "GenerationError",
    "GroundTruth",
    "InputError",
    "InstancePrediction",
    "LaplacianConfig",
    "RleMask",
    "ScoreBreakdown",
    "StateError",
    "boundary_dice",
    "boundary_score_for_masks",
    "extract_boundary",
    "fuse_score",
    "laplacian",
    "mask_iou",
    "rerank",
    "rle_compress",
    "rle_decode",
    "rle_decompress",
    "rle_encode",
    "score_targets",
]
