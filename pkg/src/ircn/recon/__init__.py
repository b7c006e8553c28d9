"""Inference: dense grid evaluation, window stitching, metrics, reports."""

from .grid import MIN_OVERLAP, ReconConfig, ReconError, evaluate_grid, stitch_fine_features
from .reconstruct import (
    EvalReport,
    iou_against_oracle,
    reconstruct,
    reconstruct_from_field,
    score_mesh,
)

__all__ = [
    "EvalReport",
    "MIN_OVERLAP",
    "ReconConfig",
    "ReconError",
    "evaluate_grid",
    "iou_against_oracle",
    "reconstruct",
    "reconstruct_from_field",
    "score_mesh",
    "stitch_fine_features",
]
