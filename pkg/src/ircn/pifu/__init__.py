"""Pixel-aligned occupancy models, projection algebra, sampling and losses."""

from .camera import CropSpec, QueryBatch, image_coords, norm_coords, project
from .losses import normal_loss, occupancy_loss
from .models import (
    COARSE_FEATURE_CHANNELS,
    D_OMEGA,
    DEFAULT_DTYPE,
    FINE_FEATURE_CHANNELS,
    FINE_MODES,
    FINE_RECEPTIVE_RADIUS,
    CoarseEncoder,
    CoarseModel,
    FineEncoder,
    FineModel,
    NormalNet,
    SkipMLP,
    eval_coarse,
    eval_fine,
    index_bilinear,
)
from .sampling import (
    SamplerConfig,
    SamplingError,
    sample_training_points,
    sample_training_points_in_crop,
)

__all__ = [
    "COARSE_FEATURE_CHANNELS",
    "CoarseEncoder",
    "CoarseModel",
    "CropSpec",
    "D_OMEGA",
    "DEFAULT_DTYPE",
    "FINE_FEATURE_CHANNELS",
    "FINE_MODES",
    "FINE_RECEPTIVE_RADIUS",
    "FineEncoder",
    "FineModel",
    "NormalNet",
    "QueryBatch",
    "SamplerConfig",
    "SamplingError",
    "SkipMLP",
    "eval_coarse",
    "eval_fine",
    "image_coords",
    "index_bilinear",
    "norm_coords",
    "normal_loss",
    "occupancy_loss",
    "project",
    "sample_training_points",
    "sample_training_points_in_crop",
]
