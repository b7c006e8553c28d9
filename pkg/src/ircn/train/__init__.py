"""Training schedules, logging, and resumable checkpointed state."""

from .config import (
    PHASE_IDS,
    SCHEDULES,
    TrainConfig,
    TrainError,
    config_from_items,
    config_hash,
    config_to_items,
)
from .loop import (
    TrainLogger,
    draw_crop,
    image_groups,
    parse_log,
    phase_rng,
    run_coarse_epoch,
    run_fine_epoch,
    run_normal_epoch,
    step_rng,
)
from .schedules import (
    alternate_schedule,
    pretrain_coarse,
    resolve_samples,
    train_fine,
    train_normal_net,
    validation_chamfer,
)
from .state import TrainState, init_state, load_state, save_state

__all__ = [
    "PHASE_IDS",
    "SCHEDULES",
    "TrainConfig",
    "TrainError",
    "TrainLogger",
    "TrainState",
    "alternate_schedule",
    "config_from_items",
    "config_hash",
    "config_to_items",
    "draw_crop",
    "image_groups",
    "init_state",
    "load_state",
    "parse_log",
    "phase_rng",
    "pretrain_coarse",
    "resolve_samples",
    "run_coarse_epoch",
    "run_fine_epoch",
    "run_normal_epoch",
    "save_state",
    "step_rng",
    "train_fine",
    "train_normal_net",
    "validation_chamfer",
]
