"""Training schedules: coarse pretraining, crop-based fine training, the
alternate coarse/fine cadence, joint end-to-end training, and the optional
back-normal predictor.

Each schedule is resumable: it reads the per-phase epoch counters from the
state it is given and only runs the remainder, so a run restored from a
phase-boundary checkpoint continues bit-identically.
"""

from __future__ import annotations

import os
from typing import Optional

import numpy as np

from ..recon import ReconConfig, reconstruct
from ..synthdata import DatasetManifest, load_sample
from .config import TrainConfig, TrainError
from .loop import TrainLogger, run_coarse_epoch, run_fine_epoch, run_normal_epoch
from .state import TrainState, init_state, save_state

_VAL_SCENES = 2
_VAL_GRID = 32


def resolve_samples(dataset, split: str = "train") -> list:
    """A dataset is a manifest (split honored) or an in-memory sample list."""
    if isinstance(dataset, DatasetManifest):
        indices = [i for i, rec in enumerate(dataset.records) if rec.split == split]
        return [load_sample(dataset, i) for i in indices]
    return list(dataset) if split == "train" else []


def _check_dataset(samples, config: TrainConfig) -> None:
    if not samples:
        raise TrainError("training dataset is empty")
    for sample in samples:
        if sample.resolution != config.resolution:
            raise TrainError(f"dataset resolution {sample.resolution} does not "
                             f"match config resolution {config.resolution}")


def validation_chamfer(state: TrainState, val_samples, level: str) -> float:
    """Mean Chamfer over held-out scenes at a small grid; empty -> inf."""
    window = min(64, state.config.resolution)
    recon_cfg = ReconConfig(resolution=_VAL_GRID, level=level, window=window,
                            overlap=16, metric_samples=2000)
    scores = []
    for sample in val_samples[:_VAL_SCENES]:
        _, report = reconstruct(state.coarse, state.fine, sample, recon_cfg)
        scores.append(report.chamfer if report.status == "ok" else np.inf)
    return float(np.mean(scores))


class _EarlyStop:
    """Stop when validation Chamfer fails to improve `patience` checks in a row."""

    def __init__(self, config: TrainConfig, val_samples, level: str):
        self.enabled = config.early_stop and len(val_samples) > 0
        self.every = config.early_stop_every
        self.patience = config.early_stop_patience
        self.val_samples = val_samples
        self.level = level
        self.best = np.inf
        self.strikes = 0

    def should_stop(self, state: TrainState, epoch_done: int, logger: TrainLogger) -> bool:
        if not self.enabled or (epoch_done + 1) % self.every:
            return False
        score = validation_chamfer(state, self.val_samples, self.level)
        logger.note(f"val chamfer {score!r} after {epoch_done + 1} epochs ({self.level})")
        if score < self.best:
            self.best = score
            self.strikes = 0
            return False
        self.strikes += 1
        if self.strikes >= self.patience:
            logger.note(f"early stop: no improvement in {self.strikes} checks")
            return True
        return False


def pretrain_coarse(dataset, config: TrainConfig, state: Optional[TrainState] = None,
                    logger: Optional[TrainLogger] = None, log_path=None,
                    checkpoint_path=None):
    """Coarse occupancy training on whole images; returns (state, logger)."""
    state = state if state is not None else init_state(config)
    logger = logger if logger is not None else TrainLogger(log_path)
    samples = resolve_samples(dataset, "train")
    _check_dataset(samples, config)
    stopper = _EarlyStop(config, resolve_samples(dataset, "test"), "coarse")
    while state.epochs["coarse"] < config.epochs_coarse:
        run_coarse_epoch(state, samples, logger)
        if stopper.should_stop(state, state.epochs["coarse"] - 1, logger):
            break
    if checkpoint_path is not None:
        save_state(checkpoint_path, state)
    return state, logger


def train_fine(dataset, coarse, config: TrainConfig, state: Optional[TrainState] = None,
               logger: Optional[TrainLogger] = None, log_path=None,
               checkpoint_path=None):
    """Fine training against a frozen coarse model; returns (state, logger).

    `coarse` may be a CoarseModel (its weights are copied in) or None when
    `state` already carries the desired one.  The coarse model is never
    updated here: its forward pass runs without a graph and its optimizer
    never steps.
    """
    state = state if state is not None else init_state(config)
    if coarse is not None and coarse is not state.coarse:
        state.coarse.load_state_dict(coarse.state_dict())
    logger = logger if logger is not None else TrainLogger(log_path)
    samples = resolve_samples(dataset, "train")
    _check_dataset(samples, config)
    stopper = _EarlyStop(config, resolve_samples(dataset, "test"), "multi")
    while state.epochs["fine"] < config.epochs_fine:
        run_fine_epoch(state, samples, logger, joint=False)
        if stopper.should_stop(state, state.epochs["fine"] - 1, logger):
            break
    if checkpoint_path is not None:
        save_state(checkpoint_path, state)
    return state, logger


def train_normal_net(dataset, config: TrainConfig, state: Optional[TrainState] = None,
                     logger: Optional[TrainLogger] = None, log_path=None,
                     checkpoint_path=None):
    """Back-normal predictor training on whole images; returns (state, logger)."""
    if config.normal_epochs < 1:
        raise TrainError("normal_epochs must be positive to train the normal net")
    state = state if state is not None else init_state(config)
    if state.normal is None:
        raise TrainError("state has no normal net; set normal_epochs in the config")
    logger = logger if logger is not None else TrainLogger(log_path)
    samples = resolve_samples(dataset, "train")
    _check_dataset(samples, config)
    while state.epochs["normal"] < config.normal_epochs:
        run_normal_epoch(state, samples, logger)
    if checkpoint_path is not None:
        save_state(checkpoint_path, state)
    return state, logger


def alternate_schedule(dataset, config: TrainConfig, state: Optional[TrainState] = None,
                       logger: Optional[TrainLogger] = None, log_path=None,
                       checkpoint_dir=None):
    """Dispatch on config.schedule; returns (state, logger).

    alternate runs alt_coarse coarse epochs then alt_fine fine epochs per
    round until both budgets are spent, checkpointing at every phase
    boundary when a directory is given.  end_to_end trains both models
    jointly for config.joint_epochs.  The degenerate schedules fall back to
    the single-phase loops.
    """
    state = state if state is not None else init_state(config)
    logger = logger if logger is not None else TrainLogger(log_path)
    samples = resolve_samples(dataset, "train")
    _check_dataset(samples, config)

    def _boundary(tag: str) -> None:
        if checkpoint_dir is not None:
            save_state(os.path.join(checkpoint_dir, f"{tag}.ckpt"), state)

    if config.schedule == "coarse_only":
        while state.epochs["coarse"] < config.epochs_coarse:
            run_coarse_epoch(state, samples, logger)
        _boundary("final")
    elif config.schedule == "fine_only":
        while state.epochs["fine"] < config.epochs_fine:
            run_fine_epoch(state, samples, logger, joint=False)
        _boundary("final")
    elif config.schedule == "end_to_end":
        while state.epochs["joint"] < config.joint_epochs:
            run_fine_epoch(state, samples, logger, joint=True)
        _boundary("final")
    else:
        rounds = 0
        while (state.epochs["coarse"] < config.epochs_coarse
               or state.epochs["fine"] < config.epochs_fine):
            rounds += 1
            coarse_target = min(rounds * config.alt_coarse, config.epochs_coarse)
            fine_target = min(rounds * config.alt_fine, config.epochs_fine)
            if state.epochs["coarse"] < coarse_target:
                while state.epochs["coarse"] < coarse_target:
                    run_coarse_epoch(state, samples, logger)
                _boundary(f"round{rounds}_coarse")
            if state.epochs["fine"] < fine_target:
                while state.epochs["fine"] < fine_target:
                    run_fine_epoch(state, samples, logger, joint=False)
                _boundary(f"round{rounds}_fine")
    return state, logger
