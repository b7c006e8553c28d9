"""Training configuration, phase naming, and the config fingerprint.

A config round-trips losslessly through flat key=value text (floats via
repr), which is what checkpoints embed; the fingerprint is a short hash of
that canonical encoding so a resumed run can detect a mismatched config.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields

SCHEDULES = ("coarse_only", "fine_only", "alternate", "end_to_end")

# Seed-stream ids. Every per-step rng is keyed by (seed, phase id, phase-local
# epoch, step, slot), so two schedules that run the same phase do identical
# work regardless of what the other phases are doing.
PHASE_IDS = {"coarse": 1, "fine": 2, "joint": 3, "normal": 4}


class TrainError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    schedule: str = "coarse_only"
    epochs_coarse: int = 30
    epochs_fine: int = 15
    epochs_joint: int = 0  # 0 means epochs_coarse + epochs_fine
    alt_coarse: int = 5
    alt_fine: int = 5
    images_per_step: int = 4
    passes_per_epoch: int = 1
    n_points: int = 512
    crop_size: int = 64
    resolution: int = 128
    fine_mode: str = "embedding"
    use_normals: bool = True
    lr0: float = 1e-3
    lr_decay: float = 0.1
    lr_every: int = 10
    sigma_coarse: float = 0.05
    sigma_fine: float = 0.03
    uniform_fraction: float = 0.125
    normal_epochs: int = 0
    early_stop: bool = False
    early_stop_every: int = 5
    early_stop_patience: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}, expected one of {SCHEDULES}")
        if self.crop_size % 2 or self.crop_size < 2:
            raise ValueError("crop_size must be even and at least 2")
        if self.crop_size > self.resolution:
            raise ValueError(f"crop_size {self.crop_size} exceeds resolution {self.resolution}")
        if self.resolution % 2:
            raise ValueError("resolution must be even")
        for name in ("epochs_coarse", "epochs_fine", "epochs_joint", "normal_epochs"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.epochs_coarse and self.alt_coarse < 1:
            raise ValueError("alt_coarse must be positive when coarse epochs are scheduled")
        if self.epochs_fine and self.alt_fine < 1:
            raise ValueError("alt_fine must be positive when fine epochs are scheduled")
        if self.images_per_step < 1:
            raise ValueError("images_per_step must be positive")
        if self.passes_per_epoch < 1:
            raise ValueError("passes_per_epoch must be positive")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")
        if self.lr0 <= 0.0 or self.lr_every < 1:
            raise ValueError("lr0 must be positive and lr_every at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.early_stop_every < 1 or self.early_stop_patience < 1:
            raise ValueError("early stopping cadence and patience must be positive")

    @property
    def joint_epochs(self) -> int:
        return self.epochs_joint if self.epochs_joint else self.epochs_coarse + self.epochs_fine


# Field types recovered from the defaults; bool precedes int in the checks
# below because bool is an int subclass.
_FIELD_TYPES = {f.name: type(f.default) for f in fields(TrainConfig)}


def encode_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def decode_value(name: str, text: str):
    kind = _FIELD_TYPES[name]
    if kind is bool:
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean for {name}: {text!r}")
        return text == "true"
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def config_to_items(config: TrainConfig) -> dict:
    return {f.name: encode_value(getattr(config, f.name)) for f in fields(TrainConfig)}


def config_from_items(items: dict) -> TrainConfig:
    known = {f.name for f in fields(TrainConfig)}
    unknown = sorted(set(items) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    return TrainConfig(**{k: decode_value(k, v) for k, v in items.items()})


def config_hash(config: TrainConfig) -> str:
    text = "\n".join(f"{k}={v}" for k, v in sorted(config_to_items(config).items()))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
