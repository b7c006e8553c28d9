"""Bundled training state and its checkpoint round-trip.

A checkpoint stores the full config (so the models can be rebuilt), every
model parameter, every optimizer accumulator, and the per-phase epoch
counters.  Those counters are the rng state: step generators are derived
from them, so restoring counters restores the stream exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..nn import RMSProp, load_checkpoint, save_checkpoint
from ..pifu import CoarseModel, FineModel, NormalNet
from .config import (
    TrainConfig,
    TrainError,
    config_from_items,
    config_hash,
    config_to_items,
)

_FORMAT = "1"
_MODEL_SEEDS = {"coarse": 100, "fine": 101, "normal": 102}


@dataclass
class TrainState:
    config: TrainConfig
    coarse: CoarseModel
    fine: FineModel
    normal: Optional[NormalNet]
    opt_coarse: RMSProp
    opt_fine: RMSProp
    opt_normal: Optional[RMSProp]
    epochs: Dict[str, int] = field(
        default_factory=lambda: {"coarse": 0, "fine": 0, "joint": 0, "normal": 0})

    def models(self) -> dict:
        out = {"coarse": self.coarse, "fine": self.fine}
        if self.normal is not None:
            out["normal"] = self.normal
        return out

    def optimizers(self) -> dict:
        out = {"coarse": self.opt_coarse, "fine": self.opt_fine}
        if self.opt_normal is not None:
            out["normal"] = self.opt_normal
        return out


def _model_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, _MODEL_SEEDS[name]]))


def _make_opt(model, config: TrainConfig) -> RMSProp:
    return RMSProp(model.named_parameters(), lr0=config.lr0,
                   decay=config.lr_decay, every=config.lr_every)


def init_state(config: TrainConfig) -> TrainState:
    """Fresh models and optimizers; initialization depends only on the seed."""
    coarse = CoarseModel(rng=_model_rng(config.seed, "coarse"),
                         use_normals=config.use_normals)
    fine = FineModel(rng=_model_rng(config.seed, "fine"), mode=config.fine_mode,
                     use_normals=config.use_normals)
    normal = None
    opt_normal = None
    if config.normal_epochs > 0:
        normal = NormalNet(rng=_model_rng(config.seed, "normal"))
        opt_normal = _make_opt(normal, config)
    return TrainState(config=config, coarse=coarse, fine=fine, normal=normal,
                      opt_coarse=_make_opt(coarse, config),
                      opt_fine=_make_opt(fine, config),
                      opt_normal=opt_normal)


def save_state(path, state: TrainState) -> None:
    header = {"format": _FORMAT, "config_hash": config_hash(state.config)}
    for key, value in config_to_items(state.config).items():
        header[f"cfg.{key}"] = value
    for phase, count in sorted(state.epochs.items()):
        header[f"progress.{phase}"] = str(count)
    tensors: dict = {}
    for name, model in state.models().items():
        for pname, arr in model.state_dict().items():
            tensors[f"model.{name}.{pname}"] = arr
    for name, opt in state.optimizers().items():
        for pname, arr in opt.state_dict().items():
            tensors[f"opt.{name}.{pname}"] = arr
    save_checkpoint(path, header, tensors)


def load_state(path) -> TrainState:
    header, tensors = load_checkpoint(path)
    if header.get("format") != _FORMAT:
        raise TrainError(f"unsupported checkpoint format {header.get('format')!r}")
    items = {k[4:]: v for k, v in header.items() if k.startswith("cfg.")}
    try:
        config = config_from_items(items)
    except (TypeError, ValueError) as exc:
        raise TrainError(f"bad config in checkpoint: {exc}") from exc
    if config_hash(config) != header.get("config_hash"):
        raise TrainError("checkpoint config hash mismatch")

    state = init_state(config)
    for phase in state.epochs:
        key = f"progress.{phase}"
        if key not in header:
            raise TrainError(f"checkpoint missing {key}")
        state.epochs[phase] = int(header[key])

    grouped: dict = {}
    for key, arr in tensors.items():
        kind, name, pname = key.split(".", 2)
        grouped.setdefault((kind, name), {})[pname] = arr
    try:
        for name, model in state.models().items():
            model.load_state_dict(grouped.pop(("model", name)))
        for name, opt in state.optimizers().items():
            opt.load_state_dict(grouped.pop(("opt", name)))
    except KeyError as exc:
        raise TrainError(f"checkpoint tensors incomplete: {exc}") from exc
    if grouped:
        raise TrainError(f"checkpoint has unexpected tensor groups: {sorted(grouped)}")
    return state
