"""Merged run configuration: one key=value file driving every subcommand.

Keys are section-prefixed (train.epochs_coarse=30).  The sampler, trainer
and reconstructor keep their own config dataclasses; RunConfig is the
operator-facing union that resolves into those objects.  Precedence is
defaults < config file < command-line overrides, unknown keys are rejected,
and every run serializes the fully resolved result next to its outputs.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import Dict, Iterable, Optional

from .pifu import SamplerConfig
from .recon import ReconConfig
from .train import TrainConfig
from .train.config import encode_value

# TrainConfig fields surfaced under other sections instead of train.*
_TRAIN_ELSEWHERE = {"n_points", "sigma_coarse", "sigma_fine",
                    "uniform_fraction", "resolution", "seed"}

_DATASET_DEFAULTS = {"dir": "data", "train": 8, "test": 2,
                     "resolution": 128, "grid_resolution": 64}


def _build_schema() -> Dict[str, object]:
    schema: Dict[str, object] = {"seed": 0}
    for key, default in _DATASET_DEFAULTS.items():
        schema[f"dataset.{key}"] = default
    for f in fields(SamplerConfig):
        schema[f"sampler.{f.name}"] = f.default
    for f in fields(TrainConfig):
        if f.name not in _TRAIN_ELSEWHERE:
            schema[f"train.{f.name}"] = f.default
    for f in fields(ReconConfig):
        schema[f"recon.{f.name}"] = f.default
    return schema


_SCHEMA = _build_schema()


def _decode(key: str, text: str):
    kind = type(_SCHEMA[key])
    if kind is bool:
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean for {key}: {text!r}")
        return text == "true"
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError:
        raise ValueError(f"bad {kind.__name__} for {key}: {text!r}") from None
    return text


def parse_kv_lines(text: str) -> Dict[str, str]:
    """key=value per line; blank lines and # comments are skipped."""
    items: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        items[key.strip()] = value.strip()
    return items


class RunConfig:
    def __init__(self):
        self.values: Dict[str, object] = dict(_SCHEMA)

    def set(self, key: str, text: str) -> None:
        if key not in _SCHEMA:
            raise ValueError(f"unknown config key: {key!r}")
        self.values[key] = _decode(key, text)

    def set_value(self, key: str, value) -> None:
        if key not in _SCHEMA:
            raise ValueError(f"unknown config key: {key!r}")
        self.values[key] = value

    def __getitem__(self, key: str):
        return self.values[key]

    @classmethod
    def from_sources(cls, config_path: Optional[str] = None,
                     overrides: Iterable[str] = ()) -> "RunConfig":
        cfg = cls()
        if config_path is not None:
            text = Path(config_path).read_text(encoding="utf-8")
            for key, value in parse_kv_lines(text).items():
                cfg.set(key, value)
        for item in overrides:
            if "=" not in item:
                raise ValueError(f"override must be key=value, got {item!r}")
            key, value = item.split("=", 1)
            cfg.set(key.strip(), value.strip())
        return cfg

    def to_text(self) -> str:
        lines = [f"{k}={encode_value(v)}" for k, v in sorted(self.values.items())]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    # resolved views ------------------------------------------------------

    def train_config(self, resolution: Optional[int] = None) -> TrainConfig:
        kwargs = {k.split(".", 1)[1]: v for k, v in self.values.items()
                  if k.startswith("train.")}
        for name in ("n_points", "sigma_coarse", "sigma_fine", "uniform_fraction"):
            kwargs[name] = self.values[f"sampler.{name}"]
        kwargs["resolution"] = (resolution if resolution is not None
                                else self.values["dataset.resolution"])
        kwargs["seed"] = self.values["seed"]
        return TrainConfig(**kwargs)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(**{k.split(".", 1)[1]: v
                                for k, v in self.values.items()
                                if k.startswith("sampler.")})

    def recon_config(self) -> ReconConfig:
        return ReconConfig(**{k.split(".", 1)[1]: v
                              for k, v in self.values.items()
                              if k.startswith("recon.")})
