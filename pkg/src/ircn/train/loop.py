"""Per-epoch training loops and the step-keyed rng discipline.

Epochs are counted per phase and every step's generator is derived from
(seed, phase id, phase-local epoch, step, image slot).  Nothing carries
hidden rng state between steps, so a run resumed from a checkpoint replays
the identical stream, and a schedule that skips a phase entirely is
bit-identical to one that never had it.

Gradients accumulate across the images of one step (each image's loss is
scaled by 1/group before backward), then a single optimizer update is
applied at the phase-local epoch's learning rate.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..nn import autodiff as ad
from ..nn.autodiff import NumericsError
from ..pifu import (
    CropSpec,
    SamplerConfig,
    SamplingError,
    eval_coarse,
    eval_fine,
    occupancy_loss,
    normal_loss,
    sample_training_points,
    sample_training_points_in_crop,
)
from .config import PHASE_IDS, TrainConfig, TrainError

_MAX_CROP_REDRAWS = 5


class TrainLogger:
    """Append-only structured step log plus an in-memory copy.

    One record per optimizer step: epoch, step, phase, loss, lam, lr.
    Floats are written with repr so parsing the file recovers them exactly.
    Comment lines (epoch summaries and such) start with '#'.
    """

    def __init__(self, path=None):
        self.path = path
        self.records: list[dict] = []

    def step(self, epoch: int, step: int, phase: str, loss: float, lam: float,
             lr: float) -> None:
        record = {"epoch": epoch, "step": step, "phase": phase,
                  "loss": loss, "lam": lam, "lr": lr}
        self.records.append(record)
        self._write(f"epoch={epoch} step={step} phase={phase} "
                    f"loss={loss!r} lam={lam!r} lr={lr!r}")

    def note(self, text: str) -> None:
        self._write(f"# {text}")

    def _write(self, line: str) -> None:
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def epoch_means(self, phase: str) -> list:
        """Mean step loss per phase-local epoch, in epoch order."""
        sums: dict[int, list] = {}
        for rec in self.records:
            if rec["phase"] == phase:
                sums.setdefault(rec["epoch"], []).append(rec["loss"])
        return [float(np.mean(sums[e])) for e in sorted(sums)]


def parse_log(path) -> list:
    """Read step records back from a log file; comments are skipped."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            pairs = dict(token.split("=", 1) for token in line.split())
            records.append({
                "epoch": int(pairs["epoch"]),
                "step": int(pairs["step"]),
                "phase": pairs["phase"],
                "loss": float(pairs["loss"]),
                "lam": float(pairs["lam"]),
                "lr": float(pairs["lr"]),
            })
    return records


def phase_rng(seed: int, phase: str, epoch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, PHASE_IDS[phase], epoch]))


def step_rng(seed: int, phase: str, epoch: int, step: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([seed, PHASE_IDS[phase], epoch, step, slot]))


def image_groups(n_images: int, images_per_step: int, rng: np.random.Generator,
                 passes: int = 1):
    """Shuffled image indices chunked into per-step groups.

    With small procedural datasets one point batch per image per epoch
    underuses each scene, so an epoch may run several passes; every pass
    reshuffles, and every step still draws fresh points.
    """
    order = np.concatenate([rng.permutation(n_images) for _ in range(passes)])
    return [order[i:i + images_per_step] for i in range(0, len(order), images_per_step)]


def sampler_config(config: TrainConfig) -> SamplerConfig:
    return SamplerConfig(n_points=config.n_points, sigma_coarse=config.sigma_coarse,
                         sigma_fine=config.sigma_fine,
                         uniform_fraction=config.uniform_fraction)


def _fail(phase: str, epoch: int, step: int, image: int, exc: Exception) -> TrainError:
    return TrainError(
        f"{phase} phase aborted at epoch {epoch} step {step} image {image}: {exc}")


def _check_finite(loss: float, phase: str, epoch: int, step: int) -> None:
    if not np.isfinite(loss):
        raise TrainError(f"{phase} phase diverged at epoch {epoch} step {step}: "
                         f"loss={loss!r}")


def run_coarse_epoch(state, samples, logger: TrainLogger) -> float:
    """One pass over the training images updating the coarse model."""
    cfg = state.config
    epoch = state.epochs["coarse"]
    sampler = sampler_config(cfg)
    groups = image_groups(len(samples), cfg.images_per_step,
                          phase_rng(cfg.seed, "coarse", epoch),
                          passes=cfg.passes_per_epoch)
    step_losses = []
    for step, group in enumerate(groups):
        state.coarse.zero_grad()
        losses, lams = [], []
        for slot, idx in enumerate(group):
            sample = samples[idx]
            rng = step_rng(cfg.seed, "coarse", epoch, step, slot)
            try:
                batch = sample_training_points(sample.mesh, sampler, "coarse",
                                               rng, sample.resolution)
                pred, _ = eval_coarse(state.coarse, sample, batch, train=True)
                loss = occupancy_loss(pred, batch)
                ad.scale(loss, 1.0 / len(group)).backward()
            except (NumericsError, SamplingError) as exc:
                raise _fail("coarse", epoch, step, int(idx), exc) from exc
            losses.append(float(loss.value))
            lams.append(batch.lam)
        loss_step = float(np.mean(losses))
        _check_finite(loss_step, "coarse", epoch, step)
        lr = state.opt_coarse.step(epoch)
        logger.step(epoch, step, "coarse", loss_step, float(np.mean(lams)), lr)
        step_losses.append(loss_step)
    state.epochs["coarse"] = epoch + 1
    mean = float(np.mean(step_losses))
    logger.note(f"epoch {epoch} phase coarse mean_loss {mean!r}")
    return mean


def draw_crop(rng: np.random.Generator, crop_size: int, resolution: int) -> CropSpec:
    """Random even-aligned window; a full-size crop consumes no randomness."""
    if crop_size == resolution:
        return CropSpec.full(resolution)
    span = (resolution - crop_size) // 2 + 1
    x0 = 2 * int(rng.integers(span))
    y0 = 2 * int(rng.integers(span))
    return CropSpec(x0, y0, crop_size, resolution)


def run_fine_epoch(state, samples, logger: TrainLogger, joint: bool = False) -> float:
    """One pass updating the fine model; with joint=True the coarse model
    trains through the embedding (and its own head) in the same step."""
    cfg = state.config
    phase = "joint" if joint else "fine"
    epoch = state.epochs[phase]
    sampler = sampler_config(cfg)
    groups = image_groups(len(samples), cfg.images_per_step,
                          phase_rng(cfg.seed, phase, epoch),
                          passes=cfg.passes_per_epoch)
    step_losses = []
    for step, group in enumerate(groups):
        state.fine.zero_grad()
        if joint:
            state.coarse.zero_grad()
        losses, lams = [], []
        for slot, idx in enumerate(group):
            sample = samples[idx]
            rng = step_rng(cfg.seed, phase, epoch, step, slot)
            batch = None
            last_exc: Optional[Exception] = None
            for _ in range(_MAX_CROP_REDRAWS):
                crop = draw_crop(rng, cfg.crop_size, sample.resolution)
                try:
                    batch = sample_training_points_in_crop(sample.mesh, sampler,
                                                           crop, rng)
                    break
                except SamplingError as exc:
                    last_exc = exc
            if batch is None:
                raise _fail(phase, epoch, step, int(idx),
                            RuntimeError(f"no usable crop after "
                                         f"{_MAX_CROP_REDRAWS} draws: {last_exc}"))
            try:
                # The embedding always comes from the full low-res image.  In
                # the alternate schedule the coarse pass runs without a graph,
                # so no gradient reaches the coarse model; end_to_end keeps
                # the graph and adds the coarse head's own loss.
                plane_lo = state.coarse.features(sample, train=joint)
                pred_lo, omega = state.coarse.query(plane_lo, batch.xy, batch.z,
                                                    train=joint)
                pred = eval_fine(state.fine, sample, batch, omega=omega,
                                 crop=crop, train=True)
                loss = occupancy_loss(pred, batch)
                if joint:
                    loss = ad.add(loss, occupancy_loss(pred_lo, batch))
                ad.scale(loss, 1.0 / len(group)).backward()
            except NumericsError as exc:
                raise _fail(phase, epoch, step, int(idx), exc) from exc
            losses.append(float(loss.value))
            lams.append(batch.lam)
        loss_step = float(np.mean(losses))
        _check_finite(loss_step, phase, epoch, step)
        lr = state.opt_fine.step(epoch)
        if joint:
            state.opt_coarse.step(epoch)
        logger.step(epoch, step, phase, loss_step, float(np.mean(lams)), lr)
        step_losses.append(loss_step)
    state.epochs[phase] = epoch + 1
    mean = float(np.mean(step_losses))
    logger.note(f"epoch {epoch} phase {phase} mean_loss {mean!r}")
    return mean


def run_normal_epoch(state, samples, logger: TrainLogger) -> float:
    """One pass updating the back-normal predictor on whole images."""
    cfg = state.config
    epoch = state.epochs["normal"]
    groups = image_groups(len(samples), cfg.images_per_step,
                          phase_rng(cfg.seed, "normal", epoch))
    step_losses = []
    for step, group in enumerate(groups):
        state.normal.zero_grad()
        losses = []
        for idx in group:
            sample = samples[idx]
            try:
                pred = state.normal(sample.img_hi, train=True)
                loss = normal_loss(pred, sample.bnml_hi, sample.mask)
                ad.scale(loss, 1.0 / len(group)).backward()
            except NumericsError as exc:
                raise _fail("normal", epoch, step, int(idx), exc) from exc
            losses.append(float(loss.value))
        loss_step = float(np.mean(losses))
        _check_finite(loss_step, "normal", epoch, step)
        lr = state.opt_normal.step(epoch)
        logger.step(epoch, step, "normal", loss_step, 0.0, lr)
        step_losses.append(loss_step)
    state.epochs["normal"] = epoch + 1
    mean = float(np.mean(step_losses))
    logger.note(f"epoch {epoch} phase normal mean_loss {mean!r}")
    return mean
