"""Verification suites: finite-difference gradient checks over every layer
kind, and the three directional ablation comparisons.

Both the CLI and the acceptance battery drive these; the numbers come from
real (small) training runs, so the ablation helpers accept the fixture and
a base config and return per-seed metrics for the caller to judge.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Sequence

import numpy as np

from .nn import autodiff as ad
from .recon import ReconConfig, reconstruct
from .train import TrainConfig, alternate_schedule, init_state, pretrain_coarse, train_fine

GRAD_TOL = 1e-5


def _scalarize(out: ad.Var) -> ad.Var:
    return ad.mean(out) if out.value.ndim else out


def _run_check(build: Callable, rng: np.random.Generator) -> float:
    """Worst relative error between backprop and central differences."""
    arrays, forward = build(rng)
    leaves = [ad.Var(a) for a in arrays]
    _scalarize(forward(*leaves)).backward()
    worst = 0.0
    for i, leaf in enumerate(leaves):
        def f(x, i=i):
            probe = [ad.Var(a) for a in arrays]
            probe[i] = ad.Var(x)
            return float(_scalarize(forward(*probe)).value)

        numeric = ad.fd_gradient(f, arrays[i])
        worst = max(worst, ad.max_rel_err(leaf.grad, numeric))
    return worst


def _away_from_kinks(rng, shape):
    # keep relu/leaky inputs clear of 0 so the FD probe stays one-sided
    return (rng.uniform(0.2, 1.0, shape) * rng.choice([-1.0, 1.0], shape))


def _builders() -> Dict[str, Callable]:
    checks: Dict[str, Callable] = {}

    def conv2d(rng):
        x = rng.standard_normal((2, 6, 6))
        w = rng.standard_normal((3, 2, 3, 3)) * 0.5
        b = rng.standard_normal(3) * 0.1
        return [x, w, b], lambda x, w, b: ad.conv2d(x, w, b, stride=1, pad=1)

    def conv2d_strided(rng):
        x = rng.standard_normal((3, 8, 8))
        w = rng.standard_normal((2, 3, 3, 3)) * 0.5
        b = rng.standard_normal(2) * 0.1
        return [x, w, b], lambda x, w, b: ad.conv2d(x, w, b, stride=2, pad=1)

    def linear(rng):
        x = rng.standard_normal((5, 4))
        w = rng.standard_normal((3, 4)) * 0.5
        b = rng.standard_normal(3) * 0.1
        return [x, w, b], ad.linear

    def group_norm(rng):
        x = rng.standard_normal((4, 3, 3))
        g = rng.uniform(0.5, 1.5, 4)
        b = rng.standard_normal(4) * 0.1
        return [x, g, b], lambda x, g, b: ad.group_norm(x, g, b, groups=2)

    def relu(rng):
        return [_away_from_kinks(rng, (4, 5))], ad.relu

    def leaky_relu(rng):
        return [_away_from_kinks(rng, (4, 5))], lambda x: ad.leaky_relu(x, 0.01)

    def sigmoid(rng):
        return [rng.standard_normal((4, 5))], ad.sigmoid

    def avg_pool2(rng):
        return [rng.standard_normal((3, 4, 4))], ad.avg_pool2

    def upsample2(rng):
        return [rng.standard_normal((3, 4, 4))], ad.upsample2

    def concat(rng):
        a = rng.standard_normal((3, 2))
        b = rng.standard_normal((3, 4))
        return [a, b], lambda a, b: ad.concat([a, b], axis=1)

    def add(rng):
        a = rng.standard_normal((4, 3))
        b = rng.standard_normal((4, 3))
        return [a, b], ad.add

    def scale(rng):
        return [rng.standard_normal((4, 3))], lambda x: ad.scale(x, -0.7)

    def reshape(rng):
        return [rng.standard_normal((3, 4))], lambda x: ad.reshape(x, (2, 6))

    def bilinear_sample(rng):
        feat = rng.standard_normal((3, 6, 6))
        xy = rng.uniform(-0.8, 0.8, (7, 2))
        return [feat], lambda f: ad.bilinear_sample(f, xy)

    def weighted_bce(rng):
        pred = rng.uniform(0.1, 0.9, 9)
        labels = rng.integers(0, 2, 9).astype(np.float64)
        lam = float((1.0 - labels).mean())
        lam = min(max(lam, 0.2), 0.8)
        return [pred], lambda p: ad.weighted_bce(p, labels, lam)

    def masked_l1(rng):
        pred = rng.standard_normal((2, 4, 4))
        target = rng.standard_normal((2, 4, 4))
        mask = (rng.uniform(size=(4, 4)) > 0.4).astype(np.float64)
        mask.flat[0] = 1.0
        # keep |pred - target| off zero so the FD probe stays one-sided
        pred = pred + 0.3 * np.sign(pred - target)
        return [pred], lambda p: ad.masked_l1(p, target, mask)

    def vsum(rng):
        return [rng.standard_normal(7)], ad.vsum

    def mean_op(rng):
        return [rng.standard_normal((3, 4))], ad.mean

    def abs_mean_error(rng):
        pred = rng.standard_normal((4, 3))
        target = rng.standard_normal((4, 3))
        pred = pred + 0.3 * np.sign(pred - target)
        return [pred], lambda p: ad.abs_mean_error(p, target)

    for fn in (conv2d, conv2d_strided, linear, group_norm, relu, leaky_relu,
               sigmoid, avg_pool2, upsample2, concat, add, scale, reshape,
               bilinear_sample, weighted_bce, masked_l1, vsum, mean_op,
               abs_mean_error):
        checks[fn.__name__] = fn
    return checks


@dataclass
class GradCheckRow:
    name: str
    max_rel_err: float
    ok: bool


def gradcheck_suite(n_seeds: int = 20, tol: float = GRAD_TOL) -> List[GradCheckRow]:
    """FD-check every op over fresh random inputs per seed."""
    rows = []
    for name, build in _builders().items():
        worst = 0.0
        for seed in range(n_seeds):
            rng = np.random.default_rng(np.random.SeedSequence([0xFD, seed]))
            worst = max(worst, _run_check(build, rng))
        rows.append(GradCheckRow(name, worst, worst < tol))
    return rows


# ---------------------------------------------------------------------------
# Directional ablations.  Small but real training runs; metrics are mean
# validation Chamfer over held-out scenes, reconstructed per variant.
# Fixture and budgets below are calibrated: large enough for each effect to
# express, small enough to finish in minutes.

ABLATION_SEEDS = (0, 1, 2)


def ablation_fixture(resolution: int):
    """4 train scenes, 2 held-out scenes, and a sphere render (all seeded)."""
    from .geometry import icosphere
    from .synthdata import generate_scene, render_orthographic

    train = []
    for seed in range(4):
        _, mesh = generate_scene(seed, resolution=64)
        train.append(render_orthographic(mesh, resolution))
    val = []
    for seed in (100, 101):
        _, mesh = generate_scene(seed, resolution=64)
        val.append(render_orthographic(mesh, resolution))
    sphere = render_orthographic(icosphere(0.7, subdivisions=3), resolution)
    return train, val, sphere


def ablation_base_a() -> TrainConfig:
    # conditioning comparison wants a well-trained coarse net behind omega
    return TrainConfig(epochs_coarse=15, epochs_fine=15, images_per_step=1,
                       passes_per_epoch=24, n_points=512, crop_size=32,
                       resolution=64, lr0=1.5e-3, lr_decay=0.1, lr_every=12)


def ablation_base_b() -> TrainConfig:
    # normal channels only pay off above the res-64 feature-plane floor
    return TrainConfig(epochs_coarse=15, epochs_fine=15, images_per_step=1,
                       passes_per_epoch=24, n_points=512, crop_size=64,
                       resolution=128, lr0=1e-3, lr_decay=0.1, lr_every=12)


def ablation_base_c() -> TrainConfig:
    return TrainConfig(epochs_coarse=10, epochs_fine=10, alt_coarse=5,
                       alt_fine=5, images_per_step=1, passes_per_epoch=8,
                       n_points=512, crop_size=32, resolution=64, lr0=1.5e-3,
                       lr_decay=0.1, lr_every=8)

@dataclass
class AblationResult:
    name: str
    variants: Dict[str, float]
    per_seed: Dict[str, List[float]]
    extras: Dict[str, float]
    passed: bool

    def table(self) -> str:
        lines = [f"ablation {self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for variant, score in self.variants.items():
            seeds = " ".join(f"{x:.4f}" for x in self.per_seed[variant])
            lines.append(f"  {variant:<16} mean {score:.4f}  seeds [{seeds}]")
        for key, value in sorted(self.extras.items()):
            lines.append(f"  {key} = {value:.4f}")
        return "\n".join(lines)


def _val_chamfer(state, val_samples, level: str, grid: int = 48) -> float:
    window = min(64, state.config.resolution)
    cfg = ReconConfig(resolution=grid, level=level, window=window, overlap=16,
                      metric_samples=4000)
    scores = []
    for sample in val_samples:
        _, report = reconstruct(state.coarse, state.fine, sample, cfg)
        scores.append(report.chamfer if report.status == "ok" else np.inf)
    return float(np.mean(scores))


def run_ablation_a(train_samples, val_samples, base: TrainConfig,
                   seeds: Sequence[int] = (0, 1, 2)) -> AblationResult:
    """Fine conditioning under crop training: coarse embedding vs raw depth."""
    per_seed: Dict[str, List[float]] = {"embedding": [], "absolute_depth": []}
    for seed in seeds:
        coarse_cfg = replace(base, schedule="coarse_only", seed=seed)
        state_c, _ = pretrain_coarse(train_samples, coarse_cfg)
        for mode in ("embedding", "absolute_depth"):
            cfg = replace(base, schedule="fine_only", fine_mode=mode, seed=seed)
            state, _ = train_fine(train_samples, state_c.coarse, cfg)
            per_seed[mode].append(_val_chamfer(state, val_samples, "multi"))
    variants = {k: float(np.mean(v)) for k, v in per_seed.items()}
    return AblationResult(
        name="fine_conditioning",
        variants=variants,
        per_seed=per_seed,
        extras={},
        passed=variants["embedding"] <= variants["absolute_depth"],
    )


def back_hemisphere_p2s(state, sphere_sample, grid: int = 48) -> float:
    """Point-to-surface of reconstructed back-facing points (z < 0)."""
    from .geometry import point_to_surface, sample_surface

    window = min(64, state.config.resolution)
    cfg = ReconConfig(resolution=grid, level="coarse", window=window, overlap=16)
    mesh, report = reconstruct(state.coarse, state.fine, sphere_sample, cfg)
    if report.status != "ok":
        return float(np.inf)
    rng = np.random.default_rng(np.random.SeedSequence([0xB4C4, 0]))
    pts = sample_surface(mesh, 4000, rng).points
    back = pts[pts[:, 2] < 0.0]
    if len(back) == 0:
        return float(np.inf)
    return float(point_to_surface(back, sphere_sample.mesh))


def run_ablation_b(train_samples, val_samples, sphere_sample, base: TrainConfig,
                   seeds: Sequence[int] = (0, 1, 2)) -> AblationResult:
    """Front/back normal channels on vs off, for coarse occupancy quality.

    Validation Chamfer comes from the scene fixture.  The same trained
    models also reconstruct a held-out sphere render; without the back
    normal channel the net can only guess rear depth from silhouette
    priors, so its back-hemisphere point-to-surface error should be worse.
    """
    per_seed: Dict[str, List[float]] = {"with_normals": [], "no_normals": []}
    back: Dict[str, List[float]] = {"with_normals": [], "no_normals": []}
    for seed in seeds:
        for variant, use in (("with_normals", True), ("no_normals", False)):
            cfg = replace(base, schedule="coarse_only", use_normals=use, seed=seed)
            state, _ = pretrain_coarse(train_samples, cfg)
            per_seed[variant].append(_val_chamfer(state, val_samples, "coarse"))
            back[variant].append(back_hemisphere_p2s(state, sphere_sample))
    variants = {k: float(np.mean(v)) for k, v in per_seed.items()}
    extras = {
        "back_p2s_with_normals": float(np.mean(back["with_normals"])),
        "back_p2s_no_normals": float(np.mean(back["no_normals"])),
    }
    passed = (variants["with_normals"] <= variants["no_normals"]
              and extras["back_p2s_with_normals"] < extras["back_p2s_no_normals"])
    return AblationResult("normal_channels", variants, per_seed, extras, passed)


def run_ablation_c(train_samples, val_samples, base: TrainConfig,
                   seeds: Sequence[int] = (0, 1, 2)) -> AblationResult:
    """Alternate coarse/fine cadence vs joint end-to-end training."""
    per_seed: Dict[str, List[float]] = {"alternate": [], "end_to_end": []}
    for seed in seeds:
        for schedule in ("alternate", "end_to_end"):
            cfg = replace(base, schedule=schedule, seed=seed)
            state, _ = alternate_schedule(train_samples, cfg)
            per_seed[schedule].append(_val_chamfer(state, val_samples, "multi"))
    variants = {k: float(np.mean(v)) for k, v in per_seed.items()}
    return AblationResult(
        name="training_schedule",
        variants=variants,
        per_seed=per_seed,
        extras={},
        passed=variants["alternate"] <= variants["end_to_end"],
    )


def run_all_ablations(which: Sequence[str] = ("a", "b", "c"),
                      seeds: Sequence[int] = ABLATION_SEEDS) -> List[AblationResult]:
    results = []
    if "a" in which or "c" in which:
        train64, val64, _ = ablation_fixture(64)
        if "a" in which:
            results.append(run_ablation_a(train64, val64, ablation_base_a(), seeds))
        if "c" in which:
            results.append(run_ablation_c(train64, val64, ablation_base_c(), seeds))
    if "b" in which:
        train128, val128, sphere128 = ablation_fixture(128)
        results.append(run_ablation_b(train128, val128, sphere128,
                                      ablation_base_b(), seeds))
    return results
