"""Training-point sampling: surface-hugging Gaussians plus uniform filler.

Seven of eight points ride the surface with isotropic Gaussian noise (a
wider sigma for the coarse level, a tighter one for the fine level); the
rest are uniform over the box so the models see empty space too.  Labels
come from the mesh-parity oracle.  A batch whose points land all inside or
all outside would zero out one loss term, so those are redrawn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import TriangleMesh, point_in_mesh, sample_surface
from .camera import CropSpec, QueryBatch

_MAX_LABEL_RETRIES = 5
_MAX_CROP_ROUNDS = 20


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    n_points: int = 512
    sigma_coarse: float = 0.05
    sigma_fine: float = 0.03
    uniform_fraction: float = 0.125

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("need at least 2 points for a balanced batch")
        if self.sigma_coarse <= 0.0 or self.sigma_fine <= 0.0:
            raise ValueError("sigma must be positive")
        if not 0.0 < self.uniform_fraction < 1.0:
            raise ValueError("uniform_fraction must lie in (0,1)")

    def sigma(self, level: str) -> float:
        if level == "coarse":
            return self.sigma_coarse
        if level == "fine":
            return self.sigma_fine
        raise ValueError(f"unknown level {level!r}")

    def split(self):
        n_uniform = max(1, round(self.n_points * self.uniform_fraction))
        return self.n_points - n_uniform, n_uniform


def _label_batch(mesh: TriangleMesh, points: np.ndarray, resolution: int, rng) -> QueryBatch:
    labels = point_in_mesh(mesh, points, rng=rng).astype(np.float64)
    return QueryBatch.from_points(points, labels, resolution)


def sample_training_points(
    mesh: TriangleMesh,
    config: SamplerConfig,
    level: str,
    rng: np.random.Generator,
    resolution: int = 128,
) -> QueryBatch:
    sigma = config.sigma(level)
    n_importance, n_uniform = config.split()
    for _ in range(_MAX_LABEL_RETRIES):
        surf = sample_surface(mesh, n_importance, rng)
        importance = surf.points + rng.normal(scale=sigma, size=(n_importance, 3))
        uniform = rng.uniform(-1.0, 1.0, size=(n_uniform, 3))
        batch = _label_batch(mesh, np.concatenate([importance, uniform]), resolution, rng)
        if 0.0 < batch.lam < 1.0:
            return batch
    raise SamplingError(
        f"batch stayed single-sided after {_MAX_LABEL_RETRIES} draws (lam={batch.lam})"
    )


def sample_training_points_in_crop(
    mesh: TriangleMesh,
    config: SamplerConfig,
    crop: CropSpec,
    rng: np.random.Generator,
    level: str = "fine",
) -> QueryBatch:
    """Like sample_training_points but restricted to the crop's frustum.

    Importance points are rejection-filtered against the window, so a crop
    that misses the surface raises after a bounded number of rounds; the
    caller is expected to redraw the crop.  A full-image crop consumes the
    rng exactly like the uncropped sampler, so cropped and uncropped
    training agree bit for bit in that limit.
    """
    if crop.is_full:
        return sample_training_points(mesh, config, level, rng, crop.resolution)
    sigma = config.sigma(level)
    n_importance, n_uniform = config.split()
    x_min, x_max, y_min, y_max = crop.world_rect()
    for _ in range(_MAX_LABEL_RETRIES):
        kept = []
        total = 0
        for _round in range(_MAX_CROP_ROUNDS):
            surf = sample_surface(mesh, n_importance, rng)
            pts = surf.points + rng.normal(scale=sigma, size=(n_importance, 3))
            pts = pts[crop.contains(pts[:, :2])]
            if len(pts):
                kept.append(pts)
                total += len(pts)
            if total >= n_importance:
                break
        if total < n_importance:
            raise SamplingError(
                f"crop ({crop.x0},{crop.y0})+{crop.size} kept {total}/{n_importance} "
                f"importance points after {_MAX_CROP_ROUNDS} rounds"
            )
        importance = np.concatenate(kept)[:n_importance]
        uniform = np.column_stack([
            rng.uniform(x_min, x_max, size=n_uniform),
            rng.uniform(y_min, y_max, size=n_uniform),
            rng.uniform(-1.0, 1.0, size=n_uniform),
        ])
        batch = _label_batch(mesh, np.concatenate([importance, uniform]),
                             crop.resolution, rng)
        if 0.0 < batch.lam < 1.0:
            return batch
    raise SamplingError(
        f"crop batch stayed single-sided after {_MAX_LABEL_RETRIES} draws (lam={batch.lam})"
    )
