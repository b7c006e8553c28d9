"""Dense occupancy evaluation over the unit box and window-stitched features.

The grid walks cell centers of a uniform lattice over [-1,1]^3 in batches;
the outermost voxel shell is forced to zero afterwards so marching cubes
always closes the surface.  Fine features for full-resolution inference are
computed per sliding window and stitched: each window owns the part of the
feature plane far enough from its border that zero padding cannot reach it,
so the stitched plane matches a single full-image pass exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import ScalarField
from ..pifu import FINE_RECEPTIVE_RADIUS, CropSpec

# Ownership margins are overlap/4 feature pixels per side; they must cover
# the encoder's half-resolution receptive radius of ceil(5/2) = 3.
MIN_OVERLAP = 12


class ReconError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReconConfig:
    resolution: int = 128
    level: str = "multi"
    window: int = 64
    overlap: int = 16
    batch_points: int = 8192
    metric_samples: int = 10000
    threshold: float = 0.5

    def __post_init__(self):
        if self.level not in ("coarse", "multi"):
            raise ValueError(f"unknown level {self.level!r}, expected coarse or multi")
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")
        if self.batch_points < 1:
            raise ValueError("batch_points must be positive")
        if self.window % 2 or self.overlap % 2:
            raise ValueError("window and overlap must be even")


def _window_starts(extent: int, window: int, step: int):
    starts = list(range(0, extent - window + 1, step))
    if starts[-1] != extent - window:
        starts.append(extent - window)
    return starts


def stitch_fine_features(model, sample, window: int, overlap: int) -> np.ndarray:
    """Full-resolution fine feature plane assembled from sliding windows."""
    res = sample.resolution
    if window > res:
        raise ReconError(f"window {window} exceeds image resolution {res}")
    if window % 2 or overlap % 2:
        raise ReconError("window and overlap must be even")
    if window < res:
        if overlap % 4:
            raise ReconError("overlap must be a multiple of 4 to split evenly")
        if overlap < MIN_OVERLAP:
            raise ReconError(
                f"overlap {overlap} is inside the receptive field; need >= {MIN_OVERLAP}"
            )
        if window - overlap < 2:
            raise ReconError("window barely advances; enlarge window or shrink overlap")

    if window == res:
        plane = model.features(sample)
        return np.asarray(plane)

    half = res // 2
    out = None
    margin = overlap // 4
    step = window - overlap
    for wy in _window_starts(res, window, step):
        for wx in _window_starts(res, window, step):
            crop = CropSpec(wx, wy, window, res)
            plane = np.asarray(model.features(sample, crop=crop))
            if out is None:
                out = np.zeros((plane.shape[0], half, half), dtype=plane.dtype)
            x_lo = 0 if wx == 0 else wx // 2 + margin
            x_hi = half if wx + window == res else (wx + window) // 2 - margin
            y_lo = 0 if wy == 0 else wy // 2 + margin
            y_hi = half if wy + window == res else (wy + window) // 2 - margin
            out[:, y_lo:y_hi, x_lo:x_hi] = plane[
                :, y_lo - wy // 2 : y_hi - wy // 2, x_lo - wx // 2 : x_hi - wx // 2
            ]
    return out


def evaluate_grid(coarse, fine, sample, config: ReconConfig) -> ScalarField:
    """Occupancy sampled at grid cell centers, boundary shell forced to zero.

    level "coarse" evaluates the coarse model alone; "multi" conditions the
    fine model on the coarse embedding at every point.
    """
    if config.level == "multi" and fine is None:
        raise ReconError("multi-level evaluation needs a fine model")

    plane_lo = np.asarray(coarse.features(sample))
    plane_hi = None
    if config.level == "multi":
        plane_hi = stitch_fine_features(fine, sample, config.window, config.overlap)

    field = ScalarField(np.zeros((config.resolution,) * 3, dtype=np.float32))
    points = field.grid_points()
    values = np.zeros(len(points), dtype=np.float32)
    for start in range(0, len(points), config.batch_points):
        chunk = points[start : start + config.batch_points]
        xy = chunk[:, :2]
        z = chunk[:, 2]
        pred_lo, omega = coarse.query(plane_lo, xy, z)
        if config.level == "coarse":
            values[start : start + len(chunk)] = pred_lo
        else:
            values[start : start + len(chunk)] = fine.query(
                plane_hi, xy, omega=omega, z=z
            )

    r = config.resolution
    vals = values.reshape(r, r, r)
    vals[0, :, :] = 0.0
    vals[-1, :, :] = 0.0
    vals[:, 0, :] = 0.0
    vals[:, -1, :] = 0.0
    vals[:, :, 0] = 0.0
    vals[:, :, -1] = 0.0
    return ScalarField(vals)
