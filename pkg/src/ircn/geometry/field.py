"""Regular scalar occupancy field on an axis-aligned box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ScalarField:
    """values[ix, iy, iz] sampled at vertex-centered grid positions.

    Axis i spans bounds with R points including both ends, so cell size is
    (hi - lo) / (R - 1).
    """

    values: np.ndarray
    bounds: tuple = ((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 3:
            raise ValueError(f"field values must be rank 3, got shape {self.values.shape}")
        lo, hi = self.bounds
        self.bounds = (tuple(float(v) for v in lo), tuple(float(v) for v in hi))

    @property
    def resolution(self) -> tuple:
        return self.values.shape

    def axis_coords(self, axis: int) -> np.ndarray:
        lo, hi = self.bounds
        return np.linspace(lo[axis], hi[axis], self.values.shape[axis])

    def cell_size(self) -> np.ndarray:
        lo, hi = self.bounds
        r = np.array(self.values.shape)
        return (np.array(hi) - np.array(lo)) / (r - 1)

    def grid_points(self) -> np.ndarray:
        """All sample positions as [Rx*Ry*Rz, 3], x varying slowest."""
        xs, ys, zs = (self.axis_coords(i) for i in range(3))
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
