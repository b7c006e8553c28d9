"""Orthographic camera algebra shared by sampling, training and reconstruction.

World space is the [-1,1]^3 box and the camera looks along -z, so projection
just drops the z coordinate.  Images are indexed [channel, y, x] with pixel i
spanning image coordinates [i, i+1); image coordinates scale linearly with
resolution, which ties the two model levels together: the same world point
lands at u_hi = 2 * u_lo.  Feature planes inherit the map of the image they
came from, so a plane is always sampled with the normalized coordinates of
its own window, regardless of stride.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def project(points: np.ndarray):
    """Drop z: returns (xy in [-1,1]^2 world units, depth z)."""
    points = np.asarray(points)
    return points[..., :2], points[..., 2]


def image_coords(xy_norm: np.ndarray, resolution: int) -> np.ndarray:
    return (np.asarray(xy_norm) + 1.0) / 2.0 * resolution


def norm_coords(xy_image: np.ndarray, resolution: int) -> np.ndarray:
    return np.asarray(xy_image) / resolution * 2.0 - 1.0


@dataclass(frozen=True)
class CropSpec:
    """Axis-aligned pixel window [x0, x0+size) x [y0, y0+size) of an HxH image.

    Offsets and size stay even so the window lands on whole cells of the
    stride-2 feature plane; that makes cropped features an exact translate
    of the full-image features away from the zero-padded border.
    """

    x0: int
    y0: int
    size: int
    resolution: int

    def __post_init__(self):
        if self.size <= 0 or self.size > self.resolution:
            raise ValueError(f"crop size {self.size} outside image of {self.resolution}")
        if self.size % 2 or self.x0 % 2 or self.y0 % 2:
            raise ValueError("crop offsets and size must be even")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError("crop offset must be nonnegative")
        if self.x0 + self.size > self.resolution or self.y0 + self.size > self.resolution:
            raise ValueError("crop extends past the image")

    @classmethod
    def full(cls, resolution: int) -> "CropSpec":
        return cls(0, 0, resolution, resolution)

    @property
    def is_full(self) -> bool:
        return self.x0 == 0 and self.y0 == 0 and self.size == self.resolution

    def channels(self, arr: np.ndarray) -> np.ndarray:
        return arr[:, self.y0 : self.y0 + self.size, self.x0 : self.x0 + self.size]

    def world_rect(self):
        """(x_min, x_max, y_min, y_max) covered by the window, world units."""
        x_min, y_min = norm_coords(np.array([self.x0, self.y0]), self.resolution)
        x_max, y_max = norm_coords(
            np.array([self.x0 + self.size, self.y0 + self.size]), self.resolution
        )
        return float(x_min), float(x_max), float(y_min), float(y_max)

    def contains(self, xy_norm: np.ndarray) -> np.ndarray:
        u = image_coords(xy_norm, self.resolution)
        return (
            (u[..., 0] >= self.x0)
            & (u[..., 0] < self.x0 + self.size)
            & (u[..., 1] >= self.y0)
            & (u[..., 1] < self.y0 + self.size)
        )

    def to_local_norm(self, xy_norm: np.ndarray) -> np.ndarray:
        """World xy -> the window's own normalized [-1,1]^2 frame."""
        u = image_coords(xy_norm, self.resolution)
        return (u - np.array([self.x0, self.y0])) / self.size * 2.0 - 1.0


@dataclass
class QueryBatch:
    """Camera-space query points with occupancy labels.

    x_lo / x_hi are the projections in image coordinates of the two linked
    resolutions; they satisfy x_hi = 2 * x_lo by the shared linear pixel map.
    lam is the outside fraction used to balance the occupancy loss.
    """

    points: np.ndarray
    labels: np.ndarray
    lam: float
    resolution: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if len(self.labels) != len(self.points):
            raise ValueError("label count does not match point count")
        if not np.all((self.labels == 0.0) | (self.labels == 1.0)):
            raise ValueError("labels must be 0/1 occupancies")

    @classmethod
    def from_points(cls, points, labels, resolution: int) -> "QueryBatch":
        labels = np.asarray(labels, dtype=np.float64).reshape(-1)
        lam = float((1.0 - labels).mean())
        return cls(points=points, labels=labels, lam=lam, resolution=resolution)

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, :2]

    @property
    def z(self) -> np.ndarray:
        return self.points[:, 2]

    @property
    def x_lo(self) -> np.ndarray:
        return image_coords(self.xy, self.resolution // 2)

    @property
    def x_hi(self) -> np.ndarray:
        return image_coords(self.xy, self.resolution)
