"""Analytic signed-distance primitives used to assemble procedural scenes.

Each primitive reports exact axis-aligned bounds of its surface and can
draw a point strictly inside itself; the scene builder anchors every new
primitive at such a point so the union stays connected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Interior samples stay this far (relative) from the primitive boundary so
# anchored limbs overlap their host with real volume, not a tangent point.
_INTERIOR_MARGIN = 0.7


def _unit(rng) -> np.ndarray:
    d = rng.normal(size=3)
    n = np.linalg.norm(d)
    while n < 1e-12:
        d = rng.normal(size=3)
        n = np.linalg.norm(d)
    return d / n


@dataclass
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)

    def sdf(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(points - self.center, axis=-1) - self.radius

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def transformed(self, scale: float, offset: np.ndarray) -> "Sphere":
        return Sphere((self.center - offset) * scale, self.radius * scale)

    def sample_interior(self, rng) -> np.ndarray:
        r = self.radius * _INTERIOR_MARGIN * rng.uniform() ** (1.0 / 3.0)
        return self.center + _unit(rng) * r


@dataclass
class Capsule:
    """Segment from a to b swept by a sphere of the given radius."""

    a: np.ndarray
    b: np.ndarray
    radius: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)

    def sdf(self, points: np.ndarray) -> np.ndarray:
        ab = self.b - self.a
        denom = max(float(ab @ ab), 1e-300)
        t = np.clip((points - self.a) @ ab / denom, 0.0, 1.0)
        closest = self.a + t[..., None] * ab
        return np.linalg.norm(points - closest, axis=-1) - self.radius

    def bounds(self):
        lo = np.minimum(self.a, self.b) - self.radius
        hi = np.maximum(self.a, self.b) + self.radius
        return lo, hi

    def transformed(self, scale: float, offset: np.ndarray) -> "Capsule":
        return Capsule(
            (self.a - offset) * scale,
            (self.b - offset) * scale,
            self.radius * scale,
        )

    def sample_interior(self, rng) -> np.ndarray:
        axis = self.a + rng.uniform() * (self.b - self.a)
        r = self.radius * _INTERIOR_MARGIN * rng.uniform() ** (1.0 / 3.0)
        return axis + _unit(rng) * r


@dataclass
class Box:
    """Oriented box; rotation columns are the local axes in world space."""

    center: np.ndarray
    half: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.half = np.asarray(self.half, dtype=np.float64)
        self.rotation = np.asarray(self.rotation, dtype=np.float64)

    def sdf(self, points: np.ndarray) -> np.ndarray:
        local = (points - self.center) @ self.rotation
        q = np.abs(local) - self.half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside

    def bounds(self):
        reach = np.abs(self.rotation) @ self.half
        return self.center - reach, self.center + reach

    def transformed(self, scale: float, offset: np.ndarray) -> "Box":
        return Box((self.center - offset) * scale, self.half * scale, self.rotation)

    def sample_interior(self, rng) -> np.ndarray:
        local = rng.uniform(-_INTERIOR_MARGIN, _INTERIOR_MARGIN, size=3) * self.half
        return self.center + self.rotation @ local


def random_rotation(rng) -> np.ndarray:
    """Haar-uniform rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def union_sdf(primitives, points: np.ndarray) -> np.ndarray:
    if not primitives:
        raise ValueError("union of zero primitives")
    d = primitives[0].sdf(points)
    for prim in primitives[1:]:
        np.minimum(d, prim.sdf(points), out=d)
    return d


def union_bounds(primitives):
    los, his = zip(*(p.bounds() for p in primitives))
    return np.min(los, axis=0), np.max(his, axis=0)
