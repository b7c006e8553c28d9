"""Procedural "body-like" scenes: a torso capsule with attached limbs.

A scene unions 3..8 primitives.  Every limb is anchored at a point strictly
inside an already placed primitive, so the continuous union is connected by
construction.  The surface itself comes from marching cubes over a clamped
signed-distance field; the discrete mesh is re-checked for closedness and
connectivity because a thin limb can still pinch off at grid resolution, in
which case the builder retries with a perturbed stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import ScalarField, TriangleMesh, marching_cubes
from .primitives import Box, Capsule, Sphere, random_rotation, union_bounds, union_sdf

GRID_RESOLUTION = 64
# Surfaces are scaled to this extent; marching-cubes vertices can overshoot
# the analytic bounds by at most one cell, which keeps them inside 0.9.
FIT_EXTENT = 0.85
_MAX_ATTEMPTS = 5
_STREAM = 0x5CE2E


class SceneError(RuntimeError):
    pass


@dataclass
class SceneSpec:
    seed: int
    primitives: list = field(default_factory=list)
    scale: float = 1.0
    offset: np.ndarray = None
    attempt: int = 0


def scene_field(primitives, resolution: int = GRID_RESOLUTION) -> ScalarField:
    """Clamped-SDF occupancy field on the [-1,1]^3 grid.

    Values ramp linearly from 1 inside to 0 outside over a band of two cells,
    so the 0.5 level set of the trilinear interpolant tracks the true surface
    with sub-cell accuracy.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    axis = np.linspace(-1.0, 1.0, resolution)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    points = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    d = union_sdf(primitives, points)
    band = 2.0 * (2.0 / (resolution - 1))
    values = np.clip(0.5 - d / band, 0.0, 1.0)
    return ScalarField(values.reshape(resolution, resolution, resolution))


def _component_count(mesh: TriangleMesh) -> int:
    parent = list(range(mesh.num_vertices))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b, c in mesh.triangles.tolist():
        ra = find(a)
        rb = find(b)
        if rb != ra:
            parent[rb] = ra
            rb = ra
        rc = find(c)
        if rc != ra:
            parent[rc] = ra
    used = np.unique(mesh.triangles)
    return len({find(int(v)) for v in used})


def _build_spec(seed: int, attempt: int) -> SceneSpec:
    rng = np.random.default_rng(np.random.SeedSequence([_STREAM, seed, attempt]))
    half_len = rng.uniform(0.25, 0.45)
    lean = rng.normal(scale=0.06, size=2)
    torso = Capsule(
        np.array([lean[0], -half_len, lean[1]]),
        np.array([-lean[0], half_len, -lean[1]]),
        rng.uniform(0.20, 0.30),
    )
    prims = [torso]
    total = int(rng.integers(3, 9))
    while len(prims) < total:
        host = prims[int(rng.integers(0, len(prims)))]
        anchor = host.sample_interior(rng)
        kind = rng.uniform()
        if kind < 0.6:
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            tip = np.clip(anchor + direction * rng.uniform(0.25, 0.55), -0.95, 0.95)
            prims.append(Capsule(anchor, tip, rng.uniform(0.08, 0.14)))
        elif kind < 0.85:
            prims.append(Sphere(anchor, rng.uniform(0.10, 0.22)))
        else:
            prims.append(Box(anchor, rng.uniform(0.08, 0.20, size=3), random_rotation(rng)))

    lo, hi = union_bounds(prims)
    mid = (lo + hi) / 2.0
    extent = float(np.max(hi - mid))
    scale = FIT_EXTENT / extent
    fitted = [p.transformed(scale, mid) for p in prims]
    return SceneSpec(seed=seed, primitives=fitted, scale=scale, offset=mid, attempt=attempt)


def _discretize(spec: SceneSpec, resolution: int) -> TriangleMesh:
    mesh = marching_cubes(scene_field(spec.primitives, resolution), 0.5)
    if mesh.num_triangles == 0:
        raise SceneError("empty surface")
    if not mesh.is_closed_manifold():
        raise SceneError("surface not closed")
    if _component_count(mesh) != 1:
        raise SceneError("union pinched into multiple components")
    if float(np.max(np.abs(mesh.vertices))) >= 0.9:
        raise SceneError("surface escaped the 0.9 box")
    return mesh


def generate_scene(seed: int, resolution: int = GRID_RESOLUTION):
    """Deterministic scene for a seed: (SceneSpec, closed TriangleMesh)."""
    last = None
    for attempt in range(_MAX_ATTEMPTS):
        spec = _build_spec(seed, attempt)
        try:
            mesh = _discretize(spec, resolution)
        except SceneError as exc:
            last = exc
            continue
        return spec, mesh
    raise SceneError(f"no valid scene for seed {seed} after {_MAX_ATTEMPTS} attempts: {last}")
