"""Area-proportional surface sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, TriangleMesh


@dataclass
class SurfaceSampleSet:
    points: np.ndarray
    normals: np.ndarray
    triangle_ids: np.ndarray


def sample_surface(mesh: TriangleMesh, n: int, rng: np.random.Generator) -> SurfaceSampleSet:
    """Draw n points with triangle choice proportional to area.

    Barycentric positions use the square-root warp, which is uniform over
    each triangle.  Normals are the face normals of the source triangles.
    """
    if mesh.num_triangles == 0:
        raise MeshError("cannot sample an empty mesh")
    if n <= 0:
        raise ValueError("sample count must be positive")
    areas = mesh.face_areas()
    total = areas.sum()
    if total <= 0:
        raise MeshError("mesh has zero total area")
    tri_ids = rng.choice(mesh.num_triangles, size=n, p=areas / total)
    a, b, c = (arr[tri_ids] for arr in mesh.corners())
    su = np.sqrt(rng.random(n))
    v = rng.random(n)
    w0 = 1.0 - su
    w1 = su * (1.0 - v)
    w2 = su * v
    points = w0[:, None] * a + w1[:, None] * b + w2[:, None] * c
    normals = mesh.face_normals()[tri_ids]
    return SurfaceSampleSet(points, normals, tri_ids)
