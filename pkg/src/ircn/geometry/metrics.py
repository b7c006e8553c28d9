"""Surface-quality metrics: Chamfer, point-to-surface, normal consistency.

Chamfer uses unsquared Euclidean distances averaged in both directions and
halved, reported in units of the [-1,1]^3 box.  Point-to-surface is the mean
exact point-to-triangle distance; normal consistency is the mean cosine
against the face normal of the nearest triangle.
"""

from __future__ import annotations

import numpy as np

from .hashgrid import PointGrid, TriangleGrid
from .mesh import TriangleMesh


def nearest_distances(from_points: np.ndarray, to_points: np.ndarray) -> np.ndarray:
    _, d = PointGrid(to_points).query(from_points)
    return d


def chamfer_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 3)
    if not len(a) or not len(b):
        raise ValueError("chamfer distance needs two nonempty point sets")
    return 0.5 * (float(nearest_distances(a, b).mean()) + float(nearest_distances(b, a).mean()))


def point_to_surface(points: np.ndarray, mesh: TriangleMesh) -> float:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if not len(points):
        raise ValueError("point-to-surface needs a nonempty point set")
    _, dists = TriangleGrid(mesh).query(points)
    return float(dists.mean())


def normal_consistency(points: np.ndarray, normals: np.ndarray, mesh: TriangleMesh) -> float:
    """Mean cosine between sample normals and the nearest gt face normal."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    if len(points) != len(normals) or not len(points):
        raise ValueError("points and normals must be nonempty and aligned")
    lengths = np.linalg.norm(normals, axis=1)
    if np.any(lengths < 1e-12):
        raise ValueError("zero-length normal in sample set")
    unit = normals / lengths[:, None]
    tri_ids, _ = TriangleGrid(mesh).query(points)
    face_n = mesh.face_normals()[tri_ids]
    return float(np.einsum("ij,ij->i", unit, face_n).mean())


def hausdorff_points(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point sets."""
    return max(float(nearest_distances(a, b).max()), float(nearest_distances(b, a).max()))
