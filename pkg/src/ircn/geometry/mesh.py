"""Triangle mesh container and manifold validation.

Vertices live in camera-space units inside the [-1,1]^3 box.  Ground-truth
meshes must be closed 2-manifolds (every undirected edge shared by exactly
two triangles); the inside/outside oracle refuses anything else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    pass


@dataclass
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    vertex_normals: np.ndarray | None = None
    _closed: bool | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise MeshError("triangle index out of range")
        if self.vertex_normals is not None:
            self.vertex_normals = np.asarray(self.vertex_normals, dtype=np.float64).reshape(-1, 3)
            if len(self.vertex_normals) != len(self.vertices):
                raise MeshError("vertex normal count does not match vertex count")

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def corners(self):
        """The three [T,3] corner arrays."""
        v, t = self.vertices, self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def face_cross(self) -> np.ndarray:
        a, b, c = self.corners()
        return np.cross(b - a, c - a)

    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_cross(), axis=1)

    def face_normals(self) -> np.ndarray:
        cross = self.face_cross()
        norm = np.linalg.norm(cross, axis=1, keepdims=True)
        return cross / np.maximum(norm, 1e-300)

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def signed_volume(self) -> float:
        """Positive for consistently outward-oriented closed meshes."""
        a, b, c = self.corners()
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def undirected_edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.sort(e, axis=1)

    def is_closed_manifold(self) -> bool:
        if self._closed is None:
            if self.num_triangles == 0:
                self._closed = False
            else:
                edges = self.undirected_edges()
                _, counts = np.unique(edges, axis=0, return_counts=True)
                self._closed = bool(np.all(counts == 2))
        return self._closed

    def require_closed(self) -> None:
        if not self.is_closed_manifold():
            raise MeshError("mesh is not a closed 2-manifold; inside/outside is undefined")

    def is_consistently_oriented(self) -> bool:
        """True when every directed edge appears exactly once."""
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        _, counts = np.unique(directed, axis=0, return_counts=True)
        return bool(np.all(counts == 1))
