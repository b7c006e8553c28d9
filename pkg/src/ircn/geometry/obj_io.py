"""ASCII OBJ read/write restricted to v/vn/f records.

Output formatting is fixed-precision so that identical meshes always produce
identical bytes.  Faces are written 1-indexed; `f a//n` form is used when
vertex normals are present.
"""

from __future__ import annotations

import numpy as np

from .mesh import MeshError, TriangleMesh


def save_obj(path, mesh: TriangleMesh) -> None:
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.8f} {y:.8f} {z:.8f}")
    has_normals = mesh.vertex_normals is not None
    if has_normals:
        for x, y, z in mesh.vertex_normals:
            lines.append(f"vn {x:.8f} {y:.8f} {z:.8f}")
    for a, b, c in mesh.triangles + 1:
        if has_normals:
            lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
        else:
            lines.append(f"f {a} {b} {c}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))
        if lines:
            fh.write("\n")


def load_obj(path) -> TriangleMesh:
    vertices = []
    normals = []
    faces = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"line {lineno}: malformed vertex record")
                vertices.append([float(p) for p in parts[1:4]])
            elif parts[0] == "vn":
                normals.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise MeshError(f"line {lineno}: only triangle faces are supported")
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                faces.append([i - 1 for i in idx])
            # other record types (vt, o, g, s, usemtl) are ignored
    mesh = TriangleMesh(
        np.array(vertices, dtype=np.float64).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
        vertex_normals=np.array(normals, dtype=np.float64) if len(normals) == len(vertices) and normals else None,
    )
    return mesh
