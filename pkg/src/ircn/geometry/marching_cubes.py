"""Marching cubes with face-consistent ambiguity resolution.

Instead of a fixed 256-case triangle table (which lets two neighboring cells
disagree on an ambiguous face and crack the surface), each cell builds its
contour from per-face rules:

  * a face crossed twice yields one segment joining the two crossed edges;
  * a face crossed four times (both diagonals split) is resolved by the
    bilinear saddle value s = (q0*q2 - q1*q3) / (q0 + q2 - q1 - q3), which is
    invariant to corner relabeling, so the two cells sharing the face always
    pick the same pairing.

Segments inside a cell always close into loops (every crossed cell edge
borders exactly two faces), loops are fan-triangulated, and each loop is
oriented outward against the trilinear gradient.  Vertices are welded by
global grid-edge identity, which makes the output watertight whenever the
field crosses the threshold strictly inside the bounds.
"""

from __future__ import annotations

import numpy as np

from .field import ScalarField
from .mesh import TriangleMesh

_T_CLAMP = 1e-4

# corner c sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1) from the cell origin
CORNER_OFFSETS = [((c & 1), ((c >> 1) & 1), ((c >> 2) & 1)) for c in range(8)]

# 12 cell edges as (corner, corner); slots 0-3 along x, 4-7 along y, 8-11 along z
EDGE_CORNERS = [
    (0, 1), (2, 3), (4, 5), (6, 7),
    (0, 2), (1, 3), (4, 6), (5, 7),
    (0, 4), (1, 5), (2, 6), (3, 7),
]

# (axis, origin offset) of each edge slot, for global edge identity
EDGE_AXIS_ORIGIN = []
for _a, _b in EDGE_CORNERS:
    _oa = CORNER_OFFSETS[_a]
    _ob = CORNER_OFFSETS[_b]
    _axis = next(i for i in range(3) if _oa[i] != _ob[i])
    EDGE_AXIS_ORIGIN.append((_axis, _oa))

# each face: 4 corners in cyclic order, and the cycle's 4 edge slots
# (edge p joins cyclic corners p and p+1)
FACES = [
    ((0, 2, 6, 4), (4, 10, 6, 8)),   # x = 0
    ((1, 3, 7, 5), (5, 11, 7, 9)),   # x = 1
    ((0, 1, 5, 4), (0, 9, 2, 8)),    # y = 0
    ((2, 3, 7, 6), (1, 11, 3, 10)),  # y = 1
    ((0, 1, 3, 2), (0, 5, 1, 4)),    # z = 0
    ((4, 5, 7, 6), (2, 7, 3, 6)),    # z = 1
]


def _face_segments(corners, edges, flags, q, threshold):
    """Contour segments of one face as (slot, slot) pairs."""
    b = [flags[c] for c in corners]
    crossed = [p for p in range(4) if b[p] != b[(p + 1) % 4]]
    if not crossed:
        return []
    if len(crossed) == 2:
        return [(edges[crossed[0]], edges[crossed[1]])]
    # both diagonals split: connect through the saddle or around it
    q0, q1, q2, q3 = (q[c] for c in corners)
    s = (q0 * q2 - q1 * q3) / (q0 + q2 - q1 - q3)
    inside_connected = s >= threshold
    segs = []
    for p in range(4):
        # cut off each corner whose region does not own the face center
        if b[p] != inside_connected:
            segs.append((edges[(p - 1) % 4], edges[p]))
    return segs


def _walk_loops(segments):
    adj: dict[int, list[int]] = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    loops = []
    visited: set[int] = set()
    for start in sorted(adj):
        if start in visited:
            continue
        loop = [start]
        visited.add(start)
        prev, cur = None, start
        while True:
            nbrs = adj[cur]
            nxt = nbrs[0] if nbrs[0] != prev else nbrs[1]
            if nxt == start:
                break
            loop.append(nxt)
            visited.add(nxt)
            prev, cur = cur, nxt
        loops.append(loop)
    return loops


def _config_flags(config: int):
    return [(config >> c) & 1 == 1 for c in range(8)]


_TOPOLOGY_CACHE: dict[int, list | None] = {}


def _cached_topology(config: int):
    """Loop structure for configs with no ambiguous face, else None."""
    if config in _TOPOLOGY_CACHE:
        return _TOPOLOGY_CACHE[config]
    flags = _config_flags(config)
    segments = []
    ambiguous = False
    for corners, edges in FACES:
        b = [flags[c] for c in corners]
        crossed = [p for p in range(4) if b[p] != b[(p + 1) % 4]]
        if len(crossed) == 4:
            ambiguous = True
            break
        if len(crossed) == 2:
            segments.append((edges[crossed[0]], edges[crossed[1]]))
    result = None if ambiguous else _walk_loops(segments)
    _TOPOLOGY_CACHE[config] = result
    return result


def _crossing_vertices(values, inside, threshold, field: ScalarField):
    """Vertex positions and per-axis edge->vertex index grids."""
    coords = [field.axis_coords(i) for i in range(3)]
    step = field.cell_size()
    positions = []
    index_grids = []
    next_id = 0
    for axis in range(3):
        sl0 = [slice(None)] * 3
        sl1 = [slice(None)] * 3
        sl0[axis] = slice(0, -1)
        sl1[axis] = slice(1, None)
        v0 = values[tuple(sl0)]
        v1 = values[tuple(sl1)]
        crossed = inside[tuple(sl0)] != inside[tuple(sl1)]
        idx = np.full(v0.shape, -1, dtype=np.int64)
        ii, jj, kk = np.nonzero(crossed)
        if len(ii):
            a = v0[ii, jj, kk]
            b = v1[ii, jj, kk]
            t = np.clip((threshold - a) / (b - a), _T_CLAMP, 1.0 - _T_CLAMP)
            base = np.stack([coords[0][ii], coords[1][jj], coords[2][kk]], axis=1)
            base[:, axis] += t * step[axis]
            positions.append(base)
            idx[ii, jj, kk] = np.arange(next_id, next_id + len(ii))
            next_id += len(ii)
        index_grids.append(idx)
    all_pos = np.concatenate(positions) if positions else np.zeros((0, 3))
    return all_pos, index_grids


_GRAD_SIGN = np.array([[1 if CORNER_OFFSETS[c][axis] else -1 for c in range(8)] for axis in range(3)], dtype=np.float64)


def marching_cubes(field: ScalarField, threshold: float = 0.5) -> TriangleMesh:
    values = np.asarray(field.values, dtype=np.float64)
    if min(values.shape) < 2:
        raise ValueError("marching cubes needs at least 2 samples per axis")
    inside = values >= threshold
    if inside.all() or not inside.any():
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    # cube configuration per cell
    config = np.zeros(tuple(s - 1 for s in values.shape), dtype=np.uint8)
    for c, (ox, oy, oz) in enumerate(CORNER_OFFSETS):
        sx = slice(ox, values.shape[0] - 1 + ox)
        sy = slice(oy, values.shape[1] - 1 + oy)
        sz = slice(oz, values.shape[2] - 1 + oz)
        config |= (inside[sx, sy, sz] << c).astype(np.uint8)
    cells = np.argwhere((config != 0) & (config != 255))
    if not len(cells):
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    vertices, edge_idx = _crossing_vertices(values, inside, threshold, field)

    ci, cj, ck = cells[:, 0], cells[:, 1], cells[:, 2]
    q8 = np.stack([values[ci + ox, cj + oy, ck + oz] for ox, oy, oz in CORNER_OFFSETS], axis=1)
    slot_ids = np.stack(
        [edge_idx[axis][ci + ox, cj + oy, ck + oz] for axis, (ox, oy, oz) in EDGE_AXIS_ORIGIN],
        axis=1,
    )
    configs = config[ci, cj, ck]
    # trilinear gradient at each cell center (up to a constant factor)
    grads = q8 @ _GRAD_SIGN.T

    q8_list = q8.tolist()
    slots_list = slot_ids.tolist()
    grad_list = grads.tolist()
    configs_list = configs.tolist()

    triangles: list[tuple[int, int, int]] = []
    for m in range(len(cells)):
        cfg = configs_list[m]
        loops = _cached_topology(cfg)
        if loops is None:
            flags = _config_flags(cfg)
            q = q8_list[m]
            segments = []
            for corners, edges in FACES:
                segments.extend(_face_segments(corners, edges, flags, q, threshold))
            loops = _walk_loops(segments)
        slots = slots_list[m]
        grad = grad_list[m]
        for loop in loops:
            if len(loop) < 3:
                continue
            ids = [slots[s] for s in loop]
            pts = vertices[ids]
            rolled = np.roll(pts, -1, axis=0)
            newell = (
                float((pts[:, 1] * rolled[:, 2] - pts[:, 2] * rolled[:, 1]).sum()),
                float((pts[:, 2] * rolled[:, 0] - pts[:, 0] * rolled[:, 2]).sum()),
                float((pts[:, 0] * rolled[:, 1] - pts[:, 1] * rolled[:, 0]).sum()),
            )
            # the gradient points toward the inside; outward loops oppose it
            score = newell[0] * grad[0] + newell[1] * grad[1] + newell[2] * grad[2]
            if abs(score) < 1e-14:
                flags = _config_flags(cfg)
                inward = [0.0, 0.0, 0.0]
                n_in = sum(flags)
                for c, (ox, oy, oz) in enumerate(CORNER_OFFSETS):
                    w = (1.0 / n_in) if flags[c] else (-1.0 / (8 - n_in))
                    inward[0] += w * ox
                    inward[1] += w * oy
                    inward[2] += w * oz
                score = newell[0] * inward[0] + newell[1] * inward[1] + newell[2] * inward[2]
            if score > 0:
                ids.reverse()
            for i in range(1, len(ids) - 1):
                triangles.append((ids[0], ids[i], ids[i + 1]))

    return TriangleMesh(vertices, np.array(triangles, dtype=np.int64))
