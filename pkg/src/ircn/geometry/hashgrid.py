"""Uniform-grid nearest-neighbor queries for points and triangles.

Both structures bin their primitives into a bounded 3D lattice and answer
queries by scanning Chebyshev shells outward from the query's cell.  A
primitive touching only cells beyond shell r is at least r*cell away, so a
query stops once its best distance is within that bound.  Cells whose box is
farther than the current best are pruned before their contents are gathered,
and triangle queries seed the bound with the distance to the nearest mesh
vertex, which keeps far-away queries from sweeping whole shells.  Results
are exact; the tests compare against brute force.
"""

from __future__ import annotations

import numpy as np


def _shell_offsets(r: int) -> np.ndarray:
    """All integer offsets with Chebyshev norm exactly r."""
    rng = np.arange(-r, r + 1)
    gx, gy, gz = np.meshgrid(rng, rng, rng, indexing="ij")
    offs = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    cheb = np.abs(offs).max(axis=1)
    return offs[cheb == r]


_OFFSET_CACHE: dict[int, np.ndarray] = {}


def _shell(r: int) -> np.ndarray:
    if r not in _OFFSET_CACHE:
        _OFFSET_CACHE[r] = _shell_offsets(r)
    return _OFFSET_CACHE[r]


def _grid_geometry(lo: np.ndarray, hi: np.ndarray, n: int, cell: float | None):
    extent = hi - lo
    if cell is None:
        # aim for cells about twice the mean primitive spacing
        volume = float(np.prod(np.maximum(extent, 1e-9)))
        cell = 2.0 * (volume / max(n, 1)) ** (1.0 / 3.0)
    floor = extent.max() * 1e-4 if extent.max() > 0 else 0.0
    cell = float(max(cell, 1e-9, floor))
    dims = np.maximum(np.ceil(extent / cell).astype(np.int64), 1)
    # cap the lattice: shell enumeration is cubic in the widest axis
    over = dims.max() / 64
    if over > 1:
        cell *= float(over)
        dims = np.maximum(np.ceil(extent / cell).astype(np.int64), 1)
    dims = np.minimum(dims, 64)
    return cell, dims


class _CellIndex:
    """CSR lists of primitive ids per lattice cell, plus query-side helpers."""

    def __init__(self, lo, cell, dims, bin_ids, prim_ids):
        self.lo = lo
        self.cell = cell
        self.dims = dims
        order = np.argsort(bin_ids, kind="stable")
        self._sorted_bins = bin_ids[order]
        self._sorted_prims = prim_ids[order]

    def cell_of(self, pts: np.ndarray) -> np.ndarray:
        c = np.floor((pts - self.lo) / self.cell).astype(np.int64)
        return np.clip(c, 0, self.dims - 1)

    def cell_box_dist2(self, pts: np.ndarray, cells: np.ndarray) -> np.ndarray:
        box_lo = self.lo + cells * self.cell
        gap = np.maximum(box_lo - pts, 0.0) + np.maximum(pts - (box_lo + self.cell), 0.0)
        return np.einsum("ij,ij->i", gap, gap)

    def gather(self, cells: np.ndarray):
        """(row, primitive) pairs for a [M,3] batch of cell coordinates."""
        valid = np.all((cells >= 0) & (cells < self.dims), axis=1)
        safe = np.clip(cells, 0, self.dims - 1)
        lin = (safe[:, 0] * self.dims[1] + safe[:, 1]) * self.dims[2] + safe[:, 2]
        starts = np.searchsorted(self._sorted_bins, lin)
        ends = np.searchsorted(self._sorted_bins, lin + 1)
        cnt = np.where(valid, ends - starts, 0)
        total = int(cnt.sum())
        rows = np.repeat(np.arange(len(cells)), cnt)
        block = np.cumsum(cnt) - cnt
        local = np.arange(total) - np.repeat(block, cnt)
        prims = self._sorted_prims[np.repeat(starts, cnt) + local]
        return rows, prims


def _shell_walk(index: _CellIndex, queries: np.ndarray, pair_d2, best_d2, best_idx):
    """Expand shells per query until the bound certifies the best candidate.

    pair_d2(query_rows, prim_ids) -> squared distances for candidate pairs.
    best_d2/best_idx may arrive pre-seeded with an upper bound (idx -1).
    """
    cell = index.cell
    home = index.cell_of(queries)
    # shell radius at which a query's scan has covered the entire grid
    cover = np.max(np.maximum(home, index.dims - 1 - home), axis=1)
    active = np.arange(len(queries))
    max_shell = int(index.dims.max()) + 1
    for r in range(max_shell + 1):
        if not len(active):
            break
        offs = _shell(r)
        cells = (home[active][:, None, :] + offs[None, :, :]).reshape(-1, 3)
        rows = np.repeat(active, len(offs))
        # drop cells that cannot possibly beat the current best
        d2_box = index.cell_box_dist2(queries[rows], cells)
        keep = d2_box < best_d2[rows]
        slot, prims = index.gather(cells[keep])
        if len(slot):
            qi = rows[keep][slot]
            d2 = pair_d2(qi, prims)
            order = np.argsort(d2, kind="stable")
            qi, prims, d2 = qi[order], prims[order], d2[order]
            uq, first = np.unique(qi, return_index=True)
            better = d2[first] < best_d2[uq]
            best_d2[uq[better]] = d2[first[better]]
            best_idx[uq[better]] = prims[first[better]]
        done = (best_d2[active] <= (r * cell) ** 2) | (cover[active] <= r)
        active = active[~done]
    return active  # anything left never certified (should be empty)


class PointGrid:
    """Exact nearest neighbor over a fixed point set."""

    def __init__(self, points: np.ndarray, cell: float | None = None):
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if not len(self.points):
            raise ValueError("empty point set")
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        self.cell, dims = _grid_geometry(lo, hi, len(self.points), cell)
        coords = np.clip(np.floor((self.points - lo) / self.cell).astype(np.int64), 0, dims - 1)
        lin = (coords[:, 0] * dims[1] + coords[:, 1]) * dims[2] + coords[:, 2]
        self._index = _CellIndex(lo, self.cell, dims, lin, np.arange(len(self.points)))

    def query(self, queries: np.ndarray):
        """Returns (indices, distances) of the nearest stored point per query."""
        q = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        best_d2 = np.full(len(q), np.inf)
        best_idx = np.full(len(q), -1, dtype=np.int64)

        def pair_d2(qi, prims):
            diff = q[qi] - self.points[prims]
            return np.einsum("ij,ij->i", diff, diff)

        left = _shell_walk(self._index, q, pair_d2, best_d2, best_idx)
        for i in left:
            diff = self.points - q[i]
            d2 = np.einsum("ij,ij->i", diff, diff)
            best_idx[i] = int(d2.argmin())
            best_d2[i] = float(d2.min())
        return best_idx, np.sqrt(best_d2)


class TriangleGrid:
    """Exact nearest triangle (point-to-surface) over a fixed mesh."""

    def __init__(self, mesh, cell: float | None = None):
        self.mesh = mesh
        a, b, c = mesh.corners()
        self._a, self._b, self._c = a, b, c
        t = len(a)
        if not t:
            raise ValueError("empty mesh")
        tri_lo = np.minimum(np.minimum(a, b), c)
        tri_hi = np.maximum(np.maximum(a, b), c)
        lo = tri_lo.min(axis=0)
        hi = tri_hi.max(axis=0)
        self.cell, dims = _grid_geometry(lo, hi, t, cell)

        lo_cells = np.clip(np.floor((tri_lo - lo) / self.cell).astype(np.int64), 0, dims - 1)
        hi_cells = np.clip(np.floor((tri_hi - lo) / self.cell).astype(np.int64), 0, dims - 1)
        spans = hi_cells - lo_cells + 1
        counts = spans.prod(axis=1)
        total = int(counts.sum())
        tri_ids = np.repeat(np.arange(t), counts)
        block = np.cumsum(counts) - counts
        local = np.arange(total) - np.repeat(block, counts)
        sy = np.repeat(spans[:, 1], counts)
        sz = np.repeat(spans[:, 2], counts)
        oz = local % sz
        oy = (local // sz) % sy
        ox = local // (sz * sy)
        cx = np.repeat(lo_cells[:, 0], counts) + ox
        cy = np.repeat(lo_cells[:, 1], counts) + oy
        cz = np.repeat(lo_cells[:, 2], counts) + oz
        lin = (cx * dims[1] + cy) * dims[2] + cz
        self._index = _CellIndex(lo, self.cell, dims, lin, tri_ids)
        # the bound must come from vertices that are actually on the surface
        self._used_vertex_ids = np.unique(mesh.triangles)
        self._vertex_grid = PointGrid(mesh.vertices[self._used_vertex_ids])

    def query(self, queries: np.ndarray):
        """Returns (triangle ids, exact distances) per query point."""
        q = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        # the nearest vertex bounds the answer and prunes the shell scan
        _, vd = self._vertex_grid.query(q)
        best_d2 = (vd * vd) * (1.0 + 1e-12) + 1e-300
        best_idx = np.full(len(q), -1, dtype=np.int64)

        def pair_d2(qi, prims):
            return point_triangle_dist2(q[qi], self._a[prims], self._b[prims], self._c[prims])

        left = _shell_walk(self._index, q, pair_d2, best_d2, best_idx)
        for i in left:
            d2 = point_triangle_dist2(
                np.repeat(q[i : i + 1], len(self._a), axis=0), self._a, self._b, self._c
            )
            best_idx[i] = int(d2.argmin())
            best_d2[i] = float(d2.min())
        stray = best_idx < 0
        if np.any(stray):
            # upper bound was never beaten: the nearest vertex is the answer;
            # adopt any triangle containing it
            vi, _ = self._vertex_grid.query(q[stray])
            owner = np.full(len(self.mesh.vertices), -1, dtype=np.int64)
            tri_range = np.arange(len(self._a))
            owner[self.mesh.triangles[:, 2]] = tri_range
            owner[self.mesh.triangles[:, 1]] = tri_range
            owner[self.mesh.triangles[:, 0]] = tri_range
            hit = self._used_vertex_ids[vi]
            best_idx[stray] = owner[hit]
            diff = q[stray] - self.mesh.vertices[hit]
            best_d2[stray] = np.einsum("ij,ij->i", diff, diff)
        return best_idx, np.sqrt(best_d2)


def point_triangle_dist2(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Squared exact distance from points to triangles, pairwise over rows.

    Region classification on the triangle's barycentric Voronoi diagram
    (vertex, edge, and face regions checked in order).
    """
    ab = b - a
    ac = c - a
    ap = p - a

    def dot(u, v):
        return np.einsum("ij,ij->i", u, v)

    d1 = dot(ab, ap)
    d2 = dot(ac, ap)
    bp = p - b
    d3 = dot(ab, bp)
    d4 = dot(ac, bp)
    cp = p - c
    d5 = dot(ab, cp)
    d6 = dot(ac, cp)

    closest = np.empty_like(p)
    unset = np.ones(len(p), dtype=bool)

    def settle(mask, value):
        nonlocal unset
        m = mask & unset
        if m.any():
            closest[m] = value[m]
            unset &= ~m

    settle((d1 <= 0) & (d2 <= 0), a)
    settle((d3 >= 0) & (d4 <= d3), b)
    settle((d6 >= 0) & (d5 <= d6), c)

    vc = d1 * d4 - d3 * d2
    safe_ab = np.where(d1 - d3 != 0, d1 - d3, 1.0)
    settle((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + (d1 / safe_ab)[:, None] * ab)

    vb = d5 * d2 - d1 * d6
    safe_ac = np.where(d2 - d6 != 0, d2 - d6, 1.0)
    settle((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + (d2 / safe_ac)[:, None] * ac)

    va = d3 * d6 - d5 * d4
    denom_bc = (d4 - d3) + (d5 - d6)
    safe_bc = np.where(denom_bc != 0, denom_bc, 1.0)
    settle((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
           b + ((d4 - d3) / safe_bc)[:, None] * (c - b))

    denom = va + vb + vc
    safe = np.where(denom != 0, denom, 1.0)[:, None]
    settle(unset, a + (vb[:, None] * ab + vc[:, None] * ac) / safe)

    diff = p - closest
    return np.einsum("ij,ij->i", diff, diff)
