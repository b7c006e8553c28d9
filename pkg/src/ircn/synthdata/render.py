"""Orthographic renderer for meshes inside the [-1,1]^3 box.

The camera looks along -z.  Pixel (iy, ix) of an HxH image covers the ray
through world point

    x = (ix + 0.5) / H * 2 - 1,    y = (iy + 0.5) / H * 2 - 1,

so array axis 1 grows with world y and axis 2 with world x; this is the
same linear pixel map the feature samplers use.  The front map keeps the
hit with the largest z (nearest the camera), the back map the smallest.
Normal maps store outward surface normals encoded as (n+1)/2, background
pixels are exactly 0.5 in every channel, and each half-resolution channel
is the exact 2x2 box mean of its full-resolution counterpart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..geometry import TriangleMesh

CAMERA_CONVENTION = "ortho:-z,y-up,x-right"

_LIGHT = np.array([0.4, 0.6, 0.9]) / np.linalg.norm([0.4, 0.6, 0.9])
_ALBEDO = np.array([0.82, 0.71, 0.60])
_AMBIENT = 0.25
_BACKGROUND = 0.5
_DEGENERATE_AREA = 1e-14


def pixel_centers(resolution: int) -> np.ndarray:
    return (np.arange(resolution) + 0.5) / resolution * 2.0 - 1.0


def downsample2(channels: np.ndarray) -> np.ndarray:
    """Exact 2x2 box mean over the trailing two axes, rounded once to f32."""
    h, w = channels.shape[-2:]
    if h % 2 or w % 2:
        raise ValueError("downsample2 needs even spatial dimensions")
    blocks = channels.astype(np.float64).reshape(
        channels.shape[:-2] + (h // 2, 2, w // 2, 2)
    )
    return blocks.mean(axis=(-3, -1)).astype(np.float32)


@dataclass
class RenderedSample:
    img_hi: np.ndarray
    img_lo: np.ndarray
    fnml_hi: np.ndarray
    fnml_lo: np.ndarray
    bnml_hi: np.ndarray
    bnml_lo: np.ndarray
    mask: np.ndarray
    mask_lo: np.ndarray
    resolution: int
    camera: str = CAMERA_CONVENTION
    mesh: Optional[TriangleMesh] = None


def _cast_rays(mesh: TriangleMesh, resolution: int):
    """All (pixel, triangle) hits: flat pixel id, depth z, barycentric, tri id."""
    verts = mesh.vertices
    a, b, c = (verts[mesh.triangles[:, k]] for k in range(3))

    denom = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    live = np.abs(denom) > _DEGENERATE_AREA

    # Pixel-index bounding box of each triangle's xy projection.
    h = resolution
    xy_lo = np.minimum(np.minimum(a[:, :2], b[:, :2]), c[:, :2])
    xy_hi = np.maximum(np.maximum(a[:, :2], b[:, :2]), c[:, :2])
    i_lo = np.ceil((xy_lo + 1.0) * h / 2.0 - 0.5).astype(np.int64)
    i_hi = np.floor((xy_hi + 1.0) * h / 2.0 - 0.5).astype(np.int64)
    i_lo = np.maximum(i_lo, 0)
    i_hi = np.minimum(i_hi, h - 1)
    width = np.maximum(i_hi[:, 0] - i_lo[:, 0] + 1, 0)
    height = np.maximum(i_hi[:, 1] - i_lo[:, 1] + 1, 0)
    counts = np.where(live, width * height, 0)

    tri_ids = np.repeat(np.arange(len(counts)), counts)
    if len(tri_ids) == 0:
        empty = np.zeros(0)
        return empty.astype(np.int64), empty, np.zeros((0, 3)), empty.astype(np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    k = np.arange(counts.sum()) - np.repeat(starts, counts)
    ix = i_lo[tri_ids, 0] + k % width[tri_ids]
    iy = i_lo[tri_ids, 1] + k // width[tri_ids]

    coords = pixel_centers(h)
    px = coords[ix]
    py = coords[iy]
    ax, ay = a[tri_ids, 0], a[tri_ids, 1]
    bx, by = b[tri_ids, 0], b[tri_ids, 1]
    cx, cy = c[tri_ids, 0], c[tri_ids, 1]
    d = denom[tri_ids]
    wa = ((bx - px) * (cy - py) - (by - py) * (cx - px)) / d
    wb = ((cx - px) * (ay - py) - (cy - py) * (ax - px)) / d
    wc = 1.0 - wa - wb
    inside = (wa >= 0.0) & (wb >= 0.0) & (wc >= 0.0)

    tri_ids = tri_ids[inside]
    bary = np.stack([wa[inside], wb[inside], wc[inside]], axis=1)
    z = (
        bary[:, 0] * a[tri_ids, 2]
        + bary[:, 1] * b[tri_ids, 2]
        + bary[:, 2] * c[tri_ids, 2]
    )
    pix = iy[inside] * h + ix[inside]
    return pix, z, bary, tri_ids


def _hit_normals(mesh: TriangleMesh, bary: np.ndarray, tri_ids: np.ndarray) -> np.ndarray:
    if mesh.vertex_normals is not None:
        corners = mesh.vertex_normals[mesh.triangles[tri_ids]]
        n = np.einsum("hk,hkj->hj", bary, corners)
        n /= np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)
        return n
    return mesh.face_normals()[tri_ids]


def render_orthographic(mesh: Optional[TriangleMesh], resolution: int = 128) -> RenderedSample:
    if resolution % 2:
        raise ValueError("resolution must be even to link the half-res channels")
    h = resolution
    img = np.full((3, h, h), _BACKGROUND)
    front = np.zeros((3, h, h))
    back = np.zeros((3, h, h))
    mask = np.zeros((1, h, h))

    if mesh is not None and mesh.num_triangles:
        pix, z, bary, tri_ids = _cast_rays(mesh, h)
        if len(pix):
            order = np.lexsort((z, pix))
            pix, z, bary, tri_ids = pix[order], z[order], bary[order], tri_ids[order]
            new_run = np.ones(len(pix), dtype=bool)
            new_run[1:] = pix[1:] != pix[:-1]
            end_run = np.ones(len(pix), dtype=bool)
            end_run[:-1] = new_run[1:]

            iy, ix = np.divmod(pix[new_run], h)
            mask[0, iy, ix] = 1.0
            back[:, iy, ix] = _hit_normals(mesh, bary[new_run], tri_ids[new_run]).T
            n_front = _hit_normals(mesh, bary[end_run], tri_ids[end_run])
            front[:, iy, ix] = n_front.T

            shade = _AMBIENT + (1.0 - _AMBIENT) * np.maximum(n_front @ _LIGHT, 0.0)
            img[:, iy, ix] = _ALBEDO[:, None] * shade

    img_hi = np.clip(img, 0.0, 1.0).astype(np.float32)
    fnml_hi = ((front + 1.0) / 2.0).astype(np.float32)
    bnml_hi = ((back + 1.0) / 2.0).astype(np.float32)
    mask_hi = mask.astype(np.float32)
    return RenderedSample(
        img_hi=img_hi,
        img_lo=downsample2(img_hi),
        fnml_hi=fnml_hi,
        fnml_lo=downsample2(fnml_hi),
        bnml_hi=bnml_hi,
        bnml_lo=downsample2(bnml_hi),
        mask=mask_hi,
        mask_lo=downsample2(mask_hi),
        resolution=h,
        mesh=mesh,
    )
