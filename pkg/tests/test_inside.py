"""Occupancy oracle: hand cases, the analytic-sphere battery, invariances."""

import numpy as np
import pytest

from ircn.geometry import (
    MeshError,
    TriangleGrid,
    TriangleMesh,
    box_mesh,
    icosphere,
    occupancy_grid,
    point_in_mesh,
)


def test_unit_cube_hand_cases():
    cube = box_mesh()
    assert point_in_mesh(cube, np.array([0.0, 0.0, 0.0])) == 1
    assert point_in_mesh(cube, np.array([2.0, 0.0, 0.0])) == 0
    batch = np.array([[0.2, 0.1, -0.3], [0.49, 0.49, 0.49], [0.51, 0.0, 0.0], [-3.0, 0.0, 0.0]])
    assert point_in_mesh(cube, batch).tolist() == [1, 1, 0, 0]


def test_open_mesh_refused():
    m = box_mesh()
    holed = TriangleMesh(m.vertices, m.triangles[:-1])
    with pytest.raises(MeshError):
        point_in_mesh(holed, np.zeros(3))


def sphere_battery(seed, subdivisions, shell):
    """10k uniform points vs the analytic ball of radius 0.7.

    Points within `shell` of the analytic sphere are excluded.  The polyhedral
    fixture lies entirely between its circumsphere and the sphere shrunk by
    its max radial sag, so agreement is guaranteed whenever shell >= sag.
    """
    mesh = icosphere(0.7, subdivisions)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(10000, 3))
    r = np.linalg.norm(pts, axis=1)
    keep = np.abs(r - 0.7) > shell
    labels = point_in_mesh(mesh, pts[keep])
    analytic = (r[keep] < 0.7).astype(np.uint8)
    return labels, analytic, int(keep.sum())


def measured_sag(mesh) -> float:
    """How far the faceted surface dips inside its circumsphere."""
    normals = mesh.face_normals()
    a = mesh.vertices[mesh.triangles[:, 0]]
    plane_dist = np.abs(np.einsum("ij,ij->i", normals, a))
    return float(0.7 - plane_dist.min())


def test_sphere_oracle_battery_three_subdivisions():
    # at 3 subdivisions the faceting sag (~3.2e-3) exceeds 1e-3, so the
    # exclusion shell must be the measured sag for 100% to be attainable
    sag = measured_sag(icosphere(0.7, 3))
    assert sag < 4e-3
    labels, analytic, kept = sphere_battery(seed=7, subdivisions=3, shell=sag + 1e-9)
    assert kept > 9000
    assert np.array_equal(labels, analytic)


def test_sphere_oracle_battery_fine_fixture():
    # at 4 subdivisions the sag (~8e-4) is inside the 1e-3 shell
    assert measured_sag(icosphere(0.7, 4)) < 1e-3
    for seed in (7, 1234, 991):
        labels, analytic, kept = sphere_battery(seed=seed, subdivisions=4, shell=1e-3)
        assert kept > 9000
        assert np.array_equal(labels, analytic), f"seed {seed}"


def test_invariant_to_triangle_order():
    mesh = icosphere(0.6, 2)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.9, 0.9, size=(500, 3))
    r = np.linalg.norm(pts, axis=1)
    pts = pts[np.abs(r - 0.6) > 5e-3]
    base = point_in_mesh(mesh, pts)
    perm = rng.permutation(mesh.num_triangles)
    shuffled = TriangleMesh(mesh.vertices, mesh.triangles[perm])
    assert np.array_equal(point_in_mesh(shuffled, pts), base)


def test_invariant_to_rigid_rotation():
    mesh = box_mesh(half=(0.5, 0.3, 0.2))
    rng = np.random.default_rng(1)
    pts = rng.uniform(-0.8, 0.8, size=(500, 3))
    # margin from the surface so rotation roundoff cannot flip labels
    margin = np.min(np.abs(np.abs(pts) - np.array([0.5, 0.3, 0.2])), axis=1)
    pts = pts[margin > 1e-3]
    base = point_in_mesh(mesh, pts)
    theta = 0.7
    rot = np.array([
        [np.cos(theta), -np.sin(theta), 0.0],
        [np.sin(theta), np.cos(theta), 0.0],
        [0.0, 0.0, 1.0],
    ])
    rotated = TriangleMesh(mesh.vertices @ rot.T, mesh.triangles)
    assert np.array_equal(point_in_mesh(rotated, pts @ rot.T), base)


def test_occupancy_grid_matches_analytic_box():
    mesh = box_mesh(half=(0.5, 0.5, 0.5))
    fld = occupancy_grid(mesh, 16)
    pts = fld.grid_points().reshape(16, 16, 16, 3)
    analytic = np.all(np.abs(pts) < 0.5, axis=-1)
    # grid points never land exactly on the surface for this resolution
    assert np.array_equal(fld.values.astype(bool), analytic)
    assert fld.values.dtype == np.float32
