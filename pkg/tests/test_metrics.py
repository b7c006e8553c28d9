"""Chamfer, point-to-surface, and normal-consistency metric contracts."""

import numpy as np
import pytest

from ircn.geometry import (
    TriangleMesh,
    chamfer_distance,
    hausdorff_points,
    icosphere,
    normal_consistency,
    point_to_surface,
    sample_surface,
)


def test_chamfer_identical_clouds_zero():
    rng = np.random.default_rng(0)
    a = rng.uniform(-1, 1, size=(500, 3))
    assert chamfer_distance(a, a) == 0.0


def test_chamfer_two_singletons():
    assert abs(chamfer_distance([[0.0, 0, 0]], [[1.0, 0, 0]]) - 1.0) < 1e-12


def test_chamfer_symmetric_and_nonnegative():
    rng = np.random.default_rng(1)
    a = rng.uniform(-1, 1, size=(200, 3))
    b = rng.uniform(-1, 1, size=(300, 3))
    ab = chamfer_distance(a, b)
    assert ab >= 0
    assert abs(ab - chamfer_distance(b, a)) < 1e-12


def test_chamfer_rejects_empty():
    with pytest.raises(ValueError):
        chamfer_distance(np.zeros((0, 3)), np.ones((4, 3)))


def test_p2s_zero_on_own_samples():
    mesh = icosphere(0.5, 2)
    s = sample_surface(mesh, 2000, np.random.default_rng(0))
    assert point_to_surface(s.points, mesh) < 1e-6


def test_p2s_isolated_triangle():
    tri = TriangleMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]), [[0, 1, 2]])
    assert abs(point_to_surface(np.array([[0.2, 0.2, 0.37]]), tri) - 0.37) < 1e-12


def test_p2s_dilated_sphere():
    base = icosphere(0.5, 3)
    dilated = icosphere(0.55, 3)
    s = sample_surface(dilated, 4000, np.random.default_rng(2))
    assert abs(point_to_surface(s.points, base) - 0.05) < 0.005


def test_p2s_not_above_chamfer_on_dense_sphere_samples():
    mesh = icosphere(0.6, 3)
    rng = np.random.default_rng(3)
    recon = sample_surface(icosphere(0.65, 3), 5000, rng).points
    gt_samples = sample_surface(mesh, 20000, rng).points
    assert point_to_surface(recon, mesh) <= chamfer_distance(recon, gt_samples) + 1e-9


def test_normal_consistency_self():
    mesh = icosphere(0.5, 2)
    s = sample_surface(mesh, 3000, np.random.default_rng(0))
    assert abs(normal_consistency(s.points, s.normals, mesh) - 1.0) < 1e-6


def test_normal_consistency_flipped():
    mesh = icosphere(0.5, 2)
    s = sample_surface(mesh, 3000, np.random.default_rng(0))
    assert abs(normal_consistency(s.points, -s.normals, mesh) + 1.0) < 1e-6


def test_normal_consistency_sixty_degrees():
    mesh = icosphere(0.5, 3)
    s = sample_surface(mesh, 5000, np.random.default_rng(1))
    # rotate each normal by 60 degrees about a perpendicular axis
    rng = np.random.default_rng(2)
    helper = rng.standard_normal((len(s.points), 3))
    axis = np.cross(s.normals, helper)
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    cos60, sin60 = 0.5, np.sqrt(3) / 2
    perturbed = cos60 * s.normals + sin60 * np.cross(axis, s.normals)
    value = normal_consistency(s.points, perturbed, mesh)
    assert abs(value - 0.5) < 0.02


def test_normal_consistency_rejects_zero_normal():
    mesh = icosphere(0.5, 1)
    pts = np.array([[0.5, 0.0, 0.0]])
    with pytest.raises(ValueError):
        normal_consistency(pts, np.zeros((1, 3)), mesh)


def test_hausdorff_hand_value():
    a = np.array([[0.0, 0, 0], [1.0, 0, 0]])
    b = np.array([[0.0, 0, 0], [1.0, 0, 0], [1.0, 2.0, 0]])
    assert abs(hausdorff_points(a, b) - 2.0) < 1e-12
