"""Nearest-neighbor structures must agree exactly with brute force."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ircn.geometry import PointGrid, TriangleGrid, box_mesh, icosphere, point_triangle_dist2


def brute_nn(queries, points):
    d2 = ((queries[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1), np.sqrt(d2.min(axis=1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_point_grid_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 200))
    points = rng.uniform(-1, 1, size=(n, 3))
    queries = rng.uniform(-1.5, 1.5, size=(50, 3))
    _, bd = brute_nn(queries, points)
    _, gd = PointGrid(points).query(queries)
    assert np.allclose(gd, bd, atol=1e-12)


def test_point_grid_clustered_points_and_far_queries():
    rng = np.random.default_rng(5)
    cluster = rng.normal(0, 0.01, size=(300, 3))
    lone = np.array([[0.9, 0.9, 0.9]])
    points = np.concatenate([cluster, lone])
    queries = np.array([[0.89, 0.91, 0.9], [0.0, 0.0, 0.0], [-2.0, -2.0, -2.0]])
    bi, bd = brute_nn(queries, points)
    gi, gd = PointGrid(points).query(queries)
    assert np.allclose(gd, bd, atol=1e-12)
    assert gi[0] == 300


def test_point_grid_single_point():
    gi, gd = PointGrid(np.array([[0.1, 0.2, 0.3]])).query(np.array([[1.1, 0.2, 0.3]]))
    assert gi[0] == 0
    assert abs(gd[0] - 1.0) < 1e-12


def test_point_grid_rejects_empty():
    with pytest.raises(ValueError):
        PointGrid(np.zeros((0, 3)))


def brute_p2s(queries, mesh):
    a, b, c = mesh.corners()
    best = np.full(len(queries), np.inf)
    for i, q in enumerate(queries):
        qs = np.repeat(q[None, :], len(a), axis=0)
        best[i] = np.sqrt(point_triangle_dist2(qs, a, b, c).min())
    return best


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_triangle_grid_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    mesh = icosphere(0.4 + 0.4 * rng.random(), 1)
    queries = rng.uniform(-1.2, 1.2, size=(40, 3))
    bd = brute_p2s(queries, mesh)
    _, gd = TriangleGrid(mesh).query(queries)
    assert np.allclose(gd, bd, atol=1e-10)


def test_triangle_grid_hand_distances():
    cube = box_mesh()
    queries = np.array([
        [0.0, 0.0, 1.5],     # face distance 1.0
        [0.7, 0.7, 0.0],     # edge distance sqrt(2)*0.2
        [0.6, 0.6, 0.6],     # corner distance sqrt(3)*0.1
        [0.0, 0.0, 0.0],     # inside: nearest face 0.5
    ])
    _, d = TriangleGrid(cube).query(queries)
    expected = [1.0, np.sqrt(2) * 0.2, np.sqrt(3) * 0.1, 0.5]
    assert np.allclose(d, expected, atol=1e-12)
