import numpy as np
import pytest

from ircn.synthdata import (
    Box,
    Capsule,
    SceneError,
    SceneSpec,
    Sphere,
    generate_scene,
    random_rotation,
    scene_field,
    union_sdf,
)
from ircn.synthdata.scenes import _component_count, _discretize


def test_sphere_sdf_hand_values():
    s = Sphere([0.0, 0.0, 0.0], 1.0)
    d = s.sdf(np.array([[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    assert np.allclose(d, [1.0, -1.0, 0.0])


def test_capsule_sdf_hand_values():
    c = Capsule([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0.25)
    d = c.sdf(np.array([[2.0, 0.0, 0.0], [0.5, 0.25, 0.0], [0.5, 0.0, 0.0]]))
    assert np.allclose(d, [0.75, 0.0, -0.25])


def test_box_sdf_hand_values():
    b = Box([0.0, 0.0, 0.0], [1.0, 2.0, 3.0], np.eye(3))
    d = b.sdf(np.array([[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [2.0, 3.0, 4.0]]))
    assert np.allclose(d, [1.0, -1.0, np.sqrt(3.0)])
    lo, hi = b.bounds()
    assert np.allclose(lo, [-1.0, -2.0, -3.0])
    assert np.allclose(hi, [1.0, 2.0, 3.0])


def test_rotated_box_bounds_contain_surface():
    rng = np.random.default_rng(11)
    b = Box([0.1, -0.2, 0.3], [0.5, 0.3, 0.2], random_rotation(rng))
    lo, hi = b.bounds()
    corners_local = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
    ) * b.half
    corners = b.center + corners_local @ b.rotation.T
    assert np.all(corners >= lo - 1e-12)
    assert np.all(corners <= hi + 1e-12)


def test_random_rotation_is_orthonormal():
    rng = np.random.default_rng(3)
    for _ in range(5):
        r = random_rotation(rng)
        assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)


def test_union_sdf_is_pointwise_min():
    prims = [Sphere([0.0, 0.0, 0.0], 0.5), Sphere([1.0, 0.0, 0.0], 0.5)]
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.0, 0.0]])
    d = union_sdf(prims, pts)
    expected = np.minimum(prims[0].sdf(pts), prims[1].sdf(pts))
    assert np.array_equal(d, expected)
    with pytest.raises(ValueError):
        union_sdf([], pts)


@pytest.mark.parametrize(
    "prim",
    [
        Sphere([0.2, -0.1, 0.0], 0.3),
        Capsule([-0.3, 0.0, 0.1], [0.4, 0.2, -0.2], 0.15),
        Box([0.0, 0.1, -0.2], [0.3, 0.2, 0.25], random_rotation(np.random.default_rng(7))),
    ],
)
def test_sample_interior_is_strictly_inside(prim):
    rng = np.random.default_rng(123)
    pts = np.array([prim.sample_interior(rng) for _ in range(200)])
    assert np.all(prim.sdf(pts) < 0.0)


def test_generate_scene_deterministic():
    _, mesh_a = generate_scene(42)
    _, mesh_b = generate_scene(42)
    assert np.array_equal(mesh_a.vertices, mesh_b.vertices)
    assert np.array_equal(mesh_a.triangles, mesh_b.triangles)


def test_generate_scene_meshes_are_valid():
    for seed in range(4):
        spec, mesh = generate_scene(seed)
        assert 3 <= len(spec.primitives) <= 8
        assert mesh.is_closed_manifold()
        assert _component_count(mesh) == 1
        assert np.max(np.abs(mesh.vertices)) < 0.9


def test_scenes_differ_across_seeds():
    _, mesh_a = generate_scene(0)
    _, mesh_b = generate_scene(1)
    assert mesh_a.num_vertices != mesh_b.num_vertices or not np.array_equal(
        mesh_a.vertices, mesh_b.vertices
    )


def test_scene_field_range_and_boundary():
    spec, _ = generate_scene(0)
    field = scene_field(spec.primitives, 32)
    v = field.values
    assert v.min() >= 0.0 and v.max() <= 1.0
    assert v.max() > 0.5
    shell = np.concatenate(
        [v[0].ravel(), v[-1].ravel(), v[:, 0].ravel(), v[:, -1].ravel(),
         v[:, :, 0].ravel(), v[:, :, -1].ravel()]
    )
    assert np.all(shell == 0.0)


def test_discretize_rejects_disconnected_union():
    spec = SceneSpec(
        seed=0,
        primitives=[Sphere([-0.5, 0.0, 0.0], 0.2), Sphere([0.5, 0.0, 0.0], 0.2)],
    )
    with pytest.raises(SceneError, match="components"):
        _discretize(spec, 32)


def test_discretize_rejects_subgrid_speck():
    spec = SceneSpec(seed=0, primitives=[Sphere([0.0, 0.0, 0.0], 1e-3)])
    with pytest.raises(SceneError):
        _discretize(spec, 16)
