import numpy as np
import pytest

from ircn.geometry import TriangleMesh, icosphere
from ircn.synthdata import (
    downsample2,
    generate_scene,
    pixel_centers,
    render_orthographic,
)

RADIUS = 0.7
H = 128


@pytest.fixture(scope="module")
def sphere_render():
    return render_orthographic(icosphere(RADIUS, subdivisions=4), H)


def test_downsample2_hand_value():
    x = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32).reshape(1, 2, 2)
    out = downsample2(x)
    assert out.shape == (1, 1, 1)
    assert out[0, 0, 0] == np.float32(2.5)
    with pytest.raises(ValueError):
        downsample2(np.zeros((1, 3, 4), dtype=np.float32))


def test_pixel_centers_span_unit_box():
    c = pixel_centers(4)
    assert np.allclose(c, [-0.75, -0.25, 0.25, 0.75])


def test_sphere_pole_encodings(sphere_render):
    # Front pole faces +z, back pole -z; encoded as (n+1)/2.
    front = sphere_render.fnml_hi[:, H // 2, H // 2]
    back = sphere_render.bnml_hi[:, H // 2, H // 2]
    assert np.allclose(front, [0.5, 0.5, 1.0], atol=0.01)
    assert np.allclose(back, [0.5, 0.5, 0.0], atol=0.01)


def test_mask_fraction_matches_projected_area(sphere_render):
    frac = float(sphere_render.mask.sum()) / H**2
    analytic = np.pi * RADIUS**2 / 4.0
    assert abs(frac / analytic - 1.0) < 0.02


def test_mask_matches_analytic_disc(sphere_render):
    px = pixel_centers(H)[None, :]
    py = pixel_centers(H)[:, None]
    rho = np.hypot(px, py)
    away_from_rim = np.abs(rho - RADIUS) > 2.0 * np.sqrt(2.0) / H
    expected = rho <= RADIUS
    got = sphere_render.mask[0] > 0.5
    assert np.array_equal(got[away_from_rim], expected[away_from_rim])


def test_background_is_exact_half_gray(sphere_render):
    outside = sphere_render.mask[0] == 0.0
    for channel in (sphere_render.img_hi, sphere_render.fnml_hi, sphere_render.bnml_hi):
        assert np.all(channel[:, outside] == np.float32(0.5))


def test_low_res_is_exact_box_mean(sphere_render):
    pairs = [
        (sphere_render.img_hi, sphere_render.img_lo),
        (sphere_render.fnml_hi, sphere_render.fnml_lo),
        (sphere_render.bnml_hi, sphere_render.bnml_lo),
        (sphere_render.mask, sphere_render.mask_lo),
    ]
    for hi, lo in pairs:
        blocks = (
            hi[:, 0::2, 0::2].astype(np.float64)
            + hi[:, 0::2, 1::2]
            + hi[:, 1::2, 0::2]
            + hi[:, 1::2, 1::2]
        ) / 4.0
        assert np.array_equal(lo, blocks.astype(np.float32))
        assert lo.shape[-1] == hi.shape[-1] // 2


def test_back_normals_face_away_from_camera(sphere_render):
    m = sphere_render.mask[0] > 0.5
    interior = m.copy()
    interior[1:] &= m[:-1]
    interior[:-1] &= m[1:]
    interior[:, 1:] &= m[:, :-1]
    interior[:, :-1] &= m[:, 1:]
    nz = 2.0 * sphere_render.bnml_hi[2][interior] - 1.0
    assert interior.sum() > 1000
    assert np.all(nz < 0.0)


def test_hit_normals_are_unit(sphere_render):
    m = sphere_render.mask[0] > 0.5
    for enc in (sphere_render.fnml_hi, sphere_render.bnml_hi):
        n = 2.0 * enc[:, m].astype(np.float64) - 1.0
        assert np.allclose(np.linalg.norm(n, axis=0), 1.0, atol=1e-3)


def test_image_range_and_channels(sphere_render):
    assert sphere_render.img_hi.shape == (3, H, H)
    assert sphere_render.img_hi.dtype == np.float32
    assert sphere_render.img_hi.min() >= 0.0
    assert sphere_render.img_hi.max() <= 1.0
    m = sphere_render.mask[0] > 0.5
    rgb = sphere_render.img_hi[:, m]
    # Lit sphere must not be flat: shading varies across the disc.
    assert rgb.std() > 0.05


def test_render_deterministic():
    mesh = icosphere(0.4, subdivisions=2)
    a = render_orthographic(mesh, 64)
    b = render_orthographic(mesh, 64)
    for key in ("img_hi", "img_lo", "fnml_hi", "bnml_hi", "mask"):
        assert np.array_equal(getattr(a, key), getattr(b, key))


def test_render_scene_mesh_smoke():
    _, mesh = generate_scene(2)
    r = render_orthographic(mesh, 64)
    assert r.mask.sum() > 0
    assert np.all(np.isfinite(r.fnml_hi))
    assert r.img_lo.shape == (3, 32, 32)


def test_render_empty_mesh_is_background():
    empty = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    r = render_orthographic(empty, 32)
    assert r.mask.sum() == 0.0
    assert np.all(r.img_hi == np.float32(0.5))
    assert np.all(r.fnml_hi == np.float32(0.5))


def test_render_rejects_odd_resolution():
    with pytest.raises(ValueError):
        render_orthographic(icosphere(0.4, 1), 65)
