import numpy as np
import pytest

from ircn.geometry import TriangleGrid, icosphere
from ircn.nn import Var, fd_gradient, max_rel_err
from ircn.nn.autodiff import add as ad_add
from ircn.pifu import (
    CoarseModel,
    CropSpec,
    FineModel,
    NormalNet,
    QueryBatch,
    SamplerConfig,
    SamplingError,
    eval_coarse,
    eval_fine,
    index_bilinear,
    occupancy_loss,
    normal_loss,
    project,
    sample_training_points,
    sample_training_points_in_crop,
)
from ircn.pifu.models import FINE_RECEPTIVE_RADIUS
from ircn.synthdata import render_orthographic

RADIUS = 0.7


@pytest.fixture(scope="module")
def sphere_setup():
    mesh = icosphere(RADIUS, subdivisions=3)
    sample = render_orthographic(mesh, 128)
    return mesh, sample


@pytest.fixture(scope="module")
def models():
    coarse = CoarseModel(rng=np.random.default_rng(1))
    fine = FineModel(rng=np.random.default_rng(2))
    return coarse, fine


def make_batch(mesh, seed=3, n=256, resolution=128):
    cfg = SamplerConfig(n_points=n)
    return sample_training_points(mesh, cfg, "coarse", np.random.default_rng(seed),
                                  resolution=resolution)


# ---------------------------------------------------------------- projection

def test_project_hand_values():
    xy, z = project(np.array([[0.25, -0.5, 0.7], [0.0, 0.0, 0.0]]))
    assert np.array_equal(xy, [[0.25, -0.5], [0.0, 0.0]])
    assert np.array_equal(z, [0.7, 0.0])


def test_project_is_z_invariant():
    a = np.array([0.3, -0.2, 0.9])
    b = np.array([0.3, -0.2, -0.4])
    assert np.array_equal(project(a)[0], project(b)[0])


def test_query_batch_coordinate_link(sphere_setup):
    mesh, _ = sphere_setup
    batch = make_batch(mesh)
    assert np.array_equal(batch.x_hi, 2.0 * batch.x_lo)
    assert batch.lam == (1.0 - batch.labels).mean()
    with pytest.raises(ValueError):
        QueryBatch(batch.points, np.full(len(batch.points), 0.5), 0.5, 128)


# ------------------------------------------------------------ feature lookup

def test_index_bilinear_center_of_2x2():
    plane = np.arange(4.0).reshape(1, 2, 2)
    assert index_bilinear(plane, np.array([[0.0, 0.0]]))[0, 0] == 1.5


def test_index_bilinear_at_pixel_center():
    plane = np.arange(16.0).reshape(1, 4, 4)
    # pixel (row 2, col 1) center in normalized coords
    xy = np.array([[(1 + 0.5) / 4 * 2 - 1, (2 + 0.5) / 4 * 2 - 1]])
    assert index_bilinear(plane, xy)[0, 0] == 9.0


def test_index_bilinear_constant_plane_and_clamp():
    plane = np.full((2, 4, 4), 3.25)
    xy = np.array([[0.1, -0.7], [-5.0, 5.0], [1.0, 1.0]])
    out = index_bilinear(plane, xy)
    assert np.all(out == 3.25)


def test_coordinate_coherence_between_levels():
    # Planes whose feature value equals the world-x of each cell center must
    # report the same world coordinate through either level's lookup.
    lo = ((np.arange(16) + 0.5) / 16 * 2 - 1).reshape(1, 1, 16).repeat(16, axis=1)
    hi = ((np.arange(64) + 0.5) / 64 * 2 - 1).reshape(1, 1, 64).repeat(64, axis=1)
    xy = np.array([[0.31, -0.4], [-0.62, 0.05], [0.0, 0.73]])
    got_lo = index_bilinear(lo, xy)[:, 0]
    got_hi = index_bilinear(hi, xy)[:, 0]
    assert np.allclose(got_lo, xy[:, 0], atol=1e-12)
    assert np.allclose(got_hi, xy[:, 0], atol=1e-12)


# ------------------------------------------------------------------- models

def test_feature_plane_shapes(sphere_setup, models):
    _, sample = sphere_setup
    coarse, fine = models
    assert coarse.features(sample).shape == (32, 16, 16)
    assert fine.features(sample).shape == (8, 64, 64)


def test_ray_sharing_features_identical(sphere_setup, models):
    _, sample = sphere_setup
    coarse, _ = models
    plane = coarse.features(sample)
    xy = np.array([[0.2, -0.1], [0.2, -0.1]])
    feats = index_bilinear(plane, xy)
    assert np.array_equal(feats[0], feats[1])


def test_identical_points_identical_outputs(sphere_setup, models):
    mesh, sample = sphere_setup
    coarse, _ = models
    pts = np.array([[0.1, 0.2, 0.3], [0.1, 0.2, 0.3], [0.1, 0.2, -0.3]])
    batch = QueryBatch.from_points(pts, [1.0, 1.0, 0.0], 128)
    pred, omega = eval_coarse(coarse, sample, batch)
    assert pred[0] == pred[1]
    assert np.array_equal(omega[0], omega[1])
    assert omega.shape == (3, 32)


def test_zero_final_layer_gives_half(sphere_setup):
    mesh, sample = sphere_setup
    coarse = CoarseModel(rng=np.random.default_rng(5))
    fine = FineModel(rng=np.random.default_rng(6))
    for mlp in (coarse.mlp, fine.mlp):
        mlp.layers[-1].weight.value[:] = 0.0
        mlp.layers[-1].bias.value[:] = 0.0
    batch = make_batch(mesh)
    pred, omega = eval_coarse(coarse, sample, batch)
    assert np.all(pred == 0.5)
    assert np.all(eval_fine(fine, sample, batch, omega=omega) == 0.5)


def test_fine_crop_equivariance(sphere_setup, models):
    mesh, sample = sphere_setup
    coarse, fine = models
    batch = make_batch(mesh, seed=9, n=512)
    _, omega = eval_coarse(coarse, sample, batch)
    crop = CropSpec(32, 24, 64, 128)
    margin = 2 * FINE_RECEPTIVE_RADIUS + 2
    u = batch.x_hi
    inner = (
        (u[:, 0] > crop.x0 + margin)
        & (u[:, 0] < crop.x0 + crop.size - margin)
        & (u[:, 1] > crop.y0 + margin)
        & (u[:, 1] < crop.y0 + crop.size - margin)
    )
    assert inner.sum() > 20
    sub = QueryBatch.from_points(batch.points[inner], batch.labels[inner], 128)
    _, omega_sub = eval_coarse(coarse, sample, sub)
    f_full = eval_fine(fine, sample, sub, omega=omega_sub)
    f_crop = eval_fine(fine, sample, sub, omega=omega_sub, crop=crop)
    assert np.abs(f_full - f_crop).max() < 1e-5


def test_fine_never_sees_z_in_embedding_mode(sphere_setup, models):
    mesh, sample = sphere_setup
    coarse, fine = models
    pts = np.array([[0.1, 0.2, 0.3], [0.1, 0.2, -0.5]])
    batch = QueryBatch.from_points(pts, [1.0, 0.0], 128)
    # Same xy and identical omega rows: fine output cannot depend on z.
    omega = np.tile(np.linspace(0.0, 1.0, 32, dtype=np.float32), (2, 1))
    pred = eval_fine(fine, sample, batch, omega=omega)
    assert pred[0] == pred[1]


def test_absolute_depth_mode_uses_z(sphere_setup):
    mesh, sample = sphere_setup
    fine = FineModel(rng=np.random.default_rng(7), mode="absolute_depth")
    pts = np.array([[0.1, 0.2, 0.3], [0.1, 0.2, -0.5]])
    batch = QueryBatch.from_points(pts, [1.0, 0.0], 128)
    pred = eval_fine(fine, sample, batch)
    assert pred[0] != pred[1]
    with pytest.raises(ValueError):
        FineModel(mode="sideways")


def test_omega_width_mismatch_raises(sphere_setup, models):
    mesh, sample = sphere_setup
    _, fine = models
    pts = np.array([[0.0, 0.0, 0.0]])
    batch = QueryBatch.from_points(pts, [1.0], 128)
    with pytest.raises(ValueError):
        eval_fine(fine, sample, batch, omega=np.zeros((1, 16), dtype=np.float32))


def test_fine_output_tracks_coarse_parameters(sphere_setup):
    mesh, sample = sphere_setup
    coarse = CoarseModel(rng=np.random.default_rng(8))
    fine = FineModel(rng=np.random.default_rng(9))
    batch = make_batch(mesh, seed=11)
    _, omega_a = eval_coarse(coarse, sample, batch)
    f_a = eval_fine(fine, sample, batch, omega=omega_a)
    coarse.mlp.layers[0].weight.value[0, :] += 0.25
    _, omega_b = eval_coarse(coarse, sample, batch)
    f_b = eval_fine(fine, sample, batch, omega=omega_b)
    assert not np.array_equal(omega_a, omega_b)
    assert not np.array_equal(f_a, f_b)


# --------------------------------------------------------------------- loss

def test_occupancy_loss_hand_value():
    batch = QueryBatch.from_points(
        np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]]), [1.0, 0.0], 128
    )
    assert batch.lam == 0.5
    loss = occupancy_loss(np.array([0.5, 0.5]), batch)
    assert loss == pytest.approx(0.34657359, abs=1e-4)


def test_occupancy_loss_perfect_predictions():
    batch = QueryBatch.from_points(
        np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]]), [1.0, 0.0], 128
    )
    assert occupancy_loss(np.array([1.0, 0.0]), batch) <= 1e-6


def test_occupancy_loss_degenerate_batch_is_free():
    batch = QueryBatch.from_points(
        np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]]), [1.0, 1.0], 128
    )
    assert batch.lam == 0.0
    assert occupancy_loss(np.array([0.9, 0.2]), batch) == 0.0


def test_occupancy_loss_monotone_toward_label():
    batch = QueryBatch.from_points(
        np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]]), [1.0, 0.0], 128
    )
    worse = occupancy_loss(np.array([0.4, 0.4]), batch)
    better = occupancy_loss(np.array([0.6, 0.4]), batch)
    assert better < worse


def test_occupancy_loss_gradcheck():
    rng = np.random.default_rng(21)
    pred = rng.uniform(0.05, 0.95, size=16)
    labels = (rng.uniform(size=16) < 0.5).astype(np.float64)
    batch = QueryBatch.from_points(rng.uniform(-1, 1, size=(16, 3)), labels, 128)
    v = Var(pred, name="pred")
    loss = occupancy_loss(v, batch)
    loss.backward()
    numeric = fd_gradient(lambda p: occupancy_loss(p, batch), pred, eps=1e-6)
    assert max_rel_err(v.grad, numeric) < 1e-5


# ----------------------------------------------------- full-model gradcheck

def _tiny_sample(rng, res=8):
    class S:
        pass

    s = S()
    s.img_lo = rng.uniform(0.0, 1.0, size=(3, res, res))
    s.fnml_lo = rng.uniform(0.0, 1.0, size=(3, res, res))
    s.bnml_lo = rng.uniform(0.0, 1.0, size=(3, res, res))
    s.img_hi = rng.uniform(0.0, 1.0, size=(3, 2 * res, 2 * res))
    s.fnml_hi = rng.uniform(0.0, 1.0, size=(3, 2 * res, 2 * res))
    s.bnml_hi = rng.uniform(0.0, 1.0, size=(3, 2 * res, 2 * res))
    return s


def test_full_pipeline_gradcheck_float64():
    rng = np.random.default_rng(31)
    coarse = CoarseModel(rng=rng, dtype=np.float64)
    fine = FineModel(rng=rng, dtype=np.float64)
    sample = _tiny_sample(rng)
    pts = rng.uniform(-0.9, 0.9, size=(8, 3))
    labels = (rng.uniform(size=8) < 0.5).astype(np.float64)
    batch = QueryBatch.from_points(pts, labels, 16)

    def forward_loss():
        # Joint loss so every parameter, including the coarse head past the
        # omega tap, has a gradient path.
        pred, omega = eval_coarse(coarse, sample, batch, train=True)
        fpred = eval_fine(fine, sample, batch, omega=omega, train=True)
        return ad_add(occupancy_loss(pred, batch), occupancy_loss(fpred, batch))

    loss = forward_loss()
    loss.backward()
    params = {**coarse.named_parameters(), **fine.named_parameters()}
    picks = [
        "encoder.c1.weight", "encoder.g2.gamma", "mlp.layers.2.weight",
        "mlp.layers.4.bias",
    ]
    idx_rng = np.random.default_rng(7)
    for key in picks:
        for prefix, model in (("coarse", coarse), ("fine", fine)):
            name = key
            if name not in model.named_parameters():
                continue
            p = model.named_parameters()[name]
            flat = p.value.reshape(-1)
            grads = p.grad.reshape(-1)
            for k in idx_rng.choice(flat.size, size=min(3, flat.size), replace=False):
                keep = flat[k]
                h = 1e-4
                flat[k] = keep + h
                up = float(forward_loss().value)
                flat[k] = keep - h
                down = float(forward_loss().value)
                flat[k] = keep
                numeric = (up - down) / (2 * h)
                denom = max(abs(grads[k]) + abs(numeric), 1.0)
                assert abs(grads[k] - numeric) / denom < 1e-5, (prefix, name, k)


# ------------------------------------------------------------------ sampler

def test_sampler_composition_and_lambda(sphere_setup):
    mesh, _ = sphere_setup
    cfg = SamplerConfig(n_points=512)
    batch = sample_training_points(mesh, cfg, "coarse", np.random.default_rng(0))
    assert len(batch.points) == 512
    assert batch.lam == (1.0 - batch.labels).mean()
    assert 0.0 < batch.lam < 1.0


def test_sampler_importance_points_hug_surface(sphere_setup):
    mesh, _ = sphere_setup
    cfg = SamplerConfig(n_points=4096)
    n_imp, _ = cfg.split()
    for level in ("coarse", "fine"):
        batch = sample_training_points(mesh, cfg, level, np.random.default_rng(2))
        _, dist = TriangleGrid(mesh).query(batch.points[:n_imp])
        sigma = cfg.sigma(level)
        assert (dist <= 2.0 * sigma).mean() >= 0.90


def test_sampler_uniform_inside_fraction(sphere_setup):
    mesh, _ = sphere_setup
    cfg = SamplerConfig(n_points=65536)
    n_imp, n_uni = cfg.split()
    batch = sample_training_points(mesh, cfg, "coarse", np.random.default_rng(4))
    inside = batch.labels[n_imp:].mean()
    analytic = 4.0 / 3.0 * np.pi * RADIUS**3 / 8.0
    assert inside == pytest.approx(analytic, abs=0.02)


def test_sampler_sigma_zero_limit_balances_labels(sphere_setup):
    mesh, _ = sphere_setup
    cfg = SamplerConfig(n_points=8192, sigma_coarse=1e-9)
    n_imp, _ = cfg.split()
    batch = sample_training_points(mesh, cfg, "coarse", np.random.default_rng(6))
    inside = batch.labels[:n_imp].mean()
    assert inside == pytest.approx(0.5, abs=0.05)


def test_sampler_deterministic(sphere_setup):
    mesh, _ = sphere_setup
    cfg = SamplerConfig(n_points=256)
    a = sample_training_points(mesh, cfg, "fine", np.random.default_rng(8))
    b = sample_training_points(mesh, cfg, "fine", np.random.default_rng(8))
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.labels, b.labels)


def test_crop_sampler_respects_window(sphere_setup):
    mesh, _ = sphere_setup
    cfg = SamplerConfig(n_points=256)
    crop = CropSpec(32, 32, 64, 128)
    batch = sample_training_points_in_crop(mesh, cfg, crop, np.random.default_rng(10))
    assert np.all(crop.contains(batch.xy))
    assert 0.0 < batch.lam < 1.0


def test_crop_sampler_raises_when_window_misses(sphere_setup):
    mesh, _ = sphere_setup
    cfg = SamplerConfig(n_points=64)
    corner = CropSpec(0, 0, 8, 128)  # sphere never projects there
    with pytest.raises(SamplingError):
        sample_training_points_in_crop(mesh, cfg, corner, np.random.default_rng(12))


def test_crop_spec_validation():
    with pytest.raises(ValueError):
        CropSpec(1, 0, 64, 128)  # odd offset
    with pytest.raises(ValueError):
        CropSpec(0, 0, 63, 128)  # odd size
    with pytest.raises(ValueError):
        CropSpec(96, 0, 64, 128)  # runs past the image
    full = CropSpec.full(128)
    assert full.is_full
    xy = np.array([[0.3, -0.8]])
    assert np.allclose(full.to_local_norm(xy), xy)


# --------------------------------------------------------------- normal net

def test_normal_net_shape_and_zero_head(sphere_setup):
    _, sample = sphere_setup
    net = NormalNet(rng=np.random.default_rng(13))
    net.c5.weight.value[:] = 0.0
    net.c5.bias.value[:] = 0.0
    out = net(sample.img_hi)
    assert out.shape == (3, 128, 128)
    assert np.all(out == 0.5)
    loss = normal_loss(out, sample.bnml_hi.astype(out.dtype), sample.mask)
    expected = np.abs(sample.bnml_hi - 0.5)[:, sample.mask[0] > 0].mean()
    assert loss == pytest.approx(float(expected), rel=1e-6)
