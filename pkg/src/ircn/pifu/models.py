"""Occupancy models: pixel-aligned feature lookup feeding small skip MLPs.

Both levels share one recipe: a conv encoder turns the rendered channels
into a feature plane, a query point projects onto that plane, the bilinear
feature sample plus a per-point depth cue feeds an MLP, and a sigmoid turns
the logit into occupancy.  The coarse level conditions on the raw depth z;
the fine level instead consumes the coarse MLP's intermediate activation,
so its only notion of depth is whatever the coarse network encoded there.
"""

from __future__ import annotations

import numpy as np

from ..nn import Conv2d, GroupNorm, Linear, Module, Var
from ..nn import layers as L

DEFAULT_DTYPE = np.float32
COARSE_FEATURE_CHANNELS = 32
FINE_FEATURE_CHANNELS = 8
D_OMEGA = 32
# First fine conv is stride 2, then two stride-1 3x3 convs:
# receptive field (5 - 1) * 2 + 3 = 11 input pixels, radius 5.
FINE_RECEPTIVE_RADIUS = 5

FINE_MODES = ("embedding", "absolute_depth")


def _maybe_var(arr: np.ndarray, train: bool, name: str):
    return Var(arr, name=name) if train else arr


def index_bilinear(feat, xy_norm: np.ndarray):
    """Bilinear lookup at normalized [-1,1]^2 coordinates, pixel-center
    aligned; coordinates outside the plane clamp to the border."""
    return L.bilinear_sample(feat, xy_norm)


class SkipMLP(Module):
    """MLP whose listed skip layers see [hidden (+) original input].

    widths[0] is the input dimension; affine layer i maps widths[i-1] ->
    widths[i] (1-indexed) with ReLU between layers.  omega_layer names the
    affine layer whose post-activation output is returned alongside the
    final logits.
    """

    def __init__(self, widths, skip_layers=(), omega_layer=None, rng=None,
                 dtype=DEFAULT_DTYPE, name: str = "mlp"):
        self.widths = tuple(widths)
        self.skip_layers = frozenset(skip_layers)
        self.omega_layer = omega_layer
        self.layers = []
        for i in range(1, len(self.widths)):
            din = self.widths[i - 1] + (self.widths[0] if i in self.skip_layers else 0)
            self.layers.append(
                Linear(din, self.widths[i], rng=rng, dtype=dtype, name=f"{name}.fc{i}")
            )

    def __call__(self, x):
        h = x
        omega = None
        last = len(self.layers)
        for i, layer in enumerate(self.layers, start=1):
            if i in self.skip_layers:
                h = L.concat([h, x], axis=1)
            h = layer(h)
            if i < last:
                h = L.relu(h)
            if i == self.omega_layer:
                omega = h
        return h, omega


class CoarseEncoder(Module):
    """64x64 channels -> [C,16,16] feature plane (stride 4), group-normed."""

    def __init__(self, in_channels: int, out_channels: int = COARSE_FEATURE_CHANNELS,
                 groups: int = 4, rng=None, dtype=DEFAULT_DTYPE, name: str = "enc_lo"):
        self.c1 = Conv2d(in_channels, 16, 3, stride=1, pad=1, rng=rng, dtype=dtype, name=f"{name}.c1")
        self.g1 = GroupNorm(16, groups, dtype=dtype, name=f"{name}.g1")
        self.c2 = Conv2d(16, 32, 3, stride=2, pad=1, rng=rng, dtype=dtype, name=f"{name}.c2")
        self.g2 = GroupNorm(32, groups, dtype=dtype, name=f"{name}.g2")
        self.c3 = Conv2d(32, 32, 3, stride=1, pad=1, rng=rng, dtype=dtype, name=f"{name}.c3")
        self.g3 = GroupNorm(32, groups, dtype=dtype, name=f"{name}.g3")
        self.c4 = Conv2d(32, 64, 3, stride=2, pad=1, rng=rng, dtype=dtype, name=f"{name}.c4")
        self.g4 = GroupNorm(64, groups, dtype=dtype, name=f"{name}.g4")
        self.c5 = Conv2d(64, out_channels, 3, stride=1, pad=1, rng=rng, dtype=dtype, name=f"{name}.c5")

    def __call__(self, x):
        h = L.leaky_relu(self.g1(self.c1(x)))
        h = L.leaky_relu(self.g2(self.c2(h)))
        h = L.leaky_relu(self.g3(self.c3(h)))
        h = L.leaky_relu(self.g4(self.c4(h)))
        return self.c5(h)


class FineEncoder(Module):
    """128x128 channels -> [C,64,64] feature plane (stride 2).

    No normalization layers on purpose: features must be exact translates
    under window shifts so sliding-window evaluation can stitch, and any
    cross-pixel statistic would couple a pixel to the whole window.
    """

    def __init__(self, in_channels: int, out_channels: int = FINE_FEATURE_CHANNELS,
                 rng=None, dtype=DEFAULT_DTYPE, name: str = "enc_hi"):
        self.c1 = Conv2d(in_channels, 16, 3, stride=2, pad=1, rng=rng, dtype=dtype, name=f"{name}.c1")
        self.c2 = Conv2d(16, 16, 3, stride=1, pad=1, rng=rng, dtype=dtype, name=f"{name}.c2")
        self.c3 = Conv2d(16, out_channels, 3, stride=1, pad=1, rng=rng, dtype=dtype, name=f"{name}.c3")

    def __call__(self, x):
        h = L.leaky_relu(self.c1(x))
        h = L.leaky_relu(self.c2(h))
        return self.c3(h)


def _stack_channels(img, fnml, bnml, use_normals: bool, dtype) -> np.ndarray:
    if use_normals:
        return np.concatenate([img, fnml, bnml], axis=0).astype(dtype)
    return np.asarray(img, dtype=dtype)


class CoarseModel(Module):
    """Whole-image occupancy: f = g(plane[x], z), plus the embedding tap."""

    def __init__(self, rng=None, use_normals: bool = True, groups: int = 4,
                 dtype=DEFAULT_DTYPE):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.use_normals = use_normals
        self.dtype = dtype
        in_channels = 9 if use_normals else 3
        self.encoder = CoarseEncoder(in_channels, COARSE_FEATURE_CHANNELS, groups,
                                     rng=rng, dtype=dtype)
        self.mlp = SkipMLP(
            (COARSE_FEATURE_CHANNELS + 1, 128, 64, 32, 16, 1),
            skip_layers=(3, 4, 5),
            omega_layer=3,
            rng=rng,
            dtype=dtype,
            name="mlp_lo",
        )

    @property
    def d_omega(self) -> int:
        return self.mlp.widths[3]

    def features(self, sample, train: bool = False):
        x = _stack_channels(sample.img_lo, sample.fnml_lo, sample.bnml_lo,
                            self.use_normals, self.dtype)
        return self.encoder(_maybe_var(x, train, "coarse_input"))

    def query(self, plane, xy_norm: np.ndarray, z: np.ndarray, train: bool = False):
        feat = index_bilinear(plane, xy_norm)
        zcol = _maybe_var(np.asarray(z, dtype=self.dtype).reshape(-1, 1), train, "z")
        logits, omega = self.mlp(L.concat([feat, zcol], axis=1))
        pred = L.reshape(L.sigmoid(logits), (-1,))
        return pred, omega


class FineModel(Module):
    """Windowed occupancy: f = g(plane[x], omega) with no direct z input.

    mode "embedding" conditions on the coarse tap; mode "absolute_depth" is
    the ablation that feeds raw z instead.
    """

    def __init__(self, rng=None, mode: str = "embedding", d_omega: int = D_OMEGA,
                 use_normals: bool = True, dtype=DEFAULT_DTYPE):
        if mode not in FINE_MODES:
            raise ValueError(f"unknown fine mode {mode!r}, expected one of {FINE_MODES}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.mode = mode
        self.d_omega = d_omega
        self.use_normals = use_normals
        self.dtype = dtype
        in_channels = 9 if use_normals else 3
        self.encoder = FineEncoder(in_channels, FINE_FEATURE_CHANNELS, rng=rng, dtype=dtype)
        cond = d_omega if mode == "embedding" else 1
        self.mlp = SkipMLP(
            (FINE_FEATURE_CHANNELS + cond, 128, 64, 32, 1),
            skip_layers=(2, 3),
            omega_layer=None,
            rng=rng,
            dtype=dtype,
            name="mlp_hi",
        )

    def features(self, sample, crop=None, train: bool = False):
        x = _stack_channels(sample.img_hi, sample.fnml_hi, sample.bnml_hi,
                            self.use_normals, self.dtype)
        if crop is not None and not crop.is_full:
            x = crop.channels(x)
        return self.encoder(_maybe_var(x, train, "fine_input"))

    def query(self, plane, xy_local_norm: np.ndarray, omega=None, z=None,
              train: bool = False):
        feat = index_bilinear(plane, xy_local_norm)
        if self.mode == "embedding":
            if omega is None:
                raise ValueError("embedding mode needs the coarse omega")
            cond = omega
        else:
            if z is None:
                raise ValueError("absolute_depth mode needs z")
            cond = _maybe_var(np.asarray(z, dtype=self.dtype).reshape(-1, 1), train, "z")
        logits, _ = self.mlp(L.concat([feat, cond], axis=1))
        return L.reshape(L.sigmoid(logits), (-1,))


class NormalNet(Module):
    """Conv encoder-decoder: pseudo-RGB -> encoded back-normal map."""

    def __init__(self, rng=None, dtype=DEFAULT_DTYPE):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dtype = dtype
        self.c1 = Conv2d(3, 16, 3, stride=2, pad=1, rng=rng, dtype=dtype, name="nrm.c1")
        self.c2 = Conv2d(16, 32, 3, stride=2, pad=1, rng=rng, dtype=dtype, name="nrm.c2")
        self.c3 = Conv2d(32, 32, 3, stride=1, pad=1, rng=rng, dtype=dtype, name="nrm.c3")
        self.c4 = Conv2d(32, 16, 3, stride=1, pad=1, rng=rng, dtype=dtype, name="nrm.c4")
        self.c5 = Conv2d(16, 3, 3, stride=1, pad=1, rng=rng, dtype=dtype, name="nrm.c5")

    def __call__(self, img, train: bool = False):
        x = _maybe_var(np.asarray(img, dtype=self.dtype), train, "nrm_input")
        h = L.leaky_relu(self.c1(x))
        h = L.leaky_relu(self.c2(h))
        h = L.leaky_relu(self.c3(h))
        h = L.upsample2(h)
        h = L.leaky_relu(self.c4(h))
        h = L.upsample2(h)
        return L.sigmoid(self.c5(h))


def eval_coarse(model: CoarseModel, sample, batch, train: bool = False):
    """f_lo and the embedding for every batch point, one encoder pass."""
    plane = model.features(sample, train=train)
    return model.query(plane, batch.xy, batch.z, train=train)


def eval_fine(model: FineModel, sample, batch, omega=None, crop=None,
              train: bool = False):
    """f_hi for every batch point; crop restricts the encoder window."""
    plane = model.features(sample, crop=crop, train=train)
    xy = batch.xy if crop is None or crop.is_full else crop.to_local_norm(batch.xy)
    return model.query(plane, xy, omega=omega, z=batch.z, train=train)
