"""Layer objects with named parameters and dual Var/ndarray dispatch.

Layers hold their parameters as `Var`s.  Called with a `Var` they record the
op on the autodiff graph; called with a plain ndarray they run the same
kernel without recording, which is the inference path used by grid
evaluation and frozen-stage forward passes.

Parameter names are path-like ("conv1.weight") and stable across runs, which
is what the checkpoint format and the optimizer state keys rely on.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from . import kernels as K
from .autodiff import Var


def init_uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    """Uniform(-b, b) with b = sqrt(1 / fan_in)."""
    bound = float(np.sqrt(1.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Module:
    """Base with recursive, insertion-ordered parameter discovery."""

    def named_parameters(self) -> dict[str, Var]:
        out: dict[str, Var] = {}
        for attr, val in vars(self).items():
            if isinstance(val, Var):
                out[attr] = val
            elif isinstance(val, Module):
                for key, p in val.named_parameters().items():
                    out[f"{attr}.{key}"] = p
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        for key, p in item.named_parameters().items():
                            out[f"{attr}.{i}.{key}"] = p
        return out

    def zero_grad(self) -> None:
        for p in self.named_parameters().values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: np.array(p.value, copy=True) for k, p in self.named_parameters().items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        missing = sorted(set(params) - set(state))
        extra = sorted(set(state) - set(params))
        if missing or extra:
            raise KeyError(f"state dict mismatch: missing={missing} unexpected={extra}")
        for key, p in params.items():
            arr = np.asarray(state[key])
            if arr.shape != p.value.shape:
                raise ValueError(f"shape mismatch for '{key}': {arr.shape} vs {p.value.shape}")
            p.value = arr.astype(p.value.dtype, copy=True)


class Conv2d(Module):
    def __init__(self, cin: int, cout: int, kernel: int, stride: int = 1, pad: int = 0,
                 rng: np.random.Generator | None = None, dtype=np.float64, name: str = "conv2d"):
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = cin * kernel * kernel
        self.weight = Var(init_uniform(rng, (cout, cin, kernel, kernel), fan_in, dtype), name=f"{name}.weight")
        self.bias = Var(init_uniform(rng, (cout,), fan_in, dtype), name=f"{name}.bias")
        self.stride = stride
        self.pad = pad
        self.name = name

    def __call__(self, x):
        if isinstance(x, Var):
            return ad.conv2d(x, self.weight, self.bias, self.stride, self.pad, name=self.name)
        y, _ = K.conv2d_forward(x, self.weight.value, self.bias.value, self.stride, self.pad)
        ad._guard(y, self.name)
        return y


class Linear(Module):
    def __init__(self, din: int, dout: int, rng: np.random.Generator | None = None,
                 dtype=np.float64, name: str = "linear"):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weight = Var(init_uniform(rng, (dout, din), din, dtype), name=f"{name}.weight")
        self.bias = Var(init_uniform(rng, (dout,), din, dtype), name=f"{name}.bias")
        self.name = name

    def __call__(self, x):
        if isinstance(x, Var):
            return ad.linear(x, self.weight, self.bias, name=self.name)
        y = K.linear_forward(x, self.weight.value, self.bias.value)
        ad._guard(y, self.name)
        return y


class GroupNorm(Module):
    def __init__(self, channels: int, groups: int = 4, eps: float = 1e-5,
                 dtype=np.float64, name: str = "group_norm"):
        if channels % groups != 0:
            raise ValueError(f"{name}: {groups} groups do not divide {channels} channels")
        self.gamma = Var(np.ones(channels, dtype=dtype), name=f"{name}.gamma")
        self.beta = Var(np.zeros(channels, dtype=dtype), name=f"{name}.beta")
        self.groups = groups
        self.eps = eps
        self.name = name

    def __call__(self, x):
        if isinstance(x, Var):
            return ad.group_norm(x, self.gamma, self.beta, self.groups, self.eps, name=self.name)
        y, _ = K.group_norm_forward(x, self.gamma.value, self.beta.value, self.groups, self.eps)
        ad._guard(y, self.name)
        return y


def leaky_relu(x, slope: float = 0.01, name: str = "leaky_relu"):
    if isinstance(x, Var):
        return ad.leaky_relu(x, slope, name=name)
    return K.leaky_relu_forward(x, slope)


def relu(x, name: str = "relu"):
    if isinstance(x, Var):
        return ad.relu(x, name=name)
    return K.leaky_relu_forward(x, 0.0)


def sigmoid(x, name: str = "sigmoid"):
    if isinstance(x, Var):
        return ad.sigmoid(x, name=name)
    return K.sigmoid_forward(x)


def avg_pool2(x, name: str = "avg_pool2"):
    if isinstance(x, Var):
        return ad.avg_pool2(x, name=name)
    return K.avg_pool2_forward(x)


def upsample2(x, name: str = "upsample2"):
    if isinstance(x, Var):
        return ad.upsample2(x, name=name)
    return K.upsample2_forward(x)


def concat(parts, axis: int, name: str = "concat"):
    if any(isinstance(p, Var) for p in parts):
        parts = [p if isinstance(p, Var) else Var(np.asarray(p)) for p in parts]
        return ad.concat(parts, axis, name=name)
    return np.concatenate(parts, axis=axis)


def bilinear_sample(feat, xy: np.ndarray, name: str = "bilinear_sample"):
    if isinstance(feat, Var):
        return ad.bilinear_sample(feat, xy, name=name)
    y, _ = K.bilinear_sample_forward(feat, xy)
    return y


def reshape(x, shape, name: str = "reshape"):
    if isinstance(x, Var):
        return ad.reshape(x, shape, name=name)
    return np.reshape(x, shape)


def masked_l1(pred, target: np.ndarray, weight: np.ndarray, name: str = "masked_l1"):
    if isinstance(pred, Var):
        return ad.masked_l1(pred, target, weight, name=name)
    w = np.broadcast_to(weight, pred.shape)
    denom = float(w.sum())
    if denom <= 0.0:
        raise ValueError("masked_l1: weights sum to zero")
    return float((np.abs(pred - target) * w).sum() / denom)
