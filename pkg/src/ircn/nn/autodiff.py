"""Reverse-mode autodiff over a fixed op vocabulary.

A `Var` wraps one ndarray and remembers how it was produced; calling
`backward()` on a scalar loss walks the recorded graph once in reverse
topological order.  There is no broadcasting engine and no general tensor
algebra: the vocabulary below is exactly what the encoders, MLPs and losses
need, each op paired with its hand-written gradient from `kernels`.

Every op checks its output for non-finite values and raises `NumericsError`
naming the offending layer, so a diverging run fails loudly at the first bad
activation instead of three phases later.
"""

from __future__ import annotations

import numpy as np

from . import kernels as K


class NumericsError(RuntimeError):
    """Raised when an op produces NaN or Inf."""


class GraphError(RuntimeError):
    """Raised when backward is called without a usable recorded graph."""


def _guard(value: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(value)):
        raise NumericsError(f"non-finite values in output of '{name}'")


class Var:
    """One node of the autodiff graph: a value, its grad, and a backward rule."""

    __slots__ = ("value", "grad", "_parents", "_backward", "name")

    def __init__(self, value, name: str = ""):
        self.value = np.asarray(value)
        self.grad = None
        self._parents: tuple = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(grad, copy=True)
        else:
            self.grad += grad

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        if self.value.size != 1:
            raise GraphError(f"backward requires a scalar, got shape {self.value.shape}")
        if self._backward is None and not self._parents:
            raise GraphError("backward called on a leaf with no recorded graph")
        topo: list[Var] = []
        seen: set[int] = set()
        stack: list[tuple[Var, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward()

    def __repr__(self):
        tag = f" '{self.name}'" if self.name else ""
        return f"Var{tag}(shape={self.value.shape}, dtype={self.value.dtype})"


def _make(value, parents, backward, name):
    _guard(value, name)
    out = Var(value, name=name)
    out._parents = tuple(parents)
    out._backward = backward
    return out


def conv2d(x: Var, weight: Var, bias: Var, stride: int = 1, pad: int = 0, name: str = "conv2d") -> Var:
    y, cols = K.conv2d_forward(x.value, weight.value, bias.value, stride, pad)
    in_shape = x.value.shape

    def _bw():
        dx, dw, db = K.conv2d_backward(out.grad, cols, weight.value, in_shape, stride, pad)
        x.accumulate(dx)
        weight.accumulate(dw)
        bias.accumulate(db)

    out = _make(y, (x, weight, bias), _bw, name)
    return out


def linear(x: Var, weight: Var, bias: Var, name: str = "linear") -> Var:
    y = K.linear_forward(x.value, weight.value, bias.value)

    def _bw():
        dx, dw, db = K.linear_backward(out.grad, x.value, weight.value)
        x.accumulate(dx)
        weight.accumulate(dw)
        bias.accumulate(db)

    out = _make(y, (x, weight, bias), _bw, name)
    return out


def group_norm(x: Var, gamma: Var, beta: Var, groups: int, eps: float = 1e-5, name: str = "group_norm") -> Var:
    y, cache = K.group_norm_forward(x.value, gamma.value, beta.value, groups, eps)

    def _bw():
        dx, dgamma, dbeta = K.group_norm_backward(out.grad, cache, gamma.value, groups)
        x.accumulate(dx)
        gamma.accumulate(dgamma)
        beta.accumulate(dbeta)

    out = _make(y, (x, gamma, beta), _bw, name)
    return out


def relu(x: Var, name: str = "relu") -> Var:
    return leaky_relu(x, 0.0, name=name)


def leaky_relu(x: Var, slope: float = 0.01, name: str = "leaky_relu") -> Var:
    y = K.leaky_relu_forward(x.value, slope)

    def _bw():
        x.accumulate(K.leaky_relu_backward(out.grad, x.value, slope))

    out = _make(y, (x,), _bw, name)
    return out


def sigmoid(x: Var, name: str = "sigmoid") -> Var:
    y = K.sigmoid_forward(x.value)

    def _bw():
        x.accumulate(K.sigmoid_backward(out.grad, y))

    out = _make(y, (x,), _bw, name)
    return out


def avg_pool2(x: Var, name: str = "avg_pool2") -> Var:
    y = K.avg_pool2_forward(x.value)
    in_shape = x.value.shape

    def _bw():
        x.accumulate(K.avg_pool2_backward(out.grad, in_shape))

    out = _make(y, (x,), _bw, name)
    return out


def upsample2(x: Var, name: str = "upsample2") -> Var:
    y = K.upsample2_forward(x.value)

    def _bw():
        x.accumulate(K.upsample2_backward(out.grad))

    out = _make(y, (x,), _bw, name)
    return out


def concat(parts: list, axis: int, name: str = "concat") -> Var:
    values = [p.value for p in parts]
    y = np.concatenate(values, axis=axis)
    sizes = [v.shape[axis] for v in values]
    offsets = np.cumsum([0] + sizes)

    def _bw():
        for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * y.ndim
            sl[axis] = slice(lo, hi)
            part.accumulate(out.grad[tuple(sl)])

    out = _make(y, parts, _bw, name)
    return out


def add(a: Var, b: Var, name: str = "add") -> Var:
    if a.value.shape != b.value.shape:
        raise ValueError(f"add: shape mismatch {a.value.shape} vs {b.value.shape}")
    y = a.value + b.value

    def _bw():
        a.accumulate(out.grad)
        b.accumulate(out.grad)

    out = _make(y, (a, b), _bw, name)
    return out


def scale(x: Var, factor: float, name: str = "scale") -> Var:
    y = x.value * factor

    def _bw():
        x.accumulate(out.grad * factor)

    out = _make(y, (x,), _bw, name)
    return out


def bilinear_sample(feat: Var, xy: np.ndarray, name: str = "bilinear_sample") -> Var:
    """Sample a [C,H,W] feature plane at fixed [N,2] coords in [-1,1]^2 -> [N,C]."""
    y, cache = K.bilinear_sample_forward(feat.value, xy)
    feat_shape = feat.value.shape

    def _bw():
        feat.accumulate(K.bilinear_sample_backward(out.grad, feat_shape, cache, feat.value.dtype))

    out = _make(y, (feat,), _bw, name)
    return out


def weighted_bce(pred: Var, labels: np.ndarray, outside_ratio: float, name: str = "weighted_bce") -> Var:
    y = np.asarray(K.weighted_bce_forward(pred.value, labels, outside_ratio))

    def _bw():
        pred.accumulate(out.grad * K.weighted_bce_backward(pred.value, labels, outside_ratio))

    out = _make(y, (pred,), _bw, name)
    return out


def vsum(x: Var, name: str = "sum") -> Var:
    y = np.asarray(x.value.sum())

    def _bw():
        x.accumulate(np.full_like(x.value, float(out.grad)))

    out = _make(y, (x,), _bw, name)
    return out


def mean(x: Var, name: str = "mean") -> Var:
    y = np.asarray(x.value.mean())
    n = x.value.size

    def _bw():
        x.accumulate(np.full_like(x.value, float(out.grad) / n))

    out = _make(y, (x,), _bw, name)
    return out


def abs_mean_error(pred: Var, target: np.ndarray, name: str = "abs_mean_error") -> Var:
    """Mean absolute deviation from a fixed target (the normal-map L1 loss)."""
    diff = pred.value - target
    y = np.asarray(np.abs(diff).mean())
    n = pred.value.size

    def _bw():
        pred.accumulate(np.sign(diff) * (float(out.grad) / n))

    out = _make(y, (pred,), _bw, name)
    return out


def reshape(x: Var, shape, name: str = "reshape") -> Var:
    in_shape = x.value.shape

    def _bw():
        x.accumulate(out.grad.reshape(in_shape))

    out = _make(x.value.reshape(shape), (x,), _bw, name)
    return out


def masked_l1(pred: Var, target: np.ndarray, weight: np.ndarray, name: str = "masked_l1") -> Var:
    """Weighted mean absolute error: sum(|pred-target|*w) / sum(w).

    The weight broadcasts against pred, so a [1,H,W] mask reweights every
    channel of a [C,H,W] prediction.
    """
    w = np.broadcast_to(weight, pred.value.shape)
    denom = float(w.sum())
    if denom <= 0.0:
        raise ValueError("masked_l1: weights sum to zero")
    diff = pred.value - target
    y = np.asarray((np.abs(diff) * w).sum() / denom)

    def _bw():
        pred.accumulate(np.sign(diff) * w * (float(out.grad) / denom))

    out = _make(y, (pred,), _bw, name)
    return out


def fd_gradient(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of scalar f with respect to ndarray x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        hi = float(f(x))
        flat[i] = keep - eps
        lo = float(f(x))
        flat[i] = keep
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad


def max_rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst elementwise error, relative for large entries and absolute for small."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.abs(a) + np.abs(n), 1.0)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
