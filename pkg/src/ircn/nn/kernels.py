"""Array-level forward/backward kernels for the fixed layer vocabulary.

Every kernel is a pure function of ndarrays so the same code serves both the
recording (training) path and the fast inference path.  Convolutions use
im2col + one matmul; all backward passes are exact analytic gradients and are
verified against central finite differences in the test suite.

Array conventions: images are [C, H, W]; point batches are [N, D]; conv
weights are [C_out, C_in, k, k]; linear weights are [D_out, D_in].
"""

from __future__ import annotations

import numpy as np


def _pad2d(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    c, h, w = x.shape
    out = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=x.dtype)
    out[:, pad : pad + h, pad : pad + w] = x
    return out


def conv_out_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def im2col(x: np.ndarray, kernel: int, stride: int, pad: int) -> np.ndarray:
    """Unfold [C,H,W] into a [C*k*k, Ho*Wo] patch matrix."""
    c, h, w = x.shape
    ho = conv_out_size(h, kernel, stride, pad)
    wo = conv_out_size(w, kernel, stride, pad)
    xp = _pad2d(x, pad)
    s0, s1, s2 = xp.strides
    windows = np.lib.stride_tricks.as_strided(
        xp,
        shape=(c, kernel, kernel, ho, wo),
        strides=(s0, s1, s2, s1 * stride, s2 * stride),
    )
    return np.ascontiguousarray(windows).reshape(c * kernel * kernel, ho * wo)


def col2im(cols: np.ndarray, in_shape, kernel: int, stride: int, pad: int) -> np.ndarray:
    """Scatter-add a patch matrix back onto the [C,H,W] input grid."""
    c, h, w = in_shape
    ho = conv_out_size(h, kernel, stride, pad)
    wo = conv_out_size(w, kernel, stride, pad)
    dxp = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    windows = cols.reshape(c, kernel, kernel, ho, wo)
    for i in range(kernel):
        for j in range(kernel):
            dxp[:, i : i + ho * stride : stride, j : j + wo * stride : stride] += windows[:, i, j]
    if pad == 0:
        return dxp
    return dxp[:, pad : pad + h, pad : pad + w]


def conv2d_forward(x, weight, bias, stride: int, pad: int):
    """Returns (y, cols); cols is kept for the backward pass."""
    cout, cin, k, _ = weight.shape
    if x.shape[0] != cin:
        raise ValueError(f"conv2d: input has {x.shape[0]} channels, weight expects {cin}")
    ho = conv_out_size(x.shape[1], k, stride, pad)
    wo = conv_out_size(x.shape[2], k, stride, pad)
    if ho < 1 or wo < 1:
        raise ValueError(f"conv2d: spatial dims {x.shape[1:]} too small for kernel {k} stride {stride} pad {pad}")
    cols = im2col(x, k, stride, pad)
    y = weight.reshape(cout, -1) @ cols
    y += bias[:, None]
    return y.reshape(cout, ho, wo), cols


def conv2d_backward(dy, cols, weight, in_shape, stride: int, pad: int):
    cout, cin, k, _ = weight.shape
    dy2 = dy.reshape(cout, -1)
    db = dy2.sum(axis=1)
    dw = (dy2 @ cols.T).reshape(weight.shape)
    dcols = weight.reshape(cout, -1).T @ dy2
    dx = col2im(dcols, in_shape, k, stride, pad)
    return dx, dw, db


def linear_forward(x, weight, bias):
    if x.shape[-1] != weight.shape[1]:
        raise ValueError(f"linear: input width {x.shape[-1]} != weight width {weight.shape[1]}")
    return x @ weight.T + bias


def linear_backward(dy, x, weight):
    dx = dy @ weight
    dw = dy.T @ x
    db = dy.sum(axis=0)
    return dx, dw, db


def group_norm_forward(x, gamma, beta, groups: int, eps: float = 1e-5):
    """Normalize [C,H,W] per channel group; returns (y, cache)."""
    c, h, w = x.shape
    if c % groups != 0:
        raise ValueError(f"group_norm: {groups} groups do not divide {c} channels")
    xg = x.reshape(groups, -1)
    mean = xg.mean(axis=1, keepdims=True)
    var = xg.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mean) * inv_std).reshape(c, h, w)
    y = gamma[:, None, None] * xhat + beta[:, None, None]
    return y, (xhat, inv_std)


def group_norm_backward(dy, cache, gamma, groups: int):
    xhat, inv_std = cache
    c, h, w = xhat.shape
    dgamma = (dy * xhat).sum(axis=(1, 2))
    dbeta = dy.sum(axis=(1, 2))
    dxhat = (dy * gamma[:, None, None]).reshape(groups, -1)
    xhat_g = xhat.reshape(groups, -1)
    # standard normalization backward: remove the mean and the xhat-projection
    dx = inv_std * (
        dxhat
        - dxhat.mean(axis=1, keepdims=True)
        - xhat_g * (dxhat * xhat_g).mean(axis=1, keepdims=True)
    )
    return dx.reshape(c, h, w), dgamma, dbeta


def leaky_relu_forward(x, slope: float):
    return np.where(x >= 0, x, slope * x)


def leaky_relu_backward(dy, x, slope: float):
    return np.where(x >= 0, dy, slope * dy)


def sigmoid_forward(x):
    # split by sign for numerical stability
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(dy, y):
    return dy * y * (1.0 - y)


def avg_pool2_forward(x):
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"avg_pool2: spatial dims {h}x{w} must be even")
    return x.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))


def avg_pool2_backward(dy, in_shape):
    c, h, w = in_shape
    dx = np.repeat(np.repeat(dy, 2, axis=1), 2, axis=2)
    dx *= 0.25
    return dx


def upsample2_forward(x):
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def upsample2_backward(dy):
    c, h, w = dy.shape
    return dy.reshape(c, h // 2, 2, w // 2, 2).sum(axis=(2, 4))


def _bilinear_coords(coord, size: int):
    """Map [-1,1] plane coords to (lo index, hi index, frac), pixel-center aligned."""
    u = (coord + 1.0) * 0.5 * size - 0.5
    u = np.clip(u, 0.0, size - 1.0)
    lo = np.minimum(np.floor(u), size - 2).astype(np.int64) if size > 1 else np.zeros(len(u), dtype=np.int64)
    frac = u - lo
    return lo, lo + (1 if size > 1 else 0), frac


def bilinear_sample_forward(feat, xy):
    """Sample a [C,Hf,Wf] plane at [N,2] plane coords in [-1,1]^2.

    Coordinates outside the square clamp to the border.  xy[:,0] indexes the
    width axis, xy[:,1] the height axis; returns [N,C] plus a cache for the
    backward pass.
    """
    c, hf, wf = feat.shape
    i0, i1, fu = _bilinear_coords(xy[:, 0].astype(feat.dtype, copy=False), wf)
    j0, j1, fv = _bilinear_coords(xy[:, 1].astype(feat.dtype, copy=False), hf)
    f2 = feat.reshape(c, hf * wf)
    idx00 = j0 * wf + i0
    idx01 = j0 * wf + i1
    idx10 = j1 * wf + i0
    idx11 = j1 * wf + i1
    w00 = (1 - fv) * (1 - fu)
    w01 = (1 - fv) * fu
    w10 = fv * (1 - fu)
    w11 = fv * fu
    out = (
        f2[:, idx00] * w00
        + f2[:, idx01] * w01
        + f2[:, idx10] * w10
        + f2[:, idx11] * w11
    ).T
    cache = (idx00, idx01, idx10, idx11, w00, w01, w10, w11)
    return np.ascontiguousarray(out), cache


def bilinear_sample_backward(dy, feat_shape, cache, dtype):
    c, hf, wf = feat_shape
    idx00, idx01, idx10, idx11, w00, w01, w10, w11 = cache
    dfeat = np.zeros((c, hf * wf), dtype=dtype)
    rows = np.arange(c)[:, None]
    for idx, wgt in ((idx00, w00), (idx01, w01), (idx10, w10), (idx11, w11)):
        np.add.at(dfeat, (rows, idx[None, :]), (dy * wgt[:, None]).T)
    return dfeat.reshape(c, hf, wf)


BCE_CLAMP = 1e-7


def weighted_bce_forward(pred, labels, outside_ratio: float):
    """Class-reweighted binary cross entropy, negated and averaged over points.

    Inside points are weighted by the batch's outside fraction and outside
    points by its complement, so sparse occupancies do not drown the loss.
    Predictions at exactly 0 or 1 are clamped before the log.
    """
    p = np.clip(pred, BCE_CLAMP, 1.0 - BCE_CLAMP)
    lam = outside_ratio
    terms = lam * labels * np.log(p) + (1.0 - lam) * (1.0 - labels) * np.log(1.0 - p)
    return -terms.mean()


def weighted_bce_backward(pred, labels, outside_ratio: float):
    p = np.clip(pred, BCE_CLAMP, 1.0 - BCE_CLAMP)
    lam = outside_ratio
    grad = -(lam * labels / p - (1.0 - lam) * (1.0 - labels) / (1.0 - p)) / pred.shape[0]
    # clamped predictions sit on a plateau: no gradient flows
    grad[(pred < BCE_CLAMP) | (pred > 1.0 - BCE_CLAMP)] = 0.0
    return grad
