"""RMSProp with a stepped learning-rate decay.

Update rule, applied in-place per parameter:

    v <- alpha * v + (1 - alpha) * g^2
    p <- p - lr * g / (sqrt(v) + eps)

The accumulator `v` is part of training state: it is keyed by parameter name
and serialized alongside the weights so a resumed run is bit-identical to an
uninterrupted one.
"""

from __future__ import annotations

import numpy as np


def lr_schedule(lr0: float, epoch: int, decay: float = 0.1, every: int = 10) -> float:
    """Learning rate for a 0-based epoch: lr0 * decay^(epoch // every)."""
    return lr0 * decay ** (epoch // every)


def rmsprop_step(param: np.ndarray, grad: np.ndarray, v: np.ndarray, lr: float,
                 alpha: float = 0.99, eps: float = 1e-8) -> None:
    """One in-place update of (param, v)."""
    v *= alpha
    v += (1.0 - alpha) * grad * grad
    param -= lr * grad / (np.sqrt(v) + eps)


class RMSProp:
    """Holds one accumulator per named parameter of a module."""

    def __init__(self, params: dict, lr0: float, alpha: float = 0.99, eps: float = 1e-8,
                 decay: float = 0.1, every: int = 10):
        self.params = params
        self.lr0 = lr0
        self.alpha = alpha
        self.eps = eps
        self.decay = decay
        self.every = every
        self.v = {name: np.zeros_like(p.value) for name, p in params.items()}

    def step(self, epoch: int) -> float:
        """Apply one update at the given epoch's learning rate; returns the lr used."""
        lr = lr_schedule(self.lr0, epoch, self.decay, self.every)
        for name, p in self.params.items():
            if p.grad is None:
                continue
            rmsprop_step(p.value, p.grad, self.v[name], lr, self.alpha, self.eps)
        return lr

    def state_dict(self) -> dict:
        return {name: np.array(v, copy=True) for name, v in self.v.items()}

    def load_state_dict(self, state: dict) -> None:
        missing = sorted(set(self.v) - set(state))
        extra = sorted(set(state) - set(self.v))
        if missing or extra:
            raise KeyError(f"optimizer state mismatch: missing={missing} unexpected={extra}")
        for name in self.v:
            arr = np.asarray(state[name])
            if arr.shape != self.v[name].shape:
                raise ValueError(f"optimizer state shape mismatch for '{name}'")
            self.v[name] = arr.astype(self.v[name].dtype, copy=True)
