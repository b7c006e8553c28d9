"""Minimal neural-net kernel: ndarray ops, autodiff, layers, RMSProp, tensor I/O."""

from .autodiff import GraphError, NumericsError, Var, fd_gradient, max_rel_err
from .checkpoint import load_checkpoint, load_tensors, save_checkpoint, save_tensors
from .layers import Conv2d, GroupNorm, Linear, Module
from .optim import RMSProp, lr_schedule, rmsprop_step

__all__ = [
    "Var", "GraphError", "NumericsError", "fd_gradient", "max_rel_err",
    "Conv2d", "Linear", "GroupNorm", "Module",
    "RMSProp", "rmsprop_step", "lr_schedule",
    "save_tensors", "load_tensors", "save_checkpoint", "load_checkpoint",
]
