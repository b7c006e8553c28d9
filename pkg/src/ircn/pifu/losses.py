"""Loss functions tied to the query-batch conventions."""

from __future__ import annotations

import numpy as np

from ..nn import Var
from ..nn import autodiff as ad
from ..nn import kernels as K
from ..nn import layers as L
from .camera import QueryBatch


def occupancy_loss(pred, batch: QueryBatch):
    """Class-balanced BCE: inside points weighted by the batch's outside
    fraction lam, outside points by 1-lam, negated and averaged.

    Predictions at exactly 0 or 1 clamp to [1e-7, 1-1e-7] before the log.
    Returns a Var when pred is a Var, a float otherwise.
    """
    if isinstance(pred, Var):
        labels = batch.labels.astype(pred.value.dtype)
        return ad.weighted_bce(pred, labels, batch.lam)
    return float(K.weighted_bce_forward(np.asarray(pred), batch.labels, batch.lam))


def normal_loss(pred, target: np.ndarray, mask: np.ndarray):
    """Mean absolute error between encoded normal maps over mask pixels."""
    if isinstance(pred, Var):
        target = target.astype(pred.value.dtype)
    return L.masked_l1(pred, target, mask)
