"""Masked, positively-weighted binary cross entropy.

Targets may be soft (distillation probabilities) as well as hard 0/1
labels. The mean runs over unmasked entries only; an all-masked batch
is defined as zero loss with zero gradient.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-7


def masked_weighted_bce(pred, target, mask, pos_weight=1.0):
    """Mean over unmasked entries of -[w*t*log(p) + (1-t)*log(1-p)].

    ``pred`` holds probabilities (sigmoid upstream); they are clamped to
    [1e-7, 1 - 1e-7] before the logs.
    """
    if not (pred.shape == target.shape == mask.shape):
        raise ValueError("masked_weighted_bce shape mismatch")
    m = mask.astype(bool)
    count = int(m.sum())
    if count == 0:
        return 0.0
    p = np.clip(pred[m], _EPS, 1 - _EPS)
    t = target[m]
    terms = -(pos_weight * t * np.log(p) + (1 - t) * np.log1p(-p))
    return float(terms.sum(dtype=np.float64) / count)


def masked_weighted_bce_bwd(pred, target, mask, pos_weight=1.0):
    """Gradient of the loss w.r.t. ``pred``; zero on masked entries."""
    m = mask.astype(bool)
    count = int(m.sum())
    dp = np.zeros_like(pred)
    if count == 0:
        return dp
    p = np.clip(pred, _EPS, 1 - _EPS)
    inside = (pred > _EPS) & (pred < 1 - _EPS)
    g = (-(pos_weight * target / p) + (1 - target) / (1 - p)) / count
    dp[m & inside] = g[m & inside]
    return dp
