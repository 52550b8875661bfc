"""Central-finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from .params import ParamStore


def grad_check(loss_fn, store: ParamStore, eps=1e-3, names=None) -> float:
    """Compare analytic gradients against central differences.

    ``loss_fn(store)`` must return a scalar loss and leave the matching
    gradients in ``store.grads``. Returns the max relative error
    ``|a - n| / max(1e-6, |a| + |n|)`` over every element of every
    checked parameter.
    """
    store.zero_grads()
    loss_fn(store)
    analytic = {n: store.grads[n].copy() for n in store.names()}

    worst = 0.0
    for name in (names if names is not None else store.names()):
        p = store[name]
        flat = p.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            store.zero_grads()
            lp = float(loss_fn(store))
            flat[idx] = orig - eps
            store.zero_grads()
            lm = float(loss_fn(store))
            flat[idx] = orig
            numeric = (lp - lm) / (2 * eps)
            a = float(a_flat[idx])
            rel = abs(a - numeric) / max(1e-6, abs(a) + abs(numeric))
            worst = max(worst, rel)
    store.zero_grads()
    return worst
