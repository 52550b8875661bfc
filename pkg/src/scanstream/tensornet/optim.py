"""Adam with bias correction, tracking moments per parameter name."""

from __future__ import annotations

import numpy as np

from .params import ParamStore


class AdamState:
    def __init__(self, store: ParamStore):
        self.m = {n: np.zeros_like(p) for n, p in store.items()}
        self.v = {n: np.zeros_like(p) for n, p in store.items()}
        self.t = 0


def adam_step(store: ParamStore, state: AdamState, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One update from the gradients currently held by ``store``."""
    state.t += 1
    bc1 = 1 - beta1 ** state.t
    bc2 = 1 - beta2 ** state.t
    for name, p in store.items():
        g = store.grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return store
