"""Stacked LSTM with streaming single-step and windowed BPTT paths.

Gate layout in the fused weight matrices is (i, f, g, o) along the last
axis. Parameters per layer: ``w_ih`` (input_dim, 4H), ``w_hh`` (H, 4H)
and ``b`` (4H,). The streaming step and the windowed sequence pass run
the same arithmetic, so carried-state inference matches whole-window
evaluation to float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import sigmoid


@dataclass(frozen=True)
class LstmSpec:
    input_dim: int
    hidden: int = 64
    layers: int = 2

    def param_names(self, prefix: str) -> list[str]:
        names = []
        for l in range(self.layers):
            names += [f"{prefix}.{l}.w_ih", f"{prefix}.{l}.w_hh", f"{prefix}.{l}.b"]
        return names


def lstm_init_state(spec: LstmSpec, batch: int, dtype=np.float32):
    """Zeroed (h, c) pairs, one per layer."""
    return [
        (np.zeros((batch, spec.hidden), dtype), np.zeros((batch, spec.hidden), dtype))
        for _ in range(spec.layers)
    ]


def _cell(x, h, c, w_ih, w_hh, b):
    hid = h.shape[1]
    z = x @ w_ih + h @ w_hh + b
    i = sigmoid(z[:, :hid])
    f = sigmoid(z[:, hid:2 * hid])
    g = np.tanh(z[:, 2 * hid:3 * hid])
    o = sigmoid(z[:, 3 * hid:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (x, h, c, i, f, g, o, tc)


def lstm_step(x, state, params, spec: LstmSpec, prefix: str):
    """One time step through all layers; returns (top hidden, new state)."""
    if x.shape[1] != spec.input_dim:
        raise ValueError(f"lstm input dim {x.shape[1]}, expected {spec.input_dim}")
    new_state = []
    inp = x
    for l, (h, c) in enumerate(state):
        if h.shape != (x.shape[0], spec.hidden):
            raise ValueError(f"lstm state shape {h.shape} does not match batch/hidden")
        h_new, c_new, _ = _cell(inp, h, c,
                                params[f"{prefix}.{l}.w_ih"],
                                params[f"{prefix}.{l}.w_hh"],
                                params[f"{prefix}.{l}.b"])
        new_state.append((h_new, c_new))
        inp = h_new
    return inp, new_state


def lstm_forward_seq(xs, params, spec: LstmSpec, prefix: str):
    """Run a (T, B, D) sequence from zero state; returns (hs, caches).

    ``hs`` is (T, B, H) from the top layer; ``caches`` feeds
    :func:`lstm_backward_seq`.
    """
    t_len, batch, _ = xs.shape
    state = lstm_init_state(spec, batch, xs.dtype)
    caches = [[None] * t_len for _ in range(spec.layers)]
    hs = np.empty((t_len, batch, spec.hidden), dtype=xs.dtype)
    for t in range(t_len):
        inp = xs[t]
        for l in range(spec.layers):
            h, c = state[l]
            h_new, c_new, cache = _cell(inp, h, c,
                                        params[f"{prefix}.{l}.w_ih"],
                                        params[f"{prefix}.{l}.w_hh"],
                                        params[f"{prefix}.{l}.b"])
            caches[l][t] = cache
            state[l] = (h_new, c_new)
            inp = h_new
        hs[t] = inp
    return hs, caches


def lstm_backward_seq(dhs, caches, params, spec: LstmSpec, prefix: str, grads):
    """BPTT over a window. ``dhs`` is (T, B, H) loss gradient on the top
    hidden outputs; parameter gradients accumulate into ``grads``."""
    t_len, batch, hid = dhs.shape
    dxs = None
    d_upper = dhs
    for l in reversed(range(spec.layers)):
        w_ih = params[f"{prefix}.{l}.w_ih"]
        w_hh = params[f"{prefix}.{l}.w_hh"]
        dw_ih = np.zeros_like(w_ih)
        dw_hh = np.zeros_like(w_hh)
        db = np.zeros_like(params[f"{prefix}.{l}.b"])
        dxs = np.empty((t_len, batch, w_ih.shape[0]), dtype=dhs.dtype)
        dh_next = np.zeros((batch, hid), dtype=dhs.dtype)
        dc_next = np.zeros((batch, hid), dtype=dhs.dtype)
        for t in reversed(range(t_len)):
            x, h_prev, c_prev, i, f, g, o, tc = caches[l][t]
            dh = d_upper[t] + dh_next
            do = dh * tc
            dc = dh * o * (1 - tc * tc) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dz = np.concatenate(
                [di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o)],
                axis=1)
            dw_ih += x.T @ dz
            dw_hh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dh_next = dz @ w_hh.T
            dxs[t] = dz @ w_ih.T
        grads[f"{prefix}.{l}.w_ih"] += dw_ih
        grads[f"{prefix}.{l}.w_hh"] += dw_hh
        grads[f"{prefix}.{l}.b"] += db
        d_upper = dxs
    return dxs
