"""Gradient-check cases: one loss-with-backward closure per kernel.

Each case builds a ParamStore (inputs are stored as parameters too, so
finite differences also verify input gradients) and a loss function
that runs forward + backward, accumulating into ``store.grads``.
Activation inputs are nudged away from relu6 kinks and max-pool ties so
float32 central differences stay well conditioned.
"""

import numpy as np

from scanstream import tensornet as tn


def _away_from_kinks(x, kinks=(0.0, 6.0), margin=0.05):
    for k in kinks:
        near = np.abs(x - k) < margin
        x = np.where(near, k + margin * np.sign(x - k + 1e-12) * 2, x)
    return x


def _proj(shape, g, dtype):
    return (g.random(shape) * 1.2 + 0.2).astype(dtype)




def _data(g, shape, dtype):
    # signed data for f64; positive for f32 so no true gradient is
    # cancellation-tiny relative to float32 probe noise
    if dtype == np.float64:
        return (g.random(shape) - 0.5).astype(dtype)
    return (g.random(shape) * 0.9 + 0.1).astype(dtype)

def _dot(p, y):
    # reduce in float64 so the scalar loss does not quantize away the
    # +-eps probe; the op output y keeps the dtype under test
    return float(np.dot(p.reshape(-1).astype(np.float64), y.reshape(-1).astype(np.float64)))


def case_conv2d(g, dtype, stride=1, same=True):
    store = tn.ParamStore()
    x = store.add("x", _data(g, (2, 5, 5, 3), dtype))
    w = store.add("w", _data(g, (3, 3, 3, 4), dtype))
    p = _proj(tn.conv2d(x, w, stride, same).shape, g, dtype)

    def loss(s):
        y = tn.conv2d(s["x"], s["w"], stride, same)
        dx, dw = tn.conv2d_bwd(p, s["x"], s["w"], stride, same)
        s.grads["x"] += dx
        s.grads["w"] += dw
        return _dot(p, y)

    return store, loss


def case_depthwise(g, dtype, stride=1):
    store = tn.ParamStore()
    x = store.add("x", _data(g, (2, 6, 6, 3), dtype))
    w = store.add("w", _data(g, (3, 3, 3), dtype))
    p = _proj(tn.depthwise_conv2d(x, w, stride).shape, g, dtype)

    def loss(s):
        y = tn.depthwise_conv2d(s["x"], s["w"], stride)
        dx, dw = tn.depthwise_conv2d_bwd(p, s["x"], s["w"], stride)
        s.grads["x"] += dx
        s.grads["w"] += dw
        return _dot(p, y)

    return store, loss


def case_pointwise(g, dtype):
    store = tn.ParamStore()
    store.add("x", _data(g, (2, 4, 4, 3), dtype))
    store.add("w", _data(g, (3, 5), dtype))
    p = _proj((2, 4, 4, 5), g, dtype)

    def loss(s):
        y = tn.pointwise_conv(s["x"], s["w"])
        dx, dw = tn.pointwise_conv_bwd(p, s["x"], s["w"])
        s.grads["x"] += dx
        s.grads["w"] += dw
        return _dot(p, y)

    return store, loss


def case_relu6(g, dtype):
    store = tn.ParamStore()
    x0 = _away_from_kinks((g.random((3, 4, 4, 2)) * 10 - 2).astype(dtype))
    store.add("x", x0.astype(dtype))
    p = _proj(x0.shape, g, dtype)

    def loss(s):
        y = tn.relu6(s["x"])
        s.grads["x"] += tn.relu6_bwd(p, s["x"])
        return _dot(p, y)

    return store, loss


def case_channel_affine(g, dtype):
    store = tn.ParamStore()
    store.add("x", _data(g, (2, 3, 3, 4), dtype))
    store.add("scale", (g.random(4) + 0.5).astype(dtype))
    store.add("bias", _data(g, 4, dtype))
    p = _proj((2, 3, 3, 4), g, dtype)

    def loss(s):
        y = tn.channel_affine(s["x"], s["scale"], s["bias"])
        dx, dsc, db = tn.channel_affine_bwd(p, s["x"], s["scale"])
        s.grads["x"] += dx
        s.grads["scale"] += dsc
        s.grads["bias"] += db
        return _dot(p, y)

    return store, loss


def case_affine_relu6(g, dtype):
    store = tn.ParamStore()
    x0 = _away_from_kinks((g.random((2, 4, 4, 3)) * 8 - 1).astype(dtype))
    store.add("x", x0.astype(dtype))
    store.add("scale", np.ones(3, dtype))  # unit scale keeps pre-activations off the kinks
    store.add("bias", np.zeros(3, dtype))
    p = _proj((2, 4, 4, 3), g, dtype)

    def loss(s):
        y = tn.affine_relu6(s["x"], s["scale"], s["bias"])
        dx, dsc, db = tn.affine_relu6_bwd(p, s["x"], s["scale"], s["bias"])
        s.grads["x"] += dx
        s.grads["scale"] += dsc
        s.grads["bias"] += db
        return _dot(p, y)

    return store, loss


def case_global_max_pool(g, dtype):
    store = tn.ParamStore()
    # well separated values so the argmax never moves under the probe
    x0 = g.permutation(np.arange(2 * 4 * 4 * 3, dtype=np.float64)).reshape(2, 4, 4, 3) * 0.1
    store.add("x", x0.astype(dtype))
    p = _proj((2, 3), g, dtype)

    def loss(s):
        y = tn.global_max_pool(s["x"])
        s.grads["x"] += tn.global_max_pool_bwd(p, s["x"])
        return _dot(p, y)

    return store, loss


def case_global_avg_pool(g, dtype):
    store = tn.ParamStore()
    store.add("x", _data(g, (2, 4, 4, 3), dtype))
    p = _proj((2, 3), g, dtype)

    def loss(s):
        y = tn.global_avg_pool(s["x"])
        s.grads["x"] += tn.global_avg_pool_bwd(p, s["x"].shape)
        return _dot(p, y)

    return store, loss


def case_linear(g, dtype):
    store = tn.ParamStore()
    store.add("x", _data(g, (5, 4), dtype))
    store.add("w", _data(g, (4, 3), dtype))
    store.add("b", _data(g, 3, dtype))
    p = _proj((5, 3), g, dtype)

    def loss(s):
        y = tn.linear(s["x"], s["w"], s["b"])
        dx, dw, db = tn.linear_bwd(p, s["x"], s["w"])
        s.grads["x"] += dx
        s.grads["w"] += dw
        s.grads["b"] += db
        return _dot(p, y)

    return store, loss


def case_sigmoid(g, dtype):
    store = tn.ParamStore()
    store.add("x", (g.random((4, 6)) * 6 - 3).astype(dtype))
    p = _proj((4, 6), g, dtype)

    def loss(s):
        y = tn.sigmoid(s["x"])
        s.grads["x"] += tn.sigmoid_bwd(p, y)
        return _dot(p, y)

    return store, loss


def case_masked_bce(g, dtype):
    store = tn.ParamStore()
    # keep pred away from the clamp edges: BCE curvature ~ 1/p^3 would
    # dominate the eps^2 truncation term of central differences
    store.add("pred", (g.random((3, 7)) * 0.5 + 0.25).astype(dtype))
    if dtype == np.float64:
        target = g.random((3, 7)).astype(dtype)  # soft distillation-style targets
    else:
        # binary targets keep every unmasked gradient bounded away from the
        # soft-target cancellation point -w*t/p + (1-t)/(1-p) == 0
        target = (g.random((3, 7)) > 0.5).astype(dtype)
    mask = (g.random((3, 7)) > 0.3).astype(dtype)
    pw = 3.0

    def loss(s):
        val = tn.masked_weighted_bce(s["pred"], target, mask, pw)
        s.grads["pred"] += tn.masked_weighted_bce_bwd(s["pred"], target, mask, pw)
        return float(val)

    return store, loss


def case_lstm(g, dtype):
    spec = tn.LstmSpec(input_dim=3, hidden=4, layers=2)
    store = tn.ParamStore()
    for l in range(spec.layers):
        in_dim = spec.input_dim if l == 0 else spec.hidden
        store.add(f"lstm.{l}.w_ih", (g.random((in_dim, 4 * spec.hidden)) - 0.5).astype(dtype))
        store.add(f"lstm.{l}.w_hh", (g.random((spec.hidden, 4 * spec.hidden)) - 0.5).astype(dtype))
        store.add(f"lstm.{l}.b", (g.random(4 * spec.hidden) - 0.5).astype(dtype))
    store.add("x", (g.random((4, 2, 3)) - 0.5).astype(dtype))
    p = _proj((4, 2, spec.hidden), g, dtype)

    def loss(s):
        hs, caches = tn.lstm_forward_seq(s["x"], s, spec, "lstm")
        dxs = tn.lstm_backward_seq(p, caches, s, spec, "lstm", s.grads)
        s.grads["x"] += dxs
        return _dot(p, hs)

    return store, loss


ALL_CASES = {
    "conv2d_s1_same": lambda g, d: case_conv2d(g, d, 1, True),
    "conv2d_s2_same": lambda g, d: case_conv2d(g, d, 2, True),
    "conv2d_s1_valid": lambda g, d: case_conv2d(g, d, 1, False),
    "depthwise_s1": lambda g, d: case_depthwise(g, d, 1),
    "depthwise_s2": lambda g, d: case_depthwise(g, d, 2),
    "pointwise": case_pointwise,
    "relu6": case_relu6,
    "channel_affine": case_channel_affine,
    "affine_relu6": case_affine_relu6,
    "global_max_pool": case_global_max_pool,
    "global_avg_pool": case_global_avg_pool,
    "linear": case_linear,
    "sigmoid": case_sigmoid,
    "masked_bce": case_masked_bce,
    "lstm": case_lstm,
}
