"""Convolution, activation, pooling and dense kernels (forward + backward).

Convolutions are expressed as a small loop over kernel taps, each tap a
BLAS matmul over strided slices; depthwise convolutions and the fused
affine+relu6 use numba inner loops because they are memory bound in
plain numpy. Padding follows the TensorFlow SAME convention (asymmetric,
extra pixel on the bottom/right when the total pad is odd).
"""

from __future__ import annotations

import numpy as np
from numba import njit


def _same_pad(size: int, k: int, stride: int) -> tuple[int, int]:
    out = -(-size // stride)  # ceil div
    total = max((out - 1) * stride + k - size, 0)
    return total // 2, total - total // 2


def _pad_nhwc(x, kh, kw, stride, same):
    if not same:
        return x, 0, 0
    pt, pb = _same_pad(x.shape[1], kh, stride)
    pl, pr = _same_pad(x.shape[2], kw, stride)
    if pt or pb or pl or pr:
        x = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    return x, pt, pl


def _out_size(size: int, k: int, stride: int, same: bool) -> int:
    if same:
        return -(-size // stride)
    return (size - k) // stride + 1


# ---------------------------------------------------------------- conv2d

def conv2d(x, w, stride=1, same_padding=True):
    """Cross-correlate NHWC ``x`` with ``w`` of shape (kh, kw, cin, cout)."""
    kh, kw, cin, cout = w.shape
    if x.shape[3] != cin:
        raise ValueError(f"conv2d channel mismatch: input {x.shape[3]}, kernel {cin}")
    ho = _out_size(x.shape[1], kh, stride, same_padding)
    wo = _out_size(x.shape[2], kw, stride, same_padding)
    xp, _, _ = _pad_nhwc(x, kh, kw, stride, same_padding)
    n = x.shape[0]
    y = np.zeros((n, ho, wo, cout), dtype=x.dtype)
    flat = y.reshape(-1, cout)
    for i in range(kh):
        for j in range(kw):
            sl = xp[:, i:i + (ho - 1) * stride + 1:stride, j:j + (wo - 1) * stride + 1:stride, :]
            flat += sl.reshape(-1, cin) @ w[i, j]
    return y


def conv2d_bwd(dy, x, w, stride=1, same_padding=True):
    kh, kw, cin, cout = w.shape
    n, ho, wo, _ = dy.shape
    xp, pt, pl = _pad_nhwc(x, kh, kw, stride, same_padding)
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    dy2 = dy.reshape(-1, cout)
    for i in range(kh):
        for j in range(kw):
            sl = xp[:, i:i + (ho - 1) * stride + 1:stride, j:j + (wo - 1) * stride + 1:stride, :]
            dw[i, j] = sl.reshape(-1, cin).T @ dy2
            dxp[:, i:i + (ho - 1) * stride + 1:stride, j:j + (wo - 1) * stride + 1:stride, :] += (
                dy2 @ w[i, j].T
            ).reshape(n, ho, wo, cin)
    h, wth = x.shape[1], x.shape[2]
    dx = dxp[:, pt:pt + h, pl:pl + wth, :]
    return np.ascontiguousarray(dx), dw


# ------------------------------------------------------------- depthwise

@njit(cache=True, fastmath=True)
def _dw_fwd(xp, w, out, stride):
    n, ho, wo, c = out.shape
    kh, kw = w.shape[0], w.shape[1]
    for b in range(n):
        for oh in range(ho):
            for ow in range(wo):
                hi = oh * stride
                wi = ow * stride
                for ch in range(c):
                    acc = xp[b, hi, wi, ch] * w[0, 0, ch]
                    for i in range(kh):
                        for j in range(kw):
                            if i or j:
                                acc += xp[b, hi + i, wi + j, ch] * w[i, j, ch]
                    out[b, oh, ow, ch] = acc


@njit(cache=True, fastmath=True)
def _dw_bwd(dy, xp, w, dxp, dw, stride):
    n, ho, wo, c = dy.shape
    kh, kw = w.shape[0], w.shape[1]
    for b in range(n):
        for oh in range(ho):
            for ow in range(wo):
                hi = oh * stride
                wi = ow * stride
                for i in range(kh):
                    for j in range(kw):
                        for ch in range(c):
                            g = dy[b, oh, ow, ch]
                            dxp[b, hi + i, wi + j, ch] += g * w[i, j, ch]
                            dw[i, j, ch] += g * xp[b, hi + i, wi + j, ch]


def depthwise_conv2d(x, w, stride=1, same_padding=True):
    """Per-channel conv: ``w`` has shape (kh, kw, c), channels stay independent."""
    kh, kw, c = w.shape
    if x.shape[3] != c:
        raise ValueError(f"depthwise channel mismatch: input {x.shape[3]}, kernel {c}")
    ho = _out_size(x.shape[1], kh, stride, same_padding)
    wo = _out_size(x.shape[2], kw, stride, same_padding)
    xp, _, _ = _pad_nhwc(x, kh, kw, stride, same_padding)
    out = np.empty((x.shape[0], ho, wo, c), dtype=x.dtype)
    _dw_fwd(np.ascontiguousarray(xp), w, out, stride)
    return out


def depthwise_conv2d_bwd(dy, x, w, stride=1, same_padding=True):
    kh, kw, c = w.shape
    xp, pt, pl = _pad_nhwc(x, kh, kw, stride, same_padding)
    xp = np.ascontiguousarray(xp)
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    _dw_bwd(np.ascontiguousarray(dy), xp, w, dxp, dw, stride)
    h, wth = x.shape[1], x.shape[2]
    return np.ascontiguousarray(dxp[:, pt:pt + h, pl:pl + wth, :]), dw


# ------------------------------------------------------------- pointwise

def pointwise_conv(x, w):
    """1x1 conv == per-pixel matmul over channels; ``w`` is (cin, cout)."""
    if x.shape[-1] != w.shape[0]:
        raise ValueError(f"pointwise channel mismatch: input {x.shape[-1]}, kernel {w.shape[0]}")
    y = x.reshape(-1, w.shape[0]) @ w
    return y.reshape(x.shape[:-1] + (w.shape[1],))


def pointwise_conv_bwd(dy, x, w):
    dy2 = dy.reshape(-1, w.shape[1])
    x2 = x.reshape(-1, w.shape[0])
    dx = (dy2 @ w.T).reshape(x.shape)
    dw = x2.T @ dy2
    return dx, dw


# ------------------------------------------------------------ activations

def relu6(x):
    return np.minimum(np.maximum(x, 0), np.asarray(6, dtype=x.dtype))


def relu6_bwd(dy, x):
    return dy * ((x > 0) & (x < 6))


def channel_affine(x, scale, bias):
    """y[..., c] = x[..., c] * scale[c] + bias[c]."""
    if x.shape[-1] != scale.shape[0] or scale.shape != bias.shape:
        raise ValueError("channel_affine length mismatch")
    return x * scale + bias


def channel_affine_bwd(dy, x, scale):
    axes = tuple(range(dy.ndim - 1))
    dx = dy * scale
    dscale = np.sum(dy * x, axis=axes)
    dbias = np.sum(dy, axis=axes)
    return dx, dscale, dbias


@njit(cache=True, fastmath=True)
def _affine_relu6_fwd(x2, scale, bias, out):
    m, c = x2.shape
    for i in range(m):
        for ch in range(c):
            v = x2[i, ch] * scale[ch] + bias[ch]
            if v < 0.0:
                v = 0.0
            elif v > 6.0:
                v = 6.0
            out[i, ch] = v


@njit(cache=True, fastmath=True)
def _affine_relu6_bwd(dy2, x2, scale, bias, dx2, dscale, dbias):
    m, c = dy2.shape
    for i in range(m):
        for ch in range(c):
            v = x2[i, ch] * scale[ch] + bias[ch]
            if 0.0 < v < 6.0:
                g = dy2[i, ch]
                dx2[i, ch] = g * scale[ch]
                dscale[ch] += g * x2[i, ch]
                dbias[ch] += g
            else:
                dx2[i, ch] = 0.0


def affine_relu6(x, scale, bias):
    """Fused channel_affine + relu6 (single memory pass)."""
    if x.shape[-1] != scale.shape[0] or scale.shape != bias.shape:
        raise ValueError("affine_relu6 length mismatch")
    x2 = np.ascontiguousarray(x).reshape(-1, x.shape[-1])
    out = np.empty_like(x2)
    _affine_relu6_fwd(x2, scale, bias, out)
    return out.reshape(x.shape)


def affine_relu6_bwd(dy, x, scale, bias):
    x2 = np.ascontiguousarray(x).reshape(-1, x.shape[-1])
    dy2 = np.ascontiguousarray(dy).reshape(-1, x.shape[-1])
    dx2 = np.empty_like(x2)
    dscale = np.zeros_like(scale)
    dbias = np.zeros_like(bias)
    _affine_relu6_bwd(dy2, x2, scale, bias, dx2, dscale, dbias)
    return dx2.reshape(x.shape), dscale, dbias


# ---------------------------------------------------------------- pooling

def global_max_pool(x):
    """NHWC -> NC; gradients route to the first maximum in row-major order."""
    n, h, w, c = x.shape
    return x.reshape(n, h * w, c).max(axis=1)


def global_max_pool_bwd(dy, x):
    n, h, w, c = x.shape
    flat = x.reshape(n, h * w, c)
    idx = flat.argmax(axis=1)  # first max wins ties
    dx = np.zeros_like(flat)
    ni, ci = np.meshgrid(np.arange(n), np.arange(c), indexing="ij")
    dx[ni, idx, ci] = dy
    return dx.reshape(x.shape)


def global_avg_pool(x):
    return x.mean(axis=(1, 2))


def global_avg_pool_bwd(dy, x_shape):
    n, h, w, c = x_shape
    dx = np.broadcast_to(dy[:, None, None, :], x_shape) / np.asarray(h * w, dtype=dy.dtype)
    return np.ascontiguousarray(dx)


# ------------------------------------------------------------------ dense

def linear(x, w, b):
    return x @ w + b


def linear_bwd(dy, x, w):
    dx = dy @ w.T
    dw = x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])
    db = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    return dx, dw, db


def sigmoid(x):
    # clip keeps exp() in range for float32; the result is exact to within
    # machine precision since sigmoid saturates long before +-60
    out = np.clip(x, -60, 60)
    np.negative(out, out)
    np.exp(out, out)
    out += 1
    np.reciprocal(out, out)
    return out


def sigmoid_bwd(dy, y):
    """Backward in terms of the forward output ``y``."""
    return dy * y * (1 - y)
