"""Minimal dense-tensor kernels with hand-written backward passes.

All tensors are plain numpy arrays, NHWC layout for images, float32 in
production (float64 works too and is used by the gradient checker).
Every forward op here has a matching ``*_bwd`` that returns input and
parameter gradients; correctness is enforced by central finite
differences in the test suite.
"""

from .kernels import (
    conv2d,
    conv2d_bwd,
    depthwise_conv2d,
    depthwise_conv2d_bwd,
    pointwise_conv,
    pointwise_conv_bwd,
    relu6,
    relu6_bwd,
    channel_affine,
    channel_affine_bwd,
    affine_relu6,
    affine_relu6_bwd,
    global_max_pool,
    global_max_pool_bwd,
    global_avg_pool,
    global_avg_pool_bwd,
    linear,
    linear_bwd,
    sigmoid,
    sigmoid_bwd,
)
from .lstm import LstmSpec, lstm_init_state, lstm_step, lstm_forward_seq, lstm_backward_seq
from .loss import masked_weighted_bce, masked_weighted_bce_bwd
from .params import ParamStore
from .optim import AdamState, adam_step
from .serial import save_weights, load_weights, WeightsFormatError, BadMagicError, VersionError, TruncatedFileError
from .gradcheck import grad_check

__all__ = [
    "conv2d", "conv2d_bwd",
    "depthwise_conv2d", "depthwise_conv2d_bwd",
    "pointwise_conv", "pointwise_conv_bwd",
    "relu6", "relu6_bwd",
    "channel_affine", "channel_affine_bwd",
    "affine_relu6", "affine_relu6_bwd",
    "global_max_pool", "global_max_pool_bwd",
    "global_avg_pool", "global_avg_pool_bwd",
    "linear", "linear_bwd",
    "sigmoid", "sigmoid_bwd",
    "LstmSpec", "lstm_init_state", "lstm_step", "lstm_forward_seq", "lstm_backward_seq",
    "masked_weighted_bce", "masked_weighted_bce_bwd",
    "ParamStore", "AdamState", "adam_step",
    "save_weights", "load_weights",
    "WeightsFormatError", "BadMagicError", "VersionError", "TruncatedFileError",
    "grad_check",
]
