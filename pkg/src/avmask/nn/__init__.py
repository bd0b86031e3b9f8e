"""Small deterministic numpy neural-network core."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check, relative_error
from .layers import (
    bce_loss,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    lstm_backward,
    lstm_forward,
    maxpool2_backward,
    maxpool2_forward,
    relu_backward,
    relu_forward,
    sigmoid,
    sigmoid_backward,
    sigmoid_forward,
    tanh_backward,
    tanh_forward,
)
from .params import Param, ParamStore, adam_step
from .rng import glorot_uniform, make_rng

__all__ = [
    "Param",
    "ParamStore",
    "adam_step",
    "bce_loss",
    "conv2d_backward",
    "conv2d_forward",
    "dense_backward",
    "dense_forward",
    "dropout_backward",
    "dropout_forward",
    "glorot_uniform",
    "grad_check",
    "load_checkpoint",
    "lstm_backward",
    "lstm_forward",
    "make_rng",
    "maxpool2_backward",
    "maxpool2_forward",
    "relative_error",
    "relu_backward",
    "relu_forward",
    "save_checkpoint",
    "sigmoid",
    "sigmoid_backward",
    "sigmoid_forward",
    "tanh_backward",
    "tanh_forward",
]
