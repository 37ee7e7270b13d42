"""Tensor arithmetic with reverse-mode automatic differentiation."""

from .ops import (
    add,
    clip,
    concat,
    conv2d,
    cross_entropy,
    dense,
    log,
    matmul,
    maxpool2d,
    mean,
    mul,
    neg,
    relu,
    reshape,
    scale,
    softmax,
    sub,
    sum,
    transpose,
)
from .optim import sgd_step
from .tensor import Tape, TapeNode, Tensor, active_tape, as_tensor, backward

__all__ = [
    "Tape",
    "TapeNode",
    "Tensor",
    "active_tape",
    "add",
    "as_tensor",
    "backward",
    "clip",
    "concat",
    "conv2d",
    "cross_entropy",
    "dense",
    "log",
    "matmul",
    "maxpool2d",
    "mean",
    "mul",
    "neg",
    "relu",
    "reshape",
    "scale",
    "sgd_step",
    "softmax",
    "sub",
    "sum",
    "transpose",
]
