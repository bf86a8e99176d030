"""Tensor arithmetic with reverse-mode autodiff and the Adam optimizer."""

from .adam import AdamState, adam_step
from .conv import conv2d
from .tensor import (
    DEFAULT_DTYPE,
    ELEMENTWISE_OPS,
    STRUCTURAL_OPS,
    ShapeError,
    Tensor,
    absval,
    accumulate,
    add,
    average,
    backward,
    clamp,
    concat,
    detach,
    from_op,
    leaky_relu,
    mse,
    mul,
    reduce_mean,
    reduce_sum,
    scale,
    sigmoid,
    slice_,
    square,
    sub,
    tanh,
    upsample2,
)

__all__ = [
    "AdamState", "adam_step", "conv2d", "DEFAULT_DTYPE", "ELEMENTWISE_OPS",
    "STRUCTURAL_OPS", "ShapeError", "Tensor", "absval", "accumulate", "add",
    "average", "backward", "clamp", "concat", "detach", "from_op",
    "leaky_relu", "mse", "mul", "reduce_mean", "reduce_sum", "scale",
    "sigmoid", "slice_", "square", "sub", "tanh", "upsample2",
]
