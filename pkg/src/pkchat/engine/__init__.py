"""Numerical core: tape-based autodiff over numpy, Adam, seeded init."""

from .init import SCHEMES, derive_seed, seeded_init
from .optim import OptimizerError, OptimizerState, adam_step, clip_by_global_norm
from .tensor import (
    OPS,
    Gradients,
    ShapeError,
    Tape,
    Tensor,
    add,
    as_tensor,
    backward,
    concat,
    cross_entropy,
    embedding,
    forward,
    gather_cols,
    gather_last,
    gelu,
    layer_norm,
    log,
    log_sigmoid,
    log_softmax,
    masked_fill,
    masked_softmax,
    matmul,
    mean,
    multiply,
    reshape,
    scatter_copy,
    sigmoid,
    slice_,
    softmax,
    straight_through,
    sub,
    sum_,
    transpose,
)

__all__ = [
    "OPS", "Gradients", "ShapeError", "Tape", "Tensor",
    "add", "as_tensor", "backward", "concat", "cross_entropy", "embedding",
    "forward", "gather_cols", "gather_last", "gelu", "layer_norm", "log", "log_sigmoid",
    "log_softmax", "masked_fill", "masked_softmax", "matmul", "mean", "multiply", "reshape",
    "scatter_copy", "sigmoid", "slice_", "softmax", "straight_through",
    "sub", "sum_", "transpose",
    "OptimizerError", "OptimizerState", "adam_step", "clip_by_global_norm",
    "SCHEMES", "derive_seed", "seeded_init",
]
