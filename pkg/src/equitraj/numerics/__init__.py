"""Numeric substrate: tensors, reverse-mode gradients, MLPs, optimizer, DCT."""

from .dct import dct, dct_matrix, idct
from .gradcheck import grad_check
from .mlp import MlpSpec, dropout, mlp_apply, mlp_init
from .params import ParamStore, clip_grad_norm, optimizer_step
from .tensor import (
    Tensor,
    absval,
    add,
    arccos,
    arctan2,
    as_tensor,
    clip,
    concat,
    div,
    exp,
    gather,
    getitem,
    l2_norm,
    matmul,
    mul,
    reshape,
    segment_sum,
    sigmoid,
    silu,
    softmax,
    sub,
    tanh,
    tmean,
    transpose,
    tsum,
)

__all__ = [
    "Tensor",
    "MlpSpec",
    "ParamStore",
    "absval",
    "add",
    "arccos",
    "arctan2",
    "as_tensor",
    "clip",
    "clip_grad_norm",
    "concat",
    "dct",
    "dct_matrix",
    "div",
    "dropout",
    "exp",
    "gather",
    "getitem",
    "grad_check",
    "idct",
    "l2_norm",
    "matmul",
    "mlp_apply",
    "mlp_init",
    "mul",
    "optimizer_step",
    "reshape",
    "segment_sum",
    "sigmoid",
    "silu",
    "softmax",
    "sub",
    "tanh",
    "tmean",
    "transpose",
    "tsum",
]
