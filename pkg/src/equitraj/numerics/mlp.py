"""Affine/SiLU/dropout stacks parameterized through a ParamStore."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError, ShapeError
from .params import ParamStore
from .tensor import Tensor, add, matmul, mul, silu


@dataclass(frozen=True)
class MlpSpec:
    """Shape and regularization of one MLP.

    ``widths`` lists the input width followed by every layer's output
    width. Hidden layers get SiLU and (in train mode) inverted dropout;
    the final layer is plain affine unless ``final_activation`` is set.
    ``bias`` has one flag per layer.
    """

    widths: tuple[int, ...]
    dropout: float = 0.0
    bias: tuple[bool, ...] = ()
    final_activation: bool = False

    def __post_init__(self):
        if len(self.widths) < 2:
            raise InputError("MlpSpec needs an input width and at least one layer")
        if any(w < 1 for w in self.widths):
            raise InputError(f"layer widths must be >= 1, got {self.widths}")
        if not 0.0 <= self.dropout < 1.0:
            raise InputError(f"dropout probability must be in [0, 1), got {self.dropout}")
        if not self.bias:
            object.__setattr__(self, "bias", tuple(True for _ in self.widths[1:]))
        elif len(self.bias) != len(self.widths) - 1:
            raise InputError("bias flags must match the number of layers")

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1


def mlp_init(
    spec: MlpSpec,
    store: ParamStore,
    prefix: str,
    rng: np.random.Generator,
    zero_final: bool = False,
) -> None:
    """Register an MLP's weights: uniform +-sqrt(1/fan_in), zero biases."""
    for i in range(spec.n_layers):
        fan_in, fan_out = spec.widths[i], spec.widths[i + 1]
        bound = (1.0 / fan_in) ** 0.5
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        if zero_final and i == spec.n_layers - 1:
            w = np.zeros((fan_in, fan_out))
        store.add(f"{prefix}.w{i}", w)
        if spec.bias[i]:
            store.add(f"{prefix}.b{i}", np.zeros(fan_out))


def mlp_apply(
    spec: MlpSpec,
    store: ParamStore,
    prefix: str,
    x: Tensor,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Run the stack. ``mode`` is "train" or "eval"; dropout needs ``rng``."""
    if mode not in ("train", "eval"):
        raise InputError(f"mode must be 'train' or 'eval', got {mode!r}")
    out = x
    for i in range(spec.n_layers):
        if out.shape[-1] != spec.widths[i]:
            raise ShapeError(
                f"{prefix} layer {i}: input width {out.shape[-1]}, "
                f"expected {spec.widths[i]}"
            )
        out = matmul(out, store[f"{prefix}.w{i}"])
        if spec.bias[i]:
            out = add(out, store[f"{prefix}.b{i}"])
        activate = i < spec.n_layers - 1 or spec.final_activation
        if activate:
            out = silu(out)
            if mode == "train" and spec.dropout > 0.0:
                out = dropout(out, spec.dropout, rng)
    return out


def dropout(t: Tensor, p: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: surviving activations are scaled by 1/(1-p)."""
    if rng is None:
        raise InputError("train-mode dropout requires a generator")
    keep = rng.random(t.shape) >= p
    mask = keep.astype(np.float64) / (1.0 - p)
    return mul(t, Tensor(mask))
