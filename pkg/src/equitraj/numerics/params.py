"""Named parameter store with gradient accumulators and optimizer state."""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from ..errors import MissingGradientError, ShapeError
from .tensor import Tensor


class _Moments:
    __slots__ = ("m", "v", "step")

    def __init__(self, shape):
        self.m = np.zeros(shape, dtype=np.float64)
        self.v = np.zeros(shape, dtype=np.float64)
        self.step = 0


class ParamStore:
    """Ordered collection of leaf tensors plus per-parameter moments.

    Each parameter is a ``Tensor`` with ``requires_grad=True`` whose
    ``grad`` accumulates across backward passes until ``zero_grad``.
    Moments (m, v) and the step counter back the optimizer.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._moments: dict[str, _Moments] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"parameter {name!r} already registered")
        leaf = Tensor(np.array(data, dtype=np.float64), requires_grad=True)
        leaf.grad = np.zeros_like(leaf.data)
        self._params[name] = leaf
        self._moments[name] = _Moments(leaf.data.shape)
        return leaf

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._params[name]
        except KeyError:
            raise KeyError(f"no parameter named {name!r}") from None

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def moments(self, name: str) -> _Moments:
        return self._moments[name]

    def num_entries(self) -> int:
        return sum(p.data.size for p in self._params.values())

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.grad = np.zeros_like(p.data)

    def set_grad(self, name: str, grad) -> None:
        p = self[name]
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != p.data.shape:
            raise ShapeError(
                f"gradient shape {grad.shape} != parameter shape {p.data.shape} "
                f"for {name!r}"
            )
        p.grad = grad.copy()

    @contextmanager
    def frozen(self):
        """Temporarily stop recording graphs through these parameters."""
        for p in self._params.values():
            p.requires_grad = False
        try:
            yield self
        finally:
            for p in self._params.values():
                p.requires_grad = True

    def copy(self) -> "ParamStore":
        other = ParamStore()
        for name, p in self._params.items():
            other.add(name, p.data.copy())
            if p.grad is not None:
                other._params[name].grad = p.grad.copy()
            src = self._moments[name]
            dst = other._moments[name]
            dst.m = src.m.copy()
            dst.v = src.v.copy()
            dst.step = src.step
        return other

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self._params.items()}

    def param_norms(self) -> dict[str, float]:
        return {name: float(np.linalg.norm(p.data)) for name, p in self._params.items()}


def optimizer_step(
    store: ParamStore,
    lr: float = 1e-3,
    weight_decay: float = 1e-4,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> None:
    """Adaptive-moment update with decoupled weight decay.

    Decay multiplies the weights directly (not routed through the
    gradient), then the bias-corrected moment update is applied.
    Gradients are left untouched; the caller zeroes them.
    """
    beta1, beta2 = betas
    for name, p in store.items():
        if p.grad is None:
            raise MissingGradientError(name)
        g = p.grad
        state = store.moments(name)
        if weight_decay != 0.0:
            p.data *= 1.0 - lr * weight_decay
        state.step += 1
        state.m = beta1 * state.m + (1.0 - beta1) * g
        state.v = beta2 * state.v + (1.0 - beta2) * (g * g)
        m_hat = state.m / (1.0 - beta1 ** state.step)
        v_hat = state.v / (1.0 - beta2 ** state.step)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


def clip_grad_norm(store: ParamStore, max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most ``max_norm``."""
    total = 0.0
    for _, p in store.items():
        if p.grad is not None:
            total += float(np.sum(p.grad * p.grad))
    total = total ** 0.5
    if total > max_norm and total > 0.0:
        scale = max_norm / total
        for _, p in store.items():
            if p.grad is not None:
                p.grad = p.grad * scale
    return total
