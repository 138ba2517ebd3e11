"""Reverse-mode differentiation over dense float64 arrays.

Every operation that touches a tensor requiring gradients records its
parents and a closure that maps the output gradient to parent gradients.
``Tensor.backward()`` walks the recorded graph once, in reverse
topological order, accumulating gradients into the leaves. Storage is
plain numpy; everything is 64-bit.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import ShapeError

Array = np.ndarray


def _as_array(value, check: bool = False) -> Array:
    arr = np.asarray(value, dtype=np.float64)
    if check and not np.all(np.isfinite(arr)):
        raise ValueError("non-finite values rejected in checked mode")
    return arr


def _unbroadcast(grad: Array, shape: tuple) -> Array:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """Dense float64 tensor, optionally tracking gradients.

    Tensors are immutable values from the caller's point of view: ops
    return new tensors and never write into their inputs. ``grad`` is
    populated by ``backward()`` on leaves with ``requires_grad=True``
    and accumulates across calls until reset by the owner.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, check: bool = False):
        self.data = _as_array(data, check=check)
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[Array], tuple] | None = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # -- graph ------------------------------------------------------------

    def backward(self) -> None:
        """Backpropagate from a scalar output to all reachable leaves."""
        if self.data.size != 1:
            raise ShapeError(
                f"backward() requires a scalar output, got shape {self.data.shape}"
            )
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is None:
                continue
            grads = node._backward(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.data)
                parent.grad = parent.grad + g
            node.grad = None  # free interior gradients; leaves keep theirs

    # -- operators ---------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)

    def detach(self) -> "Tensor":
        return Tensor(self.data)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data: Array, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


# -- arithmetic -------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _make(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _make(data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data / b.data

    def backward(g):
        return (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        )

    return _make(data, (a, b), backward)


def matmul(a, b) -> Tensor:
    """Matrix product with numpy's stacked-matrix broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(
            f"matmul requires >=2-D operands, got {a.data.shape} @ {b.data.shape}"
        )
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    data = np.matmul(a.data, b.data)

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

    return _make(data, (a, b), backward)


# -- shape manipulation ------------------------------------------------------


def reshape(t: Tensor, shape) -> Tensor:
    t = as_tensor(t)
    data = t.data.reshape(shape)

    def backward(g):
        return (g.reshape(t.data.shape),)

    return _make(data, (t,), backward)


def transpose(t: Tensor, axes) -> Tensor:
    t = as_tensor(t)
    data = np.transpose(t.data, axes)
    inverse = np.argsort(axes)

    def backward(g):
        return (np.transpose(g, inverse),)

    return _make(data, (t,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(data, tensors, backward)


def getitem(t: Tensor, key) -> Tensor:
    """Basic (slice/int/tuple) indexing; use ``gather`` for index arrays."""
    t = as_tensor(t)
    data = t.data[key]

    def backward(g):
        gt = np.zeros_like(t.data)
        gt[key] += g
        return (gt,)

    return _make(data, (t,), backward)


def gather(t: Tensor, index: Array) -> Tensor:
    """Select rows along axis 0 by integer index array."""
    t = as_tensor(t)
    index = np.asarray(index, dtype=np.intp)
    data = t.data[index]

    def backward(g):
        gt = np.zeros_like(t.data)
        np.add.at(gt, index, g)
        return (gt,)

    return _make(data, (t,), backward)


def segment_sum(t: Tensor, index: Array, num_segments: int) -> Tensor:
    """Sum rows of ``t`` into ``num_segments`` buckets given by ``index``.

    np.add.at applies updates sequentially, so the reduction order is
    deterministic for a fixed row order.
    """
    t = as_tensor(t)
    index = np.asarray(index, dtype=np.intp)
    data = np.zeros((num_segments,) + t.data.shape[1:], dtype=np.float64)
    np.add.at(data, index, t.data)

    def backward(g):
        return (g[index],)

    return _make(data, (t,), backward)


# -- reductions --------------------------------------------------------------


def tsum(t: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    t = as_tensor(t)
    data = t.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, t.data.shape).copy(),)
        g_expanded = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g_expanded, t.data.shape).copy(),)

    return _make(data, (t,), backward)


def tmean(t: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    t = as_tensor(t)
    if axis is None:
        count = t.data.size
    elif isinstance(axis, tuple):
        count = int(np.prod([t.data.shape[a] for a in axis]))
    else:
        count = t.data.shape[axis]
    return mul(tsum(t, axis=axis, keepdims=keepdims), 1.0 / count)


# -- nonlinearities -----------------------------------------------------------


def _stable_sigmoid(x: Array) -> Array:
    # evaluate exp only on the side that cannot overflow
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(t: Tensor) -> Tensor:
    t = as_tensor(t)
    data = _stable_sigmoid(t.data)

    def backward(g):
        return (g * data * (1.0 - data),)

    return _make(data, (t,), backward)


def silu(t: Tensor) -> Tensor:
    """x * sigmoid(x), elementwise."""
    t = as_tensor(t)
    s = _stable_sigmoid(t.data)
    data = t.data * s

    def backward(g):
        return (g * s * (1.0 + t.data * (1.0 - s)),)

    return _make(data, (t,), backward)


def exp(t: Tensor) -> Tensor:
    t = as_tensor(t)
    data = np.exp(t.data)

    def backward(g):
        return (g * data,)

    return _make(data, (t,), backward)


def tanh(t: Tensor) -> Tensor:
    t = as_tensor(t)
    data = np.tanh(t.data)

    def backward(g):
        return (g * (1.0 - data * data),)

    return _make(data, (t,), backward)


def clip(t: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values; gradient passes only where strictly inside the bounds."""
    t = as_tensor(t)
    data = np.clip(t.data, lo, hi)
    inside = ((t.data > lo) & (t.data < hi)).astype(np.float64)

    def backward(g):
        return (g * inside,)

    return _make(data, (t,), backward)


def arccos(t: Tensor) -> Tensor:
    """Inverse cosine; zero gradient at the endpoints of the domain."""
    t = as_tensor(t)
    data = np.arccos(np.clip(t.data, -1.0, 1.0))
    denom_sq = 1.0 - t.data * t.data

    def backward(g):
        safe = denom_sq > 1e-300
        scale = np.where(safe, -1.0 / np.sqrt(np.where(safe, denom_sq, 1.0)), 0.0)
        return (g * scale,)

    return _make(data, (t,), backward)


def absval(t: Tensor) -> Tensor:
    """Absolute value; subgradient 0 at the origin."""
    t = as_tensor(t)
    data = np.abs(t.data)

    def backward(g):
        return (g * np.sign(t.data),)

    return _make(data, (t,), backward)


def arctan2(y: Tensor, x: Tensor) -> Tensor:
    """Elementwise atan2; gradient 0 where both arguments vanish."""
    y, x = as_tensor(y), as_tensor(x)
    data = np.arctan2(y.data, x.data)
    denom = y.data * y.data + x.data * x.data

    def backward(g):
        safe = np.where(denom > 0.0, denom, 1.0)
        live = (denom > 0.0).astype(np.float64)
        gy = g * x.data / safe * live
        gx = -g * y.data / safe * live
        return _unbroadcast(gy, y.data.shape), _unbroadcast(gx, x.data.shape)

    return _make(data, (y, x), backward)


def l2_norm(t: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Euclidean norm along ``axis``; subgradient 0 at the origin."""
    t = as_tensor(t)
    data = np.sqrt(np.sum(t.data * t.data, axis=axis, keepdims=True))

    def backward(g):
        g_k = g if keepdims else np.expand_dims(g, axis)
        safe = np.where(data > 0.0, data, 1.0)
        return (g_k * t.data / safe * (data > 0.0),)

    out_data = data if keepdims else np.squeeze(data, axis=axis)
    out = _make(out_data, (t,), backward)
    return out


def softmax(t: Tensor, axis: int = -1) -> Tensor:
    """Softmax built from primitives; the max shift is a detached constant."""
    t = as_tensor(t)
    shift = Tensor(t.data.max(axis=axis, keepdims=True))
    e = exp(sub(t, shift))
    return div(e, tsum(e, axis=axis, keepdims=True))

