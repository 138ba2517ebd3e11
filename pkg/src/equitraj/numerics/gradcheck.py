"""Central-difference validation of the reverse-mode gradients."""

from __future__ import annotations

import math
from typing import Callable

from ..errors import InputError, ProbeError
from .params import ParamStore
from .tensor import Tensor

# Relative error uses max(|a|, |b|, FLOOR) in the denominator so that
# near-zero gradient pairs are compared absolutely instead of blowing up.
_DENOM_FLOOR = 1e-6


def grad_check(
    f: Callable[[ParamStore], Tensor],
    store: ParamStore,
    h: float = 1e-5,
) -> float:
    """Compare reverse-mode gradients of ``f`` against central differences.

    ``f`` must be a deterministic scalar-valued function of the store's
    parameters. Every parameter entry is probed at +-h. Returns the worst
    relative error across all entries.
    """
    if h <= 0.0:
        raise InputError(f"step size must be positive, got {h}")

    store.zero_grad()
    out = f(store)
    if out.size != 1:
        raise InputError("grad_check requires a scalar-valued function")
    if not math.isfinite(float(out.data)):
        raise ProbeError("function value is non-finite at the base point")
    out.backward()
    analytic = {name: p.grad.copy() for name, p in store.items()}

    worst = 0.0
    with store.frozen():
        for name, p in store.items():
            flat = p.data.reshape(-1)
            grad_flat = analytic[name].reshape(-1)
            for i in range(flat.size):
                saved = flat[i]
                flat[i] = saved + h
                f_plus = float(f(store).data)
                flat[i] = saved - h
                f_minus = float(f(store).data)
                flat[i] = saved
                if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                    raise ProbeError(
                        f"non-finite probe for {name}[{i}] at step {h}"
                    )
                fd = (f_plus - f_minus) / (2.0 * h)
                a = grad_flat[i]
                err = abs(a - fd) / max(abs(a), abs(fd), _DENOM_FLOOR)
                if err > worst:
                    worst = err
    return worst
