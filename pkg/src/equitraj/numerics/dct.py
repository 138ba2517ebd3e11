"""Orthonormal DCT-II and its inverse, as explicit transform matrices.

The matrix form keeps the transform trivially differentiable (it is a
matmul) and makes orthonormality a direct property: M @ M.T == I.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import InputError


@lru_cache(maxsize=64)
def dct_matrix(n: int) -> np.ndarray:
    """n x n orthonormal DCT-II matrix; row k holds frequency k."""
    if n < 1:
        raise InputError(f"transform length must be >= 1, got {n}")
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * m + 1) * k / (2 * n))
    mat[0] *= np.sqrt(1.0 / n)
    mat[1:] *= np.sqrt(2.0 / n)
    mat.setflags(write=False)
    return mat


def dct(signal: np.ndarray, axis: int = -1) -> np.ndarray:
    """Orthonormal DCT-II along ``axis``; other axes untouched."""
    signal = np.asarray(signal, dtype=np.float64)
    n = signal.shape[axis]
    moved = np.moveaxis(signal, axis, 0)
    coeffs = np.tensordot(dct_matrix(n), moved, axes=(1, 0))
    return np.moveaxis(coeffs, 0, axis)


def idct(coeffs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Exact inverse of ``dct`` (DCT-III with matching normalization)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    n = coeffs.shape[axis]
    moved = np.moveaxis(coeffs, axis, 0)
    signal = np.tensordot(dct_matrix(n).T, moved, axes=(1, 0))
    return np.moveaxis(signal, 0, axis)
