"""Dense Walsh-Hadamard kernels.

Vectors are indexed by integers ``x`` in ``[0, 2**n)``; bit ``i`` of ``x`` is
qubit ``i``.  The transforms act on the last axis, so a stack of vectors of
shape ``(batch, N)`` is transformed row by row.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

__all__ = [
    "num_qubits",
    "as_real_vector",
    "fwht_raw",
    "fwht",
    "apply_phase",
    "hadamard_matrix",
    "parity_dot",
]


def num_qubits(length: int) -> int:
    """Return ``n`` such that ``length == 2**n``; raise ShapeError otherwise."""
    length = int(length)
    if length < 1 or length & (length - 1):
        raise ShapeError(f"length {length} is not a power of two")
    return length.bit_length() - 1


def as_real_vector(v, *, name: str = "vector") -> np.ndarray:
    """Validate ``v`` as a finite real array whose last axis has length 2**n."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        raise ShapeError(f"{name} must be at least one-dimensional")
    num_qubits(arr.shape[-1])
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} has non-finite entries")
    return arr


def fwht_raw(v) -> np.ndarray:
    """Unnormalized transform: ``out[y] = sum_x (-1)**(x.y) v[x]``."""
    a = as_real_vector(v).copy()
    lead = a.shape[:-1]
    size = a.shape[-1]
    h = 1
    while h < size:
        a = a.reshape(lead + (size // (2 * h), 2, h))
        lo = a[..., 0, :].copy()
        hi = a[..., 1, :]
        a[..., 0, :] += hi
        a[..., 1, :] = lo - hi
        h *= 2
    return a.reshape(lead + (size,))


def fwht(v) -> np.ndarray:
    """Unitary transform ``H v`` with ``H[x, y] = (-1)**(x.y) / sqrt(N)``.

    Self-inverse and norm preserving.
    """
    out = fwht_raw(v)
    out /= np.sqrt(out.shape[-1])
    return out


def apply_phase(v, f) -> np.ndarray:
    """Pointwise product ``v[x] * f[x]`` (the query map ``|x> -> f(x)|x>``)."""
    v = as_real_vector(v)
    f = as_real_vector(f, name="phase")
    if v.shape[-1] != f.shape[-1]:
        raise ShapeError(f"length mismatch: {v.shape[-1]} vs {f.shape[-1]}")
    return v * f


def parity_dot(x, y):
    """``x.y mod 2`` for integer (arrays of) basis labels."""
    z = np.bitwise_and(np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64))
    parity = np.zeros_like(z)
    while np.any(z):
        parity ^= z & 1
        z = z >> 1
    return parity


def hadamard_matrix(n: int, *, normalized: bool = True) -> np.ndarray:
    """Dense ``2**n x 2**n`` Hadamard matrix, used as a test oracle."""
    idx = np.arange(2**n)
    m = 1.0 - 2.0 * parity_dot(idx[:, None], idx[None, :])
    if normalized:
        m /= np.sqrt(2**n)
    return m
