"""Exact k-fold forrelation.

``Phi(f_1..f_k)`` is the ``|0...0>`` amplitude of

    H U_{f_k} H ... H U_{f_1} H |0...0>

where ``U_f`` multiplies basis state ``|x>`` by ``f(x)``.  The full final
vector holds the shifted values ``Phi(f_1, ..., f_k * chi_z)`` for every ``z``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ResourceError, ShapeError
from .hadamard import as_real_vector, fwht, num_qubits, parity_dot

__all__ = ["PhiResult", "functions_of", "kfold_state", "phi", "phi_value", "phi_bruteforce"]

BRUTE_FORCE_LIMIT = 10**7


@dataclass
class PhiResult:
    phi: float
    amplitudes: np.ndarray | None = None


def functions_of(t) -> list[np.ndarray]:
    """Accept an InstanceTuple-like object or a plain sequence of tables."""
    funcs = getattr(t, "functions", t)
    out = [as_real_vector(f, name="function") for f in funcs]
    if not out:
        raise ShapeError("need at least one function")
    size = out[0].shape[-1]
    for f in out:
        if f.shape[-1] != size:
            raise ShapeError("functions have different lengths")
    return out


def kfold_state(funcs, *, start=None) -> np.ndarray:
    """Final state ``H U_{f_k} H ... U_{f_1} H |start>``.

    ``start`` defaults to ``|0...0>``.  Leading axes broadcast, so passing a
    stack of tables of shape ``(B, N)`` for each position evaluates B tuples
    at once.
    """
    funcs = functions_of(funcs)
    size = funcs[0].shape[-1]
    if start is None:
        v = np.full(size, 1.0 / np.sqrt(size))
    else:
        v = fwht(start)
    for f in funcs:
        v = fwht(v * f)
    return v


def phi(t, *, amplitudes: bool = False) -> PhiResult:
    """Phi of a tuple via the transform pipeline, O(k N log N)."""
    v = kfold_state(t)
    return PhiResult(float(v[..., 0]) if v.ndim == 1 else v[..., 0], v if amplitudes else None)


def phi_value(t):
    """Just the number (or an array of numbers for stacked input)."""
    return kfold_state(t)[..., 0]


def phi_bruteforce(t) -> float:
    """Literal nested sum over ``(x_1, ..., x_k)``; used as an oracle.

    Phi = N^{-(k+1)/2} sum f_1(x_1) (-1)^{x_1.x_2} f_2(x_2) ... f_k(x_k).
    """
    funcs = functions_of(t)
    if any(f.ndim != 1 for f in funcs):
        raise ShapeError("brute force takes one tuple at a time")
    size = funcs[0].size
    num_qubits(size)
    k = len(funcs)
    if size**k > BRUTE_FORCE_LIMIT:
        raise ResourceError(f"N^k = {size}^{k} exceeds {BRUTE_FORCE_LIMIT}")
    total = 0.0
    # chunk over x_1 so memory stays at N^(k-1)
    rest = np.array(list(itertools.product(range(size), repeat=k - 1)), dtype=np.int64)
    rest = rest.reshape(size ** (k - 1), k - 1)
    for x1 in range(size):
        xs = np.concatenate([np.full((rest.shape[0], 1), x1), rest], axis=1)
        term = np.ones(xs.shape[0])
        for j in range(k):
            term *= funcs[j][xs[:, j]]
        for j in range(k - 1):
            term *= 1 - 2 * parity_dot(xs[:, j], xs[:, j + 1])
        total += term.sum()
    return float(total / size ** ((k + 1) / 2))
