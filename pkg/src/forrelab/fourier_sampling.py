"""Fourier Sampling and its relation variant.

Two transform normalisations are in play and are named explicitly:
``fhat_dist = fwht_raw(f) / N`` defines D_f (probabilities fhat_dist**2),
``fhat_unit = fwht(f) = sqrt(N) * fhat_dist`` is used for the relation
threshold |fhat_unit(y)| >= c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc
from scipy.stats import binom

from .errors import DomainError, ShapeError
from .hadamard import as_real_vector, fwht, fwht_raw

__all__ = [
    "exact_distribution",
    "quantum_sample",
    "empirical_distribution",
    "tv_distance",
    "RelationResult",
    "relation_solve",
    "relation_success_exact",
    "relation_trials",
    "asymptotic_success",
    "finite_success",
]


def exact_distribution(f) -> np.ndarray:
    """Pr[y] = (sum_x f(x)(-1)^(x.y) / N)^2; batched over leading axes."""
    f = as_real_vector(f, name="f")
    N = f.shape[-1]
    return (fwht_raw(f) / N) ** 2


def quantum_sample(f, rng, size=None):
    """Measure H U_f H|0>: one query, y ~ D_f.  Returns (y, queries)."""
    p = exact_distribution(f)
    p = p / p.sum()
    y = rng.choice(p.size, size=size, p=p)
    return y, 1


def empirical_distribution(samples, N) -> np.ndarray:
    return np.bincount(np.asarray(samples), minlength=N) / len(samples)


def tv_distance(p, q) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ShapeError(f"distributions differ in shape: {p.shape} vs {q.shape}")
    return 0.5 * float(np.sum(np.abs(p - q)))


@dataclass
class RelationResult:
    y: int
    success: bool
    queries: int


def relation_solve(f, c, strategy, rng) -> RelationResult:
    """Output y hoping |fhat_unit(y)| >= c."""
    if c <= 0:
        raise DomainError("threshold c must be positive")
    f = as_real_vector(f, name="f")
    if strategy == "quantum":
        y, q = quantum_sample(f, rng)
        y = int(y)
    elif strategy == "zero_query":
        y, q = 0, 0
    else:
        raise DomainError(f"unknown strategy {strategy!r}")
    # the success check reads the whole table; it is grading, not querying
    return RelationResult(y, bool(abs(fwht(f)[y]) >= c), q)


def relation_success_exact(f, c) -> float:
    """Sum of D_f(y) over y with |fhat_unit(y)| >= c (sampler-free)."""
    f = as_real_vector(f, name="f")
    u = fwht(f)
    p = exact_distribution(f)
    return float(np.sum(p[np.abs(u) >= c], axis=-1))


def relation_trials(n, c, strategy, draws, rng, *, batch=2000) -> np.ndarray:
    """Success indicator per draw, each draw on a fresh uniform f."""
    if c <= 0:
        raise DomainError("threshold c must be positive")
    N = 2**n
    out = np.empty(draws, dtype=bool)
    done = 0
    while done < draws:
        m = min(batch, draws - done)
        f = 1.0 - 2.0 * rng.integers(0, 2, size=(m, N))
        u = fwht(f)
        if strategy == "quantum":
            p = u**2 / N
            cdf = np.cumsum(p, axis=1)
            r = rng.random((m, 1)) * cdf[:, -1:]
            y = np.minimum((cdf < r).sum(axis=1), N - 1)
        elif strategy == "zero_query":
            y = np.zeros(m, dtype=np.int64)
        else:
            raise DomainError(f"unknown strategy {strategy!r}")
        out[done : done + m] = np.abs(u[np.arange(m), y]) >= c
        done += m
    return out


def asymptotic_success(c, strategy) -> float:
    """Large-N limits: fhat_unit(y) is asymptotically N(0,1), and the quantum
    sampler reweights by z^2, so success is E[z^2; |z| >= c]."""
    if strategy == "zero_query":
        return float(erfc(c / math.sqrt(2)))
    if strategy == "quantum":
        return float(erfc(c / math.sqrt(2)) + 2 * c * math.exp(-c * c / 2) / math.sqrt(2 * math.pi))
    raise DomainError(f"unknown strategy {strategy!r}")


def finite_success(n, c, strategy) -> float:
    """Exact expected success over uniform f at finite N.

    Every fhat_unit(y) is S / sqrt(N) with S = 2B - N, B ~ Bin(N, 1/2).
    The quantum sampler picks y with weight fhat_unit(y)^2 / N, and the N
    outputs are exchangeable, so its success is E[S^2 / N; |S| >= c sqrt(N)].
    """
    N = 2**n
    b = np.arange(N + 1)
    s = 2 * b - N
    pmf = binom.pmf(b, N, 0.5)
    hit = np.abs(s) >= c * math.sqrt(N) - 1e-9
    if strategy == "zero_query":
        return float(pmf[hit].sum())
    if strategy == "quantum":
        return float((pmf * s * s / N)[hit].sum())
    raise DomainError(f"unknown strategy {strategy!r}")
