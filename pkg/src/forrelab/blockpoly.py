"""Sparse block-multilinear polynomials.

A degree-k block-multilinear polynomial has k blocks of variables and every
monomial takes exactly one variable from each block:

    p(x) = sum_t c_t * x[0][i_t0] * x[1][i_t1] * ... * x[k-1][i_t(k-1)]

Storage is a ``(T, k)`` integer index array plus a ``(T,)`` coefficient
array.  Blocks are 0-based here.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, PreconditionError, ResourceError, ShapeError

__all__ = [
    "BlockPoly",
    "SplitTrace",
    "QueryAlgorithm",
    "monomial",
    "evaluate",
    "marginal",
    "lambda_S",
    "all_lambdas",
    "split_variable",
    "balance",
    "is_balanced",
    "from_query_algorithm",
    "acceptance_probability",
    "random_query_algorithm",
    "random_orthogonal",
    "random_bounded_blockpoly",
    "poly_to_json",
    "poly_from_json",
    "save_poly",
    "load_poly",
]


def _unique_rows(rows: np.ndarray, sizes):
    """np.unique(rows, axis=0) via mixed-radix integer codes when they fit."""
    if rows.shape[1] == 0:
        return np.zeros((1, 0), dtype=np.int64), np.zeros(rows.shape[0], dtype=np.int64)
    if math.prod(sizes) < 2**62:
        codes = np.ravel_multi_index(tuple(rows.T), tuple(sizes))
        ucodes, inv = np.unique(codes, return_inverse=True)
        keys = np.stack(np.unravel_index(ucodes, tuple(sizes)), axis=1).astype(np.int64)
        return keys, inv.reshape(-1)
    keys, inv = np.unique(rows, axis=0, return_inverse=True)
    return keys, inv.reshape(-1)


@dataclass
class BlockPoly:
    block_sizes: tuple
    idx: np.ndarray
    coef: np.ndarray
    canonical: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        self.block_sizes = tuple(int(b) for b in self.block_sizes)
        k = len(self.block_sizes)
        if k < 1:
            raise ShapeError("need at least one block")
        idx = np.asarray(self.idx, dtype=np.int64).reshape(-1, k)
        coef = np.asarray(self.coef, dtype=float).reshape(-1)
        if idx.shape[0] != coef.shape[0]:
            raise ShapeError("index and coefficient counts differ")
        if idx.size and (np.any(idx < 0) or np.any(idx >= np.array(self.block_sizes))):
            raise ShapeError("term index outside its block")
        if idx.shape[0] and not self.canonical:
            # merge repeated keys and drop exact zeros
            keys, inv = _unique_rows(idx, self.block_sizes)
            coef = np.bincount(inv, weights=coef, minlength=keys.shape[0])
            keep = coef != 0
            idx, coef = keys[keep], coef[keep]
        self.idx = idx
        self.coef = coef

    @property
    def k(self) -> int:
        return len(self.block_sizes)

    @property
    def num_terms(self) -> int:
        return self.coef.size

    def copy(self):
        return BlockPoly(self.block_sizes, self.idx.copy(), self.coef.copy())


def monomial(block_sizes, index, c=1.0) -> BlockPoly:
    return BlockPoly(block_sizes, [list(index)], [c])


def _check_assignment(p, assignment):
    if len(assignment) != p.k:
        raise ShapeError(f"expected {p.k} blocks, got {len(assignment)}")
    out = []
    for j, x in enumerate(assignment):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != p.block_sizes[j]:
            raise ShapeError(f"block {j}: expected {p.block_sizes[j]} values, got {x.shape[-1]}")
        out.append(x)
    return out


def evaluate(p: BlockPoly, assignment):
    """Value at one assignment; leading batch axes on every block broadcast."""
    xs = _check_assignment(p, assignment)
    if p.num_terms == 0:
        return np.zeros(np.broadcast_shapes(*(x.shape[:-1] for x in xs)))[()] * 1.0
    prod = p.coef
    for j, x in enumerate(xs):
        prod = prod * x[..., p.idx[:, j]]
    return prod.sum(axis=-1)


def _subset(p, S):
    S = sorted({int(s) for s in S})
    if not S:
        raise DomainError("S must be non-empty")
    if S[0] < 0 or S[-1] >= p.k:
        raise DomainError(f"S must be a subset of range({p.k})")
    return S


def marginal(p: BlockPoly, S):
    """Coefficients with the blocks outside S summed out (set to all-ones).

    Returns ``(keys, sums)`` with keys of shape ``(U, |S|)``.
    """
    S = _subset(p, S)
    if p.num_terms == 0:
        return np.zeros((0, len(S)), dtype=np.int64), np.zeros(0)
    keys, inv = _unique_rows(p.idx[:, S], [p.block_sizes[s] for s in S])
    sums = np.bincount(inv, weights=p.coef, minlength=keys.shape[0])
    return keys, sums


def lambda_S(p: BlockPoly, S) -> float:
    """Sum over S-indices of the squared marginal coefficient."""
    _, sums = marginal(p, S)
    return float(np.sum(sums**2))


def nonempty_subsets(k):
    for size in range(1, k + 1):
        yield from itertools.combinations(range(k), size)


def all_lambdas(p: BlockPoly) -> dict:
    return {S: lambda_S(p, S) for S in nonempty_subsets(p.k)}


def is_balanced(p: BlockPoly, delta, *, rtol=1e-9) -> bool:
    return all(v <= delta * (1 + rtol) for v in all_lambdas(p).values())


def _split_block(p: BlockPoly, j: int, m: np.ndarray):
    """Split each variable i of block j into m[i] copies.

    Copy 0 keeps index i; extra copies go to the end of the block in order
    of i.  Returns the new polynomial and the new-index -> old-index map.
    """
    size = p.block_sizes[j]
    m = np.asarray(m, dtype=np.int64)
    extra = m - 1
    if np.any(extra < 0):
        raise DomainError("split counts must be >= 1")
    start = size + np.concatenate([[0], np.cumsum(extra)[:-1]])
    origin = np.concatenate([np.arange(size), np.repeat(np.arange(size), extra)])
    new_size = size + int(extra.sum())

    var = p.idx[:, j]
    reps = m[var]
    rows = np.repeat(np.arange(p.num_terms), reps)
    # position of each expanded row within its group of copies
    offs = np.arange(rows.size) - np.repeat(np.cumsum(reps) - reps, reps)
    idx = p.idx[rows].copy()
    old = var[rows]
    idx[:, j] = np.where(offs == 0, old, start[old] + offs - 1)
    coef = p.coef[rows] / reps[rows]
    sizes = list(p.block_sizes)
    sizes[j] = new_size
    # splitting maps distinct keys to distinct keys, so skip re-canonicalising
    return BlockPoly(sizes, idx, coef, canonical=True), origin


def split_variable(p: BlockPoly, j: int, l: int, m: int) -> BlockPoly:
    """Replace x[j][l] by the average of m fresh copies.

    Copy 0 reuses index l, the others are appended to block j.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    if not 0 <= j < p.k or not 0 <= l < p.block_sizes[j]:
        raise DomainError("variable out of range")
    counts = np.ones(p.block_sizes[j], dtype=np.int64)
    counts[l] = m
    return _split_block(p, j, counts)[0]


@dataclass
class SplitTrace:
    """``origin[j][i]`` is the pre-split index of new variable i in block j
    (``-1`` for zero-coefficient padding)."""

    origin: list
    new_variables: int = 0
    padded: int = 0
    passes: list = field(default_factory=list)


def _sampled_bound_check(p, rng, samples=256, tol=1e-9):
    xs = [1.0 - 2.0 * rng.integers(0, 2, size=(samples, b)) for b in p.block_sizes]
    worst = float(np.max(np.abs(evaluate(p, xs)))) if p.num_terms else 0.0
    if worst > 1 + tol:
        raise PreconditionError(f"polynomial is not bounded: |p| = {worst:.6g} at a sampled point")


def balance(p: BlockPoly, delta: float, *, check_bounded=True, rng=None, max_new_variables=10**7, max_terms=2 * 10**7, pad=True):
    """Split variables until every Lambda_S <= delta.

    For each non-empty S (by size, then lexicographic) that still exceeds
    delta, pick the smallest block j in S (lowest index on ties) and split
    its variables against the marginal over S:

        V_i = sum of squared marginal coefficients through x[j][i]
        s   = sum_i sqrt(V_i)
        m_i = ceil(sqrt(V_i) * s / delta)

    after which Lambda_S = sum V_i / m_i <= delta, at a cost of fewer than
    s^2 / delta new variables.  Splitting a block never raises Lambda for
    any S, so one pass over the subsets suffices.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    if check_bounded:
        _sampled_bound_check(p, rng if rng is not None else np.random.default_rng(0))
    origin = [np.arange(b) for b in p.block_sizes]
    trace = SplitTrace(origin=origin)
    for S in nonempty_subsets(p.k):
        keys, sums = marginal(p, S)
        if np.sum(sums**2) <= delta:
            continue
        j = min(S, key=lambda b: (p.block_sizes[b], b))
        pos = list(S).index(j)
        V = np.bincount(keys[:, pos], weights=sums**2, minlength=p.block_sizes[j])
        root = np.sqrt(V)
        s = root.sum()
        m = np.maximum(1, np.ceil(root * s / delta * (1 + 1e-12))).astype(np.int64)
        added = int(np.sum(m - 1))
        if trace.new_variables + added > max_new_variables:
            raise ResourceError(f"balancing needs more than {max_new_variables} new variables")
        # every term through x[j][i] is copied m_i times
        if int(m[p.idx[:, j]].sum()) > max_terms:
            raise ResourceError(f"balancing would create more than {max_terms} terms")
        p, block_origin = _split_block(p, j, m)
        trace.origin[j] = trace.origin[j][block_origin]
        trace.new_variables += added
        trace.passes.append({"S": S, "block": j, "added": added, "s": float(s)})
    if pad:
        p, trace.padded = pad_blocks(p, trace)
    return p, trace


def pad_blocks(p: BlockPoly, trace: SplitTrace | None = None):
    """Append zero-coefficient variables so every block has the same size."""
    target = max(p.block_sizes)
    added = 0
    for j, b in enumerate(p.block_sizes):
        if b < target and trace is not None:
            trace.origin[j] = np.concatenate([trace.origin[j], np.full(target - b, -1)])
        added += target - b
    return BlockPoly([target] * p.k, p.idx, p.coef, canonical=True), added


# ------------------------------------------------------------ query algorithms


@dataclass
class QueryAlgorithm:
    """A t-query algorithm on n qubits over an input X in {-1,1}^N.

    ``unitaries`` are t+1 real orthogonal 2^n x 2^n matrices.  Query j maps
    basis state s to ``x[qmap[s]] |s>`` with ``x[0] = 1`` (no query) and
    ``x[i] = X[i-1]``.  The algorithm accepts on ``accepting`` basis states.
    """

    n: int
    N: int
    unitaries: list
    accepting: list
    query_index_map: np.ndarray

    def __post_init__(self):
        D = 2**self.n
        self.unitaries = [np.asarray(u, dtype=float) for u in self.unitaries]
        for u in self.unitaries:
            if u.shape != (D, D):
                raise ShapeError(f"unitary of shape {u.shape}, expected {(D, D)}")
            if not np.allclose(u @ u.T, np.eye(D), atol=1e-10):
                raise PreconditionError("unitary is not orthogonal to 1e-10")
        self.query_index_map = np.asarray(self.query_index_map, dtype=np.int64)
        if self.query_index_map.shape != (D,):
            raise ShapeError("query_index_map must cover every basis state")
        if np.any(self.query_index_map < 0) or np.any(self.query_index_map > self.N):
            raise ShapeError("query index out of range 0..N")
        self.accepting = sorted({int(a) for a in self.accepting})
        if any(not 0 <= a < D for a in self.accepting):
            raise ShapeError("accepting state out of range")

    @property
    def t(self) -> int:
        return len(self.unitaries) - 1


def acceptance_probability(A: QueryAlgorithm, X) -> float:
    """Plain statevector run on input X."""
    X = np.asarray(X, dtype=float)
    x = np.concatenate([[1.0], X])
    phase = x[A.query_index_map]
    state = A.unitaries[0][:, 0].copy()
    for u in A.unitaries[1:]:
        state = u @ (phase * state)
    return float(np.sum(state[A.accepting] ** 2))


MAX_EXTRACT_QUBITS = 4
MAX_EXTRACT_QUERIES = 3


def from_query_algorithm(A: QueryAlgorithm, *, tol=1e-14) -> BlockPoly:
    """Block-multilinear polynomial of degree 2t for the acceptance probability.

    Each amplitude is tracked as a dense tensor over the (N+1)-sized blocks
    queried so far; query j moves amplitude of state s onto variable
    ``qmap[s]`` of a fresh block.  The result is sum over accepting s of
    alpha_s(x^(1..t)) * alpha_s(x^(t+1..2t)), so ``p(x, ..., x)`` equals the
    acceptance probability and |p| <= 1 on every +-1 assignment.
    """
    if A.n > MAX_EXTRACT_QUBITS or A.t > MAX_EXTRACT_QUERIES:
        raise ResourceError(f"extraction limited to n <= {MAX_EXTRACT_QUBITS}, t <= {MAX_EXTRACT_QUERIES}")
    D = 2**A.n
    B = A.N + 1
    t = A.t
    if t == 0:
        const = float(np.sum(A.unitaries[0][A.accepting, 0] ** 2))
        raise DomainError(f"a 0-query algorithm has constant acceptance {const}; no blocks to build")
    amp = A.unitaries[0][:, 0].reshape(D, 1)
    qmap = A.query_index_map
    for u in A.unitaries[1:]:
        width = amp.shape[1]
        new = np.zeros((D, width, B))
        new[np.arange(D), :, qmap] = amp
        amp = np.einsum("ab,bw->aw", u, new.reshape(D, width * B))
    acc = amp[A.accepting]
    dense = acc.T @ acc
    if dense.size > 5 * 10**7:
        raise ResourceError("too many terms")
    nz = np.nonzero(np.abs(dense) > tol)
    rows, cols = nz
    left = np.stack(np.unravel_index(rows, (B,) * t), axis=1)
    right = np.stack(np.unravel_index(cols, (B,) * t), axis=1)
    idx = np.concatenate([left, right], axis=1)
    return BlockPoly([B] * (2 * t), idx, dense[nz])


def random_orthogonal(D, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((D, D)))
    return q * np.sign(np.diag(r))


def random_query_algorithm(n, t, N, rng, *, accepting=None) -> QueryAlgorithm:
    """Haar-random orthogonal layers and a random query map onto 0..N.

    Every input position 1..N is queried by at least one basis state when
    2^n >= N.
    """
    D = 2**n
    qmap = rng.integers(0, N + 1, size=D)
    if D >= N:
        slots = rng.permutation(D)[:N]
        qmap[slots] = np.arange(1, N + 1)
    if accepting is None:
        accepting = rng.permutation(D)[: max(1, D // 2)]
    return QueryAlgorithm(n, N, [random_orthogonal(D, rng) for _ in range(t + 1)], list(accepting), qmap)


def _average_terms(rng, size, width):
    vars_ = rng.choice(size, size=min(width, size), replace=False)
    signs = rng.choice([-1.0, 1.0], size=vars_.size)
    return vars_, signs / vars_.size


def random_bounded_blockpoly(k, size, rng, *, pieces=3) -> BlockPoly:
    """Random polynomial with |p| <= 1 on {-1,1}^(k*size).

    A convex combination (random signs) of pieces that are each bounded by 1:
    products of signed averages over one subset per block, and a CHSH form
    (x_a y_a + x_a y_b + x_b y_a - x_b y_b) / 2 on two blocks times averages
    on the rest.
    """
    if k < 1 or size < 1:
        raise DomainError("need k >= 1 and size >= 1")
    weights = rng.dirichlet(np.ones(pieces)) * rng.choice([-1.0, 1.0], size=pieces)
    idx_parts, coef_parts = [], []
    for w in weights:
        chsh = k >= 2 and size >= 2 and rng.random() < 0.4
        factors = []  # per block: list of (index, coefficient)
        for j in range(k):
            width = int(rng.integers(1, max(2, size // 2) + 1))
            v, c = _average_terms(rng, size, width)
            factors.append(list(zip(v, c)))
        if chsh:
            j1, j2 = sorted(rng.choice(k, size=2, replace=False))
            a = rng.choice(size, size=2, replace=False)
            b = rng.choice(size, size=2, replace=False)
            pair = [((a[0], b[0]), 0.5), ((a[0], b[1]), 0.5), ((a[1], b[0]), 0.5), ((a[1], b[1]), -0.5)]
        for combo in itertools.product(*[factors[j] for j in range(k) if not chsh or j not in (j1, j2)]):
            base = [int(i) for i, _ in combo]
            cf = w * math.prod(c for _, c in combo)
            if not chsh:
                idx_parts.append(base)
                coef_parts.append(cf)
                continue
            for (u, v), pc in pair:
                row = list(base)
                row.insert(j1, int(u))
                row.insert(j2, int(v))
                idx_parts.append(row)
                coef_parts.append(cf * pc)
    return BlockPoly([size] * k, idx_parts, coef_parts)


# -------------------------------------------------------------------- file IO


def poly_to_json(p: BlockPoly) -> dict:
    return {
        "k": p.k,
        "block_sizes": list(p.block_sizes),
        "terms": [{"idx": [int(i) for i in row], "c": float(c)} for row, c in zip(p.idx, p.coef)],
    }


def poly_from_json(obj) -> BlockPoly:
    k = int(obj["k"])
    sizes = obj["block_sizes"]
    if len(sizes) != k:
        raise ShapeError("block_sizes length differs from k")
    terms = obj.get("terms", [])
    idx = np.array([t["idx"] for t in terms], dtype=np.int64).reshape(-1, k)
    coef = np.array([t["c"] for t in terms], dtype=float)
    return BlockPoly(sizes, idx, coef)


def save_poly(p, path):
    Path(path).write_text(json.dumps(poly_to_json(p)))


def load_poly(path) -> BlockPoly:
    return poly_from_json(json.loads(Path(path).read_text()))
