"""Classical sublinear estimators.

* ``estimate_blockpoly`` - random-restriction estimator for balanced
  block-multilinear polynomials (warmup and main modes).
* ``simulate_quantum_classically`` - extraction, balancing and estimation of
  a t-query algorithm's acceptance probability.
* ``estimate_quadratic`` - general bounded quadratics via influence splitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blockpoly import (
    BlockPoly,
    QueryAlgorithm,
    acceptance_probability,
    balance,
    from_query_algorithm,
    is_balanced,
)
from .errors import ConvergenceError, DomainError, PreconditionError, ShapeError

__all__ = [
    "EstimateReport",
    "MultilinearPoly",
    "estimate_blockpoly",
    "simulate_quantum_classically",
    "fourier_stats",
    "quadratic_from_matrix",
    "QuadraticSplit",
    "split_quadratic",
    "estimate_quadratic",
    "random_bounded_quadratic",
]


@dataclass
class EstimateReport:
    estimate: float
    queries_used: int
    repetitions: int
    per_repetition_values: np.ndarray
    queries_per_repetition: np.ndarray | None = None
    info: dict = field(default_factory=dict)


# ------------------------------------------------------- block-multilinear


def _default_positions(p: BlockPoly):
    """Every (block, index) pair is its own input position."""
    out, base = [], 0
    for b in p.block_sizes:
        out.append(np.arange(base, base + b))
        base += b
    return out


_MASK_BUDGET = 2 * 10**7


def estimate_blockpoly(
    p: BlockPoly,
    x,
    eps: float,
    rng,
    mode: str = "main",
    *,
    repetitions: int = 16,
    mark_prob: float | None = None,
    positions=None,
    delta: float | None = None,
    audit: bool = True,
) -> EstimateReport:
    """Estimate p(x) from a random subset of the variables.

    Main mode marks each variable independently with probability
    q = n^(-1/k) (n the common block size); the single-sample value P sums
    ``c * prod x`` over terms whose k variables are all marked, so
    E[P] = q^k p(x) and the estimate is the mean of P / q^k.  Warmup mode marks
    whole terms independently with probability 1/n.

    ``positions[j][i]`` names the input position read for variable i of
    block j; negative entries are free (constants such as the dummy
    variable).  Queries count distinct non-negative positions behind the
    variables of selected terms.  ``delta`` is the balance level to audit
    (default eps^2 / n).
    """
    if mode not in ("main", "warmup"):
        raise DomainError(f"unknown mode {mode!r}")
    if eps <= 0:
        raise DomainError("eps must be positive")
    if len(set(p.block_sizes)) != 1:
        raise ShapeError("blocks must share a common size (pad with balance)")
    n, k = p.block_sizes[0], p.k
    xs = [np.asarray(v, dtype=float) for v in x]
    if len(xs) != k or any(v.shape != (n,) for v in xs):
        raise ShapeError(f"x must be {k} arrays of length {n}")
    if audit:
        level = eps**2 / n if delta is None else delta
        if not is_balanced(p, level):
            raise PreconditionError(f"polynomial is not balanced at delta={level:.3g}")
    if positions is None:
        positions = _default_positions(p)
    positions = [np.asarray(pos, dtype=np.int64) for pos in positions]

    values = p.coef.copy()
    for j in range(k):
        values = values * xs[j][p.idx[:, j]]
    T = p.num_terms
    R = int(repetitions)

    if mode == "main":
        q = n ** (-1.0 / k) if mark_prob is None else float(mark_prob)
        scale = q ** (-k)
    else:
        q = 1.0 / n if mark_prob is None else float(mark_prob)
        scale = 1.0 / q

    term_pos = np.stack([positions[j][p.idx[:, j]] for j in range(k)], axis=1) if T else np.zeros((0, k), int)
    per_rep = np.zeros(R)
    per_rep_q = np.zeros(R, dtype=np.int64)
    seen_all = set()
    # repetitions are processed in chunks so the (reps x terms) mask stays small
    chunk = max(1, min(R, _MASK_BUDGET // max(T, 1)))
    for r0 in range(0, R, chunk):
        m = min(chunk, R - r0)
        if mode == "main":
            active = np.ones((m, T), dtype=bool)
            for j in range(k):
                marks = rng.random((m, n)) < q
                active &= marks[:, p.idx[:, j]]
        else:
            active = rng.random((m, T)) < q
        per_rep[r0 : r0 + m] = (active * values).sum(axis=1) * scale
        for r in range(m):
            sel = term_pos[active[r]].reshape(-1)
            sel = np.unique(sel[sel >= 0])
            per_rep_q[r0 + r] = sel.size
            seen_all.update(sel.tolist())
    return EstimateReport(
        estimate=float(per_rep.mean()) if R else 0.0,
        queries_used=len(seen_all),
        repetitions=R,
        per_repetition_values=per_rep,
        queries_per_repetition=per_rep_q,
        info={"mode": mode, "mark_prob": q, "block_size": n},
    )


def simulate_quantum_classically(
    A: QueryAlgorithm,
    X,
    eps: float,
    rng,
    *,
    mode: str = "main",
    repetitions: int = 16,
) -> EstimateReport:
    """Estimate Pr[A accepts X] by sampling its block-multilinear polynomial.

    The all-dummy term is a constant and is added exactly.  The rest is
    balanced at delta = eps^2 / N, padded, and passed to estimate_blockpoly
    with every block reading a copy of X.
    """
    X = np.asarray(X, dtype=float)
    if X.shape != (A.N,):
        raise ShapeError(f"X must have length {A.N}")
    p = from_query_algorithm(A)
    const_mask = np.all(p.idx == 0, axis=1)
    const = float(p.coef[const_mask].sum())
    rest = BlockPoly(p.block_sizes, p.idx[~const_mask], p.coef[~const_mask], canonical=True)
    delta = eps**2 / A.N
    info = {"constant": const, "delta": delta, "terms_before": p.num_terms}
    if rest.num_terms == 0:
        return EstimateReport(const, 0, 0, np.zeros(0), np.zeros(0, dtype=np.int64), info)
    # p is bounded, so the sampled boundedness check is skipped here
    bal, trace = balance(rest, delta, check_bounded=False)
    full = np.concatenate([[1.0], X])
    xs, positions = [], []
    for origin in trace.origin:
        safe = np.where(origin >= 0, origin, 0)
        xs.append(full[safe])
        # variable v reads X[v-1]; the dummy (v = 0) and padding are free
        positions.append(np.where(origin >= 1, origin - 1, -1))
    rep = estimate_blockpoly(
        bal, xs, eps, rng, mode, repetitions=repetitions, positions=positions, delta=delta
    )
    rep.estimate += const
    rep.per_repetition_values = rep.per_repetition_values + const
    info.update(
        new_variables=trace.new_variables,
        block_size=bal.block_sizes[0],
        terms_after=bal.num_terms,
        truth=acceptance_probability(A, X),
    )
    rep.info.update(info)
    return rep


# ------------------------------------------------------------ general polys


@dataclass
class MultilinearPoly:
    """Sparse multilinear polynomial over N +-1 variables.

    ``terms`` maps sorted variable tuples to coefficients; repeated
    variables in an input key cancel in pairs since x_i^2 = 1.
    """

    N: int
    terms: dict

    def __post_init__(self):
        clean: dict = {}
        for key, c in dict(self.terms).items():
            counts: dict = {}
            for v in key:
                v = int(v)
                if not 0 <= v < self.N:
                    raise ShapeError(f"variable {v} out of range")
                counts[v] = counts.get(v, 0) ^ 1
            red = tuple(sorted(v for v, odd in counts.items() if odd))
            clean[red] = clean.get(red, 0.0) + float(c)
        self.terms = {S: c for S, c in clean.items() if c != 0}

    @property
    def degree(self) -> int:
        return max((len(S) for S in self.terms), default=0)

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = 0.0
        for S, c in self.terms.items():
            total += c * np.prod(x[list(S)]) if S else c
        return float(total)

    def parts(self):
        """(constant, linear vector, pair index array, pair coefficients)."""
        const = self.terms.get((), 0.0)
        lin = np.zeros(self.N)
        pairs, coefs = [], []
        for S, c in self.terms.items():
            if len(S) == 1:
                lin[S[0]] = c
            elif len(S) == 2:
                pairs.append(S)
                coefs.append(c)
            elif len(S) > 2:
                raise DomainError("degree above 2")
        return const, lin, np.array(pairs, dtype=np.int64).reshape(-1, 2), np.array(coefs, dtype=float)


def quadratic_from_matrix(A, b=None, c=0.0) -> MultilinearPoly:
    """p(x) = c + b.x + x^T A x; the diagonal of A folds into the constant."""
    A = np.asarray(A, dtype=float)
    N = A.shape[0]
    S = A + A.T
    terms = {(): c + float(np.trace(A))}
    if b is not None:
        for i, v in enumerate(np.asarray(b, dtype=float)):
            terms[(i,)] = v
    iu, ju = np.triu_indices(N, 1)
    for i, j, v in zip(iu, ju, S[iu, ju]):
        if v != 0:
            terms[(int(i), int(j))] = float(v)
    return MultilinearPoly(N, terms)


def fourier_stats(p: MultilinearPoly) -> dict:
    """Exact variance and influences from the coefficient table."""
    inf = np.zeros(p.N)
    var = 0.0
    for S, c in p.terms.items():
        if S:
            var += c * c
            for i in S:
                inf[i] += c * c
    return {"variance": var, "influences": inf}


@dataclass
class QuadraticSplit:
    """Quadratic form after influence splitting.

    ``origin[v]`` is the original variable behind split variable v.
    """

    pairs: np.ndarray
    coefs: np.ndarray
    origin: np.ndarray
    variance: float
    V: float
    splits_a: int
    splits_b: int
    var_threshold: float
    v_threshold: float
    history: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.origin.size


def split_quadratic(pairs, coefs, N, *, eps=1.0, C=4.0, max_iter=None, record=False) -> QuadraticSplit:
    """Split argmax-influence variables until the two halting thresholds hold.

    (a) while Var >= C eps^2 / N split the variable of largest influence;
    (b) while V = sum_i I_i >= C eps^2 log(N) / N split the variable of
        largest I_i = (sum_{j != i} a_ij)^2 with a_ij = c_ij / 2.
    Each split replaces x_i by (x_i + x_i') / 2.  Ties go to the lowest index.
    """
    max_iter = 50 * N if max_iter is None else max_iter
    var_thr = C * eps**2 / N
    v_thr = C * eps**2 * math.log(N) / N if N > 1 else 0.0
    nbrs: list[dict] = [dict() for _ in range(N)]
    for (i, j), c in zip(np.asarray(pairs).reshape(-1, 2), np.asarray(coefs)):
        i, j = int(i), int(j)
        nbrs[i][j] = nbrs[i].get(j, 0.0) + c
        nbrs[j][i] = nbrs[j].get(i, 0.0) + c
    origin = list(range(N))
    cap = N + max_iter + 1
    inf = np.zeros(cap)
    rows = np.zeros(cap)
    for i in range(N):
        vals = np.fromiter(nbrs[i].values(), float, len(nbrs[i]))
        inf[i] = np.sum(vals**2)
        rows[i] = vals.sum()
    var = float(inf[:N].sum() / 2)
    hist = {"variance": [var], "V": [float(np.sum((rows[:N] / 2) ** 2))]}

    def split(i):
        nonlocal var
        new = len(origin)
        origin.append(origin[i])
        half = {j: c / 2 for j, c in nbrs[i].items()}
        nbrs[i] = half
        nbrs.append(dict(half))
        for j, c in half.items():
            nbrs[j][i] = c
            nbrs[j][new] = c
            inf[j] -= 2 * c * c
        var -= inf[i] / 2
        inf[i] /= 4
        inf[new] = inf[i]
        rows[i] /= 2
        rows[new] = rows[i]

    it = 0
    sa = sb = 0
    while var >= var_thr:
        if it >= max_iter:
            raise ConvergenceError(f"variance loop hit the cap of {max_iter} splits (Var={var:.3g})")
        split(int(np.argmax(inf[: len(origin)])))
        it += 1
        sa += 1
        if record:
            hist["variance"].append(var)
    V = float(np.sum((rows[: len(origin)] / 2) ** 2))
    while V >= v_thr:
        if it >= max_iter:
            raise ConvergenceError(f"row-sum loop hit the cap of {max_iter} splits (V={V:.3g})")
        I = (rows[: len(origin)] / 2) ** 2
        split(int(np.argmax(I)))
        it += 1
        sb += 1
        V = float(np.sum((rows[: len(origin)] / 2) ** 2))
        if record:
            hist["V"].append(V)
    out_pairs = [(i, j) for i, d in enumerate(nbrs) for j in d if i < j]
    out_coefs = [nbrs[i][j] for i, j in out_pairs]
    # recompute from scratch so the report does not carry drift
    cf = np.array(out_coefs, dtype=float)
    pr = np.array(out_pairs, dtype=np.int64).reshape(-1, 2)
    n = len(origin)
    rs = np.bincount(pr[:, 0], cf, n) + np.bincount(pr[:, 1], cf, n) if cf.size else np.zeros(n)
    return QuadraticSplit(
        pairs=pr,
        coefs=cf,
        origin=np.array(origin, dtype=np.int64),
        variance=float(np.sum(cf**2)),
        V=float(np.sum((rs / 2) ** 2)),
        splits_a=sa,
        splits_b=sb,
        var_threshold=var_thr,
        v_threshold=v_thr,
        history=hist,
    )


def estimate_quadratic(
    p: MultilinearPoly,
    x,
    eps: float,
    rng,
    *,
    C: float = 4.0,
    repetitions: int = 16,
    linear_samples: int | None = None,
    mark_prob: float | None = None,
) -> EstimateReport:
    """Estimate a bounded quadratic at x, reading few coordinates of x.

    The constant is exact.  The linear part sum a_i x_i is estimated by
    importance sampling indices with probability |a_i| / sum |a_j|.  The
    pair part is split (see ``split_quadratic``), then each repetition marks
    split variables with probability 1/sqrt(n) and rescales the marked pair
    sum by n.  ``mark_prob=1`` reads everything and is exact.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (p.N,):
        raise ShapeError(f"x must have length {p.N}")
    const, lin, pairs, coefs = p.parts()
    seen: set = set()

    # linear stratum
    l1 = float(np.sum(np.abs(lin)))
    if mark_prob is not None and mark_prob >= 1:
        lin_est = float(lin @ x)
        seen.update(np.flatnonzero(lin).tolist())
        s = 0
    elif l1 > 0:
        s = int(math.ceil(4 / eps**2)) if linear_samples is None else int(linear_samples)
        idx = rng.choice(p.N, size=s, p=np.abs(lin) / l1)
        lin_est = l1 * float(np.mean(np.sign(lin[idx]) * x[idx]))
        seen.update(np.unique(idx).tolist())
    else:
        lin_est, s = 0.0, 0

    # pair stratum
    sp = split_quadratic(pairs, coefs, p.N, eps=eps, C=C)
    n = sp.n
    q = 1.0 / math.sqrt(n) if mark_prob is None else min(float(mark_prob), 1.0)
    vals = sp.coefs * x[sp.origin[sp.pairs[:, 0]]] * x[sp.origin[sp.pairs[:, 1]]] if sp.coefs.size else np.zeros(0)
    R = int(repetitions)
    per_rep = np.zeros(R)
    for r in range(R):
        marks = rng.random(n) < q
        act = marks[sp.pairs[:, 0]] & marks[sp.pairs[:, 1]] if vals.size else np.zeros(0, bool)
        per_rep[r] = vals[act].sum() / q**2
        if act.any():
            seen.update(np.unique(sp.origin[sp.pairs[act].reshape(-1)]).tolist())
    quad_est = float(per_rep.mean()) if R else 0.0
    return EstimateReport(
        estimate=const + lin_est + quad_est,
        queries_used=len(seen),
        repetitions=R,
        per_repetition_values=const + lin_est + per_rep,
        info={
            "constant": const,
            "linear_estimate": lin_est,
            "linear_samples": s,
            "quadratic_estimate": quad_est,
            "split_variables": n,
            "variance_after": sp.variance,
            "V_after": sp.V,
            "var_threshold": sp.var_threshold,
            "v_threshold": sp.v_threshold,
            "splits": (sp.splits_a, sp.splits_b),
        },
    )


def random_bounded_quadratic(N, rng, *, pieces=4) -> MultilinearPoly:
    """Convex combination of quadratics that are each bounded by 1.

    Pieces: product of two disjoint averages, square of an average, a star
    x_c * avg(B), a single product x_i x_j, and a linear form with l1 norm 1.
    Each piece gets a random sign and random variable flips; convexity
    keeps the sum in [-1, 1].
    """
    w = rng.dirichlet(np.ones(pieces))
    flip = np.where(rng.random(N) < 0.5, -1.0, 1.0)
    terms: dict = {}

    def add(key, c):
        key = tuple(sorted(key))
        sgn = np.prod(flip[list(key)]) if key else 1.0
        terms[key] = terms.get(key, 0.0) + c * sgn

    for wt in w:
        kind = rng.integers(0, 5)
        sgn = rng.choice([-1.0, 1.0])
        c = sgn * wt
        if kind == 0:
            size = rng.integers(2, N // 2 + 1)
            perm = rng.permutation(N)
            a_set = perm[: size // 2 + 1]
            b_set = perm[size // 2 + 1 : size + 1]
            if b_set.size == 0:
                b_set = perm[-1:]
            for i in a_set:
                for j in b_set:
                    add((i, j), c / (a_set.size * b_set.size))
        elif kind == 1:
            a_set = rng.permutation(N)[: rng.integers(2, N + 1)]
            m = a_set.size
            add((), c / m)
            for ii in range(m):
                for jj in range(ii + 1, m):
                    add((a_set[ii], a_set[jj]), 2 * c / m**2)
        elif kind == 2:
            perm = rng.permutation(N)
            centre, b_set = perm[0], perm[1 : rng.integers(2, N + 1)]
            for j in b_set:
                add((centre, j), c / b_set.size)
        elif kind == 3:
            i, j = rng.choice(N, size=2, replace=False)
            add((i, j), c)
        else:
            a = rng.standard_normal(N) * (rng.random(N) < 0.3)
            if not a.any():
                a[rng.integers(N)] = 1.0
            a /= np.abs(a).sum()
            for i in np.flatnonzero(a):
                add((i,), c * a[i])
    return MultilinearPoly(N, terms)
