"""Gaussian distinguishing harness.

Case (i): every query returns a fresh N(0,1).  Case (ii): a hidden Gaussian
vector Psi is drawn once and query v returns <Psi|v>.  The data
D = {(v_i, a_i)} give

    Delta_U = sum a_i^2,
    Delta_F = min{|Phi|^2 : <Phi|v_i> = a_i for all i} = sum b_i^2,

and the likelihood ratio mu_F / mu_U = exp((Delta_U - Delta_F) / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateQueryError, DomainError, ResourceError, ShapeError
from .hadamard import fwht, fwht_raw, num_qubits, parity_dot

__all__ = [
    "TestVectorSet",
    "make_forrelation_vectors",
    "make_kfold_vectors",
    "Oracle",
    "respond",
    "Transcript",
    "DeltaReport",
    "gs_update",
    "final_delta",
    "well_behaved_bound",
    "run_distinguisher",
    "STRATEGIES",
]

MAX_QUBITS = 14
DEPENDENCE_TOL = 1e-12


@dataclass
class TestVectorSet:
    """Standard basis (ids 0..N-1) plus psi_y = diag(c) H e_y (ids N..2N-1).

    ``c`` is all ones for the plain forrelation set.
    """

    __test__ = False  # keep pytest from collecting this class

    dim: int
    c: np.ndarray
    epsilon_bound: float

    @property
    def size(self) -> int:
        return 2 * self.dim

    def vector(self, vid: int) -> np.ndarray:
        vid = int(vid)
        if not 0 <= vid < self.size:
            raise DomainError(f"vector id {vid} out of range")
        if vid < self.dim:
            v = np.zeros(self.dim)
            v[vid] = 1.0
            return v
        e = np.zeros(self.dim)
        e[vid - self.dim] = 1.0
        return self.c * fwht(e)

    def inner_all(self, w) -> np.ndarray:
        """<v|w> for every vector v in the set, in id order."""
        w = np.asarray(w, dtype=float)
        return np.concatenate([w, fwht(self.c * w)])

    def hidden_responses(self, psi) -> np.ndarray:
        return self.inner_all(psi)

    def dense(self) -> np.ndarray:
        """All vectors as rows (size x dim)."""
        return np.stack([self.vector(i) for i in range(self.size)])


def make_forrelation_vectors(n) -> TestVectorSet:
    if n > MAX_QUBITS:
        raise ResourceError(f"n limited to {MAX_QUBITS}")
    N = 2**n
    return TestVectorSet(N, np.ones(N), 1.0 / math.sqrt(N))


def make_kfold_vectors(c) -> TestVectorSet:
    """Test vectors for k-fold instances: standard basis and
    psi_y = N^(-1/2) sum_x c_x (-1)^(x.y) |x>."""
    c = np.asarray(c, dtype=float)
    N = c.size
    n = num_qubits(N)
    if n > MAX_QUBITS:
        raise ResourceError(f"n limited to {MAX_QUBITS}")
    if abs(np.sum(c**2) - N) > 1e-9 * N:
        raise DomainError("multiplier vector must satisfy sum c^2 = N")
    cross = float(np.max(np.abs(c))) / math.sqrt(N)
    # <psi_y|psi_z> = (1/N) sum_x c_x^2 (-1)^(x.(y xor z))
    within = float(np.max(np.abs(fwht_raw(c * c)[1:]))) / N if N > 1 else 0.0
    return TestVectorSet(N, c, max(cross, within))


class Oracle:
    """One episode of case (i) or (ii); a vector may be queried only once."""

    def __init__(self, case, vectors: TestVectorSet, rng):
        if case not in ("i", "ii"):
            raise DomainError("case must be 'i' or 'ii'")
        self.case = case
        self.vectors = vectors
        self.rng = rng
        self.asked: set = set()
        self.psi = rng.standard_normal(vectors.dim) if case == "ii" else None
        self._cache = None

    def respond(self, vid) -> float:
        vid = int(vid)
        if vid in self.asked:
            raise DomainError(f"vector {vid} already queried")
        self.asked.add(vid)
        if self.case == "i":
            return float(self.rng.standard_normal())
        if self._cache is None:
            self._cache = self.vectors.hidden_responses(self.psi)
        return float(self._cache[vid])


def respond(case, v, hidden, rng) -> float:
    """Stateless single response: fresh N(0,1) or <hidden|v>."""
    if case == "i":
        return float(rng.standard_normal())
    if case == "ii":
        return float(np.dot(hidden, v))
    raise DomainError("case must be 'i' or 'ii'")


@dataclass
class DeltaReport:
    delta_u: float
    delta_f: float
    delta: float
    delta_prime: float
    log_likelihood_ratio: float
    likelihood_ratio: float
    well_behaved: bool


def well_behaved_bound(t) -> float:
    return math.sqrt(2 * math.log(100 * t)) if t >= 1 else float("inf")


class Transcript:
    """Incremental Gram-Schmidt over the queried vectors.

    For query i with response a_i:
        z_i = v_i - sum_j <v_i|w_j> w_j,  w_i = beta_i z_i,
        b_i = beta_i (a_i - sum_j <v_i|w_j> b_j),
        c_i = a_i - sum_j <v_i|w_j> c_j,   r_i = a_i - c_i.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.w = np.zeros((0, dim))
        self.overlaps: list = []  # row i: <v_i|w_j> for j < i
        self.a: list = []
        self.beta: list = []
        self.b: list = []
        self.c: list = []
        self.r: list = []

    def __len__(self):
        return len(self.a)

    def projections(self, v):
        return self.w @ v

    def predict(self, v) -> float:
        """sum_j <v|w_j> b_j: the value case (ii) forces on a dependent v and
        the conditional mean of its response otherwise."""
        return float(self.projections(v) @ np.asarray(self.b)) if len(self) else 0.0

    def update(self, v, a) -> DeltaReport:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ShapeError(f"vector must have length {self.dim}")
        proj = self.projections(v)
        z = v - proj @ self.w
        # one re-orthogonalisation pass keeps <w_i|w_j> at machine precision
        z -= (self.w @ z) @ self.w
        zz = float(z @ z)
        if zz <= DEPENDENCE_TOL:
            raise DegenerateQueryError("query is linearly dependent on earlier queries")
        beta = 1.0 / math.sqrt(zz)
        bj = np.asarray(self.b)
        cj = np.asarray(self.c)
        b = beta * (a - float(proj @ bj)) if len(self) else beta * a
        r = float(proj @ cj) if len(self) else 0.0
        self.w = np.vstack([self.w, beta * z])
        self.overlaps.append(proj)
        self.a.append(float(a))
        self.beta.append(beta)
        self.b.append(b)
        self.c.append(float(a) - r)
        self.r.append(r)
        return self.report()

    def report(self) -> DeltaReport:
        a = np.asarray(self.a)
        du = float(np.sum(a**2))
        df = float(np.sum(np.asarray(self.b) ** 2))
        dp = du - float(np.sum(np.asarray(self.c) ** 2))
        log_lr = (du - df) / 2
        wb = bool(np.all(np.abs(a) <= well_behaved_bound(len(a)))) if len(a) else True
        return DeltaReport(du, df, du - df, dp, log_lr, math.exp(min(log_lr, 700.0)), wb)


def gs_update(t: Transcript, v, a):
    """Functional form: returns (transcript, report)."""
    rep = t.update(v, a)
    return t, rep


def final_delta(vectors: TestVectorSet, ids, a, *, tol=1e-8):
    """Delta_U, Delta_F and a consistency flag for a complete transcript.

    Independent of the incremental Gram-Schmidt: splits the queries into
    standard-basis ids S and psi ids T and solves the minimum-norm problem
    for the unqueried coordinates by least squares.  Returns
    ``(delta_u, delta_f, consistent)``; an inconsistent transcript has
    probability zero under case (ii).
    """
    ids = np.asarray(ids, dtype=np.int64)
    a = np.asarray(a, dtype=float)
    N = vectors.dim
    du = float(np.sum(a**2))
    std = ids < N
    S, aS = ids[std], a[std]
    T, aT = ids[~std] - N, a[~std]
    known = np.zeros(N)
    known[S] = aS
    mask = np.ones(N, dtype=bool)
    mask[S] = False
    free = np.flatnonzero(mask)
    if T.size == 0:
        return du, float(np.sum(aS**2)), True
    if free.size == 0:
        pred = fwht(vectors.c * known)[T]
        resid = float(np.max(np.abs(pred - aT)))
        return du, float(np.sum(aS**2)), resid <= tol * (1 + float(np.max(np.abs(aT))))
    # <psi_y|Phi> = N^(-1/2) sum_x c_x (-1)^(x.y) Phi_x
    sign = 1.0 - 2.0 * parity_dot(T[:, None], free[None, :])
    M = sign * vectors.c[free][None, :] / math.sqrt(N)
    rhs = aT - fwht(vectors.c * known)[T]
    u, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    resid = float(np.max(np.abs(M @ u - rhs)))
    consistent = resid <= tol * (1 + float(np.max(np.abs(rhs))))
    return du, float(np.sum(aS**2) + np.sum(u**2)), consistent


STRATEGIES = ("random-order", "alternating", "likelihood-greedy")


def _schedule(strategy, vectors, t, rng):
    N = vectors.dim
    if strategy == "random-order":
        return list(rng.permutation(vectors.size)[:t])
    if strategy == "alternating":
        std = rng.permutation(N)
        had = rng.permutation(N) + N
        out = np.empty(2 * N, dtype=np.int64)
        out[0::2], out[1::2] = std, had
        return list(out[:t])
    raise DomainError(f"unknown strategy {strategy!r}")


def _greedy_episode(oracle, vectors, t, rng):
    """Query the unqueried vector with the largest |predicted response|."""
    tr = Transcript(vectors.dim)
    asked = np.zeros(vectors.size, dtype=bool)
    score = np.zeros(vectors.size)
    consistent = True
    ids, resp = [], []
    for step in range(t):
        if step == 0:
            vid = int(rng.integers(vectors.size))
        else:
            cand = np.where(asked, -1.0, np.abs(score))
            best = np.flatnonzero(cand == cand.max())
            vid = int(rng.choice(best))
        asked[vid] = True
        a = oracle.respond(vid)
        ids.append(vid)
        resp.append(a)
        v = vectors.vector(vid)
        try:
            tr.update(v, a)
            # predicted response of every vector is sum_j <v|w_j> b_j
            score += vectors.inner_all(tr.w[-1]) * tr.b[-1]
        except DegenerateQueryError:
            if abs(tr.predict(v) - a) > 1e-8 * (1 + abs(a)):
                consistent = False
    return ids, resp, tr, consistent


@dataclass
class BiasReport:
    strategy: str
    t: int
    trials: int
    bias: float
    p_ii_given_ii: float
    p_ii_given_i: float
    ci95: tuple
    rows: list = field(default_factory=list)


def run_distinguisher(strategy, vectors: TestVectorSet, t: int, trials: int, rng, *, case_mix=0.5) -> BiasReport:
    """Guess case (ii) iff the log likelihood ratio (Delta_U - Delta_F)/2 is
    positive; a transcript inconsistent with any single Psi means case (i).

    Trial cases alternate deterministically when case_mix = 0.5, otherwise
    each trial is case (ii) with probability case_mix.
    """
    if strategy not in STRATEGIES:
        raise DomainError(f"strategy must be one of {STRATEGIES}")
    if not 1 <= t <= vectors.size:
        raise DomainError(f"budget t must lie in 1..{vectors.size}")
    rows = []
    counts = {"i": [0, 0], "ii": [0, 0]}  # [trials, guessed ii]
    for trial in range(trials):
        if case_mix == 0.5:
            case = "ii" if trial % 2 else "i"
        else:
            case = "ii" if rng.random() < case_mix else "i"
        oracle = Oracle(case, vectors, rng)
        if strategy == "likelihood-greedy":
            ids, resp, tr, consistent = _greedy_episode(oracle, vectors, t, rng)
            rep = tr.report()
            # a consistent dependent query adds a^2 to Delta_U but leaves the
            # minimum-norm point, hence Delta_F, unchanged
            du, df = float(np.sum(np.square(resp))), rep.delta_f
        else:
            ids = _schedule(strategy, vectors, t, rng)
            resp = [oracle.respond(v) for v in ids]
            du, df, consistent = final_delta(vectors, ids, resp)
        log_lr = (du - df) / 2 if consistent else -math.inf
        guess = "ii" if log_lr > 0 else "i"
        counts[case][0] += 1
        counts[case][1] += guess == "ii"
        lr = math.exp(min(log_lr, 700.0)) if consistent else 0.0
        rows.append((trial, case, t, du, df if consistent else math.inf, lr, guess))
    p2 = counts["ii"][1] / max(counts["ii"][0], 1)
    p1 = counts["i"][1] / max(counts["i"][0], 1)
    se = math.sqrt(p2 * (1 - p2) / max(counts["ii"][0], 1) + p1 * (1 - p1) / max(counts["i"][0], 1))
    bias = abs(p2 - p1)
    return BiasReport(strategy, t, trials, bias, p2, p1, (max(0.0, bias - 1.96 * se), min(1.0, bias + 1.96 * se)), rows)
