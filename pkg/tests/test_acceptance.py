"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Thresholds are the stated ones. Where a criterion has both a nominal and
an exact reading, both lines are printed and the gating one is marked.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from forrelab.blockpoly import (
    QueryAlgorithm,
    acceptance_probability,
    all_lambdas,
    balance,
    evaluate,
    from_query_algorithm,
    random_bounded_blockpoly,
    random_query_algorithm,
)
from forrelab.compiler import (
    compile_gatewise,
    compile_layers,
    gadget_matrix_exact,
    random_circuit,
    verify_compilation,
    verify_statevector,
)
from forrelab.estimators import estimate_blockpoly, estimate_quadratic, random_bounded_quadratic, simulate_quantum_classically
from forrelab.fourier_sampling import exact_distribution, relation_trials
from forrelab.gaussian import Oracle, Transcript, final_delta, make_forrelation_vectors, run_distinguisher
from forrelab.instances import (
    corrupt,
    corruption_count,
    random_boolean,
    sample_boolean_tuple,
    sample_kfold_hybrid,
    sample_real_pair,
    sign_round,
)
from forrelab.phi import kfold_state, phi, phi_bruteforce
from forrelab.qquery import decide, decide_probability, halfk_accept_probability

SEED = 7


def report(num, ok, detail, *, gate=True):
    status = ("PASS" if ok else "FAIL") if gate else "INFO"
    line = f"criterion {num}: {status} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    if gate:
        assert ok, line


def test_c01_phi_oracle_equivalence():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for n in (1, 2, 3):
        for k in (1, 2, 3):
            for _ in range(200):
                t = sample_boolean_tuple(n, k, rng)
                worst = max(worst, abs(phi(t).phi - phi_bruteforce(t)))
    dt = time.perf_counter() - start
    report(1, worst <= 1e-12 and dt < 10, f"max |phi - brute| = {worst:.2e}, {dt:.1f}s")


def test_c02_unitarity():
    rng = np.random.default_rng(SEED)
    worst_norm, worst_phi = 0.0, 0.0
    for _ in range(500):
        n, k = int(rng.integers(1, 11)), int(rng.integers(1, 5))
        v = kfold_state(sample_boolean_tuple(n, k, rng))
        worst_norm = max(worst_norm, abs(np.sum(v**2) - 1))
        worst_phi = max(worst_phi, abs(v[0]))
    report(2, worst_norm <= 1e-9 and worst_phi <= 1, f"max |sum Phi_z^2 - 1| = {worst_norm:.2e}, max |Phi| = {worst_phi:.3f}")


def test_c03_rounding_constant():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    pairs = [phi([sign_round(f) for f in sample_real_pair(10, "forrelated", rng).functions]).phi for _ in range(2000)]
    hyb = [phi([sign_round(f) for f in sample_kfold_hybrid(10, 3, "forrelated", rng).functions]).phi for _ in range(2000)]
    dt = time.perf_counter() - start
    m2, m3 = float(np.mean(pairs)), float(np.mean(hyb))
    ok = 0.60 <= m2 <= 0.67 and 0.58 <= m3 <= 0.68 and dt < 60
    report(3, ok, f"mean k=2 {m2:.4f} (2/pi = {2 / math.pi:.4f}), mean k=3 {m3:.4f}, {dt:.1f}s")


def test_c04_uniform_moment():
    rng = np.random.default_rng(SEED)
    N = 256
    f = 1.0 - 2.0 * rng.integers(0, 2, size=(5000, N))
    g = 1.0 - 2.0 * rng.integers(0, 2, size=(5000, N))
    vals = phi([f, g]).phi
    m = float(np.mean(vals**2)) * N
    report(4, 0.7 <= m <= 1.3, f"N * mean Phi^2 = {m:.4f}")


def test_c05_quantum_thresholds():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for k in range(1, 7):
        for _ in range(50):
            t = sample_boolean_tuple(int(rng.integers(1, 6)), k, rng)
            ph = phi(t).phi
            worst = max(worst, abs(halfk_accept_probability(t) - (1 + ph) / 2))
            worst = max(worst, abs(halfk_accept_probability(t, controlled=True) - (1 + ph) / 2))
    yes = decide_probability(Fraction(3, 5))
    no = max(decide_probability(Fraction(1, 100)), decide_probability(Fraction(-1, 100)))
    # sampled route: decide() frequencies track the closed form
    t = sample_boolean_tuple(3, 4, rng)
    freq = np.mean([decide(t, rng).decision == "accept" for _ in range(20000)])
    se = math.sqrt(0.25 / 20000)
    ok = worst <= 1e-10 and yes == Fraction(3, 5) and no < Fraction(2, 5)
    ok &= abs(freq - decide_probability(phi(t).phi)) <= 4 * se
    report(5, ok, f"max residual {worst:.2e}, decide(3/5) = {yes}, decide(1/100) = {float(no):.5f}, sampled freq ok")


def test_c06_gadget_and_compiler():
    start = time.perf_counter()
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    exact = np.array_equal(gadget_matrix_exact(), swap)
    rng = np.random.default_rng(SEED)
    worst, k_ok = 0.0, True
    for _ in range(100):
        c = random_circuit(int(rng.integers(1, 5)), int(rng.integers(1, 7)), rng)
        g, lay = compile_gatewise(c), compile_layers(c)
        worst = max(worst, verify_compilation(c, g), verify_compilation(c, lay), verify_statevector(c, lay))
        k_ok &= lay.k <= 2 * c.depth + 1
    dt = time.perf_counter() - start
    report(6, exact and worst <= 1e-9 and k_ok and dt < 30, f"gadget exact {exact}, max residual {worst:.2e}, k <= 2d+1 {k_ok}, {dt:.1f}s")


def test_c07_extraction():
    rng = np.random.default_rng(SEED)
    worst, bound = 0.0, 0.0
    for n, t, N in [(1, 1, 2), (2, 1, 3), (2, 2, 3), (3, 1, 4), (3, 2, 3), (3, 2, 4)]:
        A = random_query_algorithm(n, t, N, rng)
        p = from_query_algorithm(A)
        for X in itertools.product([-1.0, 1.0], repeat=N):
            X = np.array(X)
            full = np.concatenate([[1.0], X])
            worst = max(worst, abs(evaluate(p, [full] * p.k) - acceptance_probability(A, X)))
        xs = [np.concatenate([np.ones((10000, 1)), rng.choice([-1.0, 1.0], (10000, N))], axis=1) for _ in range(p.k)]
        bound = max(bound, float(np.max(np.abs(evaluate(p, xs)))))
    report(7, worst <= 1e-10 and bound <= 1 + 1e-9, f"max |p(X..X) - accept| = {worst:.2e}, max |p| mismatched = {bound:.6f}")


def test_c08_balancing():
    rng = np.random.default_rng(SEED)
    N = 8
    ok, worst_ratio, worst_vars = True, 0.0, 0.0
    for k in (2, 3, 4):
        for i in range(50):
            eps = (0.5, 0.3)[i % 2]
            delta = eps**2 / N
            p = random_bounded_blockpoly(k, N, rng)
            q, tr = balance(p, delta, rng=rng)
            lam = max(all_lambdas(q).values())
            worst_ratio = max(worst_ratio, lam / delta)
            worst_vars = max(worst_vars, tr.new_variables / (2**k / delta))
            ok &= lam <= delta * (1 + 1e-9) and tr.new_variables <= 2**k / delta
    report(8, ok, f"max Lambda_S / delta = {worst_ratio:.4f}, max new vars / (2^k/delta) = {worst_vars:.4f}")


class _Marks:
    def __init__(self, patterns):
        self.patterns = list(patterns)

    def random(self, shape):
        return np.asarray(self.patterns.pop(0), dtype=float).reshape(shape)


def test_c09_unbiasedness_and_variance():
    rng = np.random.default_rng(SEED)
    # enumeration at N = 4, k = 2: q = 1/2 and all 2^8 mark patterns are equally likely
    p = random_bounded_blockpoly(2, 4, rng)
    x = [rng.choice([-1.0, 1.0], 4) for _ in range(2)]
    vals = []
    for bits in itertools.product([0.0, 1.0], repeat=8):
        m = np.array(bits).reshape(2, 4)
        vals.append(estimate_blockpoly(p, x, 1.0, _Marks([m[0], m[1]]), repetitions=1, audit=False).estimate / 4)
    bias = abs(np.mean(vals) - evaluate(p, x) / 4)
    # variance at N = 256
    N, eps = 256, 0.5
    delta = eps**2 / N
    worst = 0.0
    for _ in range(5):
        q, _ = balance(random_bounded_blockpoly(2, N, rng, pieces=2), delta, rng=rng)
        n = q.block_sizes[0]
        xs = [rng.choice([-1.0, 1.0], n) for _ in range(2)]
        rep = estimate_blockpoly(q, xs, eps, rng, repetitions=1000, delta=delta)
        worst = max(worst, np.var(rep.per_repetition_values / n) / (delta / n))
    report(9, bias <= 1e-14 and worst <= 10, f"enumeration bias {bias:.1e}, max Var / (delta/n) = {worst:.3f} (limit 10)")


def test_c10_end_to_end(rng):
    rng = np.random.default_rng(SEED)
    eps = 0.2
    hits, max_q = {}, {}
    for N in (8, 16, 32, 64):
        nq = min(4, int(math.log2(N)))
        h, mq = [], 0
        for _ in range(50):
            A = random_query_algorithm(nq, 1, N, rng)
            X = 1.0 - 2.0 * rng.integers(0, 2, size=N)
            rep = simulate_quantum_classically(A, X, eps, rng)
            h.append(abs(rep.estimate - rep.info["truth"]) <= eps)
            mq = max(mq, rep.queries_used)
        hits[N], max_q[N] = float(np.mean(h)), mq
    total = float(np.mean(list(hits.values())))
    ok = total >= 2 / 3 and all(max_q[N] < N for N in (32, 64))
    detail = ", ".join(f"N={N}: {hits[N]:.2f} ok, max queries {max_q[N]}" for N in hits)
    report(10, ok, f"success {total:.3f} over 200 runs; {detail}")
    # every position relevant (n = log2 N): the sampled read set is close to N
    A = random_query_algorithm(4, 1, 16, rng)
    reads = [simulate_quantum_classically(A, 1.0 - 2.0 * rng.integers(0, 2, size=16), eps, rng).queries_used for _ in range(10)]
    report("10/dense", True, f"n = log2 N = 4, mean queries {np.mean(reads):.1f} of N = 16", gate=False)


def test_c11_quadratic():
    rng = np.random.default_rng(SEED)
    N, eps, C = 256, 0.1, 4.0
    hits, bounds_ok = [], True
    for _ in range(50):
        p = random_bounded_quadratic(N, rng)
        x = rng.choice([-1.0, 1.0], N)
        rep = estimate_quadratic(p, x, eps, rng, C=C)
        hits.append(abs(rep.estimate - p.evaluate(x)) <= eps)
        info = rep.info
        bounds_ok &= info["variance_after"] <= C / N and info["V_after"] <= C * math.log(N) / N
        bounds_ok &= info["variance_after"] < info["var_threshold"] and info["V_after"] < info["v_threshold"]
    rate = float(np.mean(hits))
    report(11, rate >= 2 / 3 and bounds_ok, f"success {rate:.2f} at eps=0.1, split bounds hold {bounds_ok}")


def test_c12_gram_schmidt():
    rng = np.random.default_rng(SEED)
    V = make_forrelation_vectors(6)
    worst_inc = worst_ls = 0.0
    for _ in range(500):
        ids = rng.permutation(V.size)[:20]
        a = rng.standard_normal(20)
        M = np.stack([V.vector(i) for i in ids])
        ref = float(a @ np.linalg.solve(M @ M.T, a))
        tr = Transcript(64)
        for i, x in zip(ids, a):
            rep = tr.update(V.vector(i), x)
        _, df, _ = final_delta(V, ids, a)
        worst_inc = max(worst_inc, abs(rep.delta_f - ref))
        worst_ls = max(worst_ls, abs(df - ref))
    env_ok = True
    for n in (8, 10, 12):
        Vn = make_forrelation_vectors(n)
        N = 2**n
        eps = 1 / math.sqrt(N)
        for _ in range(20):
            t = int(rng.integers(1, max(1, int(0.1 * math.sqrt(N))) + 1))
            tr = Transcript(N)
            for i in rng.permutation(Vn.size)[:t]:
                tr.update(Vn.vector(i), 0.0)
            env_ok &= max((np.abs(o).max(initial=0) for o in tr.overlaps), default=0) <= 1.2 * eps
            env_ok &= max(tr.beta) <= 1 + 0.2 * eps
    ok = worst_inc <= 1e-8 and worst_ls <= 1e-8 and env_ok
    report(12, ok, f"Delta_F vs Gram oracle: incremental {worst_inc:.1e}, least squares {worst_ls:.1e}; envelopes hold {env_ok}")


def test_c13_bias_separation():
    V = make_forrelation_vectors(10)
    low = run_distinguisher("random-order", V, 8, 1000, np.random.default_rng(SEED))
    high = run_distinguisher("random-order", V, V.size, 1000, np.random.default_rng(SEED + 1))
    ok = low.bias <= 0.15 and high.bias >= 0.95
    report(13, ok, f"bias {low.bias:.3f} at t=8, {high.bias:.3f} at t=2N={V.size}")


def test_c14_fourier_sampling():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    norm = max(abs(exact_distribution(random_boolean(10, rng)).sum() - 1) for _ in range(100))
    q = float(relation_trials(10, 1.0, "quantum", 100000, rng).mean())
    z = float(relation_trials(10, 1.0, "zero_query", 100000, rng).mean())
    dt = time.perf_counter() - start
    ok = norm <= 1e-12 and abs(q - 0.80) <= 0.02 and abs(z - 0.317) <= 0.02 and dt < 60
    report(14, ok, f"sum D_f - 1 = {norm:.1e}, quantum {q:.4f}, zero-query {z:.4f}, {dt:.1f}s")


def test_c15_corruption():
    n, N, trials = 8, 256, 5000
    rng = np.random.default_rng(SEED)
    worst_nom, worst_exact, lines = 0.0, 0.0, []
    for k in (2, 3):
        base = sample_real_pair(n, "forrelated", rng) if k == 2 else sample_kfold_hybrid(n, k, "forrelated", rng)
        base = [sign_round(f) for f in base.functions]
        phi_f = phi(base).phi
        for eps in (0.05, 0.1, 0.2):
            vals = np.array([phi(corrupt(base, eps, rng)).phi for _ in range(trials)])
            m, se = vals.mean(), vals.std(ddof=1) / math.sqrt(trials)
            z_nom = (m - (1 - eps) ** k * phi_f) / se
            z_exact = (m - (1 - corruption_count(eps, N) / N) ** k * phi_f) / se
            worst_nom = max(worst_nom, abs(z_nom))
            worst_exact = max(worst_exact, abs(z_exact))
            lines.append(f"k={k} eps={eps}: z {z_nom:+.2f} nominal, {z_exact:+.2f} realised")
    print("\n".join(lines))
    # the nominal (1-eps)^k target ignores that round(eps*N) entries are rewritten
    report("15/nominal", worst_nom <= 3, f"max |z| against (1-eps)^k Phi_f = {worst_nom:.2f} ({'within' if worst_nom <= 3 else 'outside'} 3 SE)", gate=False)
    report(15, worst_exact <= 3, f"max |z| against (1-m/N)^k Phi_f, m = round(eps N): {worst_exact:.2f}")
