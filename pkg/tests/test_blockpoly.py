import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import forrelab.blockpoly as bp
from forrelab.blockpoly import (
    BlockPoly,
    QueryAlgorithm,
    acceptance_probability,
    all_lambdas,
    balance,
    evaluate,
    from_query_algorithm,
    is_balanced,
    lambda_S,
    load_poly,
    monomial,
    random_bounded_blockpoly,
    random_query_algorithm,
    save_poly,
    split_variable,
)
from forrelab.errors import DomainError, PreconditionError, ResourceError, ShapeError
from forrelab.hadamard import hadamard_matrix


def dense_lambda(p, S):
    """Lambda_S from a dense coefficient tensor (independent route)."""
    T = np.zeros(p.block_sizes)
    for row, c in zip(p.idx, p.coef):
        T[tuple(row)] += c
    other = tuple(j for j in range(p.k) if j not in S)
    return float(np.sum(T.sum(axis=other) ** 2))


def test_evaluate_single():
    p = monomial((1, 1), (0, 0))
    assert evaluate(p, [np.array([1.0]), np.array([-1.0])]) == -1


def test_zero_poly(rng):
    p = BlockPoly((3, 3), np.zeros((0, 2)), [])
    assert evaluate(p, [rng.choice([-1.0, 1.0], 3), np.ones(3)]) == 0


def test_evaluate_shape_error():
    p = monomial((2, 2), (0, 1))
    with pytest.raises(ShapeError):
        evaluate(p, [np.ones(2), np.ones(3)])
    with pytest.raises(ShapeError):
        BlockPoly((2, 2), [[0, 2]], [1.0])


def test_duplicate_keys_merge():
    p = BlockPoly((2, 2), [[0, 1], [0, 1], [1, 1]], [0.5, 0.25, -1.0])
    assert p.num_terms == 2
    assert evaluate(p, [np.ones(2), np.ones(2)]) == pytest.approx(-0.25)


def test_lambda_single_monomial():
    p = monomial((2, 3, 2), (1, 2, 0))
    for S in bp.nonempty_subsets(3):
        assert lambda_S(p, S) == 1.0
    q = split_variable(p, 1, 2, 4)
    assert lambda_S(q, (0, 1, 2)) == pytest.approx(0.25)
    np.testing.assert_allclose(np.sort(q.coef), [0.25] * 4)


def test_lambda_full_set_is_sum_squares(rng):
    p = random_bounded_blockpoly(3, 4, rng)
    assert lambda_S(p, (0, 1, 2)) == pytest.approx(np.sum(p.coef**2))
    with pytest.raises(DomainError):
        lambda_S(p, ())


def test_lambda_matches_dense(rng):
    for k in (2, 3):
        p = random_bounded_blockpoly(k, 5, rng)
        for S in bp.nonempty_subsets(k):
            assert lambda_S(p, S) == pytest.approx(dense_lambda(p, S), abs=1e-12)


def test_split_m1_identity(rng):
    p = random_bounded_blockpoly(2, 4, rng)
    q = split_variable(p, 0, 1, 1)
    assert q.block_sizes == p.block_sizes
    np.testing.assert_allclose(evaluate(q, [np.ones(4)] * 2), evaluate(p, [np.ones(4)] * 2))


def test_split_substitution_identity(rng):
    p = random_bounded_blockpoly(3, 5, rng)
    for _ in range(100):
        j, l, m = int(rng.integers(3)), int(rng.integers(5)), int(rng.integers(1, 5))
        q = split_variable(p, j, l, m)
        xs = [rng.choice([-1.0, 1.0], 5) for _ in range(3)]
        ys = list(xs)
        ys[j] = np.concatenate([xs[j], np.full(m - 1, xs[j][l])])
        assert evaluate(q, ys) == pytest.approx(evaluate(p, xs), abs=1e-12)


def test_split_preserves_bound(rng):
    p = random_bounded_blockpoly(2, 4, rng)
    q = split_variable(p, 0, 2, 3)
    for _ in range(100):
        xs = [rng.choice([-1.0, 1.0], s) for s in q.block_sizes]
        # the three copies average to a value in [-1, 1]; p is affine in it
        lo, hi = [], []
        for v in (-1.0, 1.0):
            ys = [xs[0][:4].copy(), xs[1]]
            ys[0][2] = v
            lo.append(evaluate(p, ys))
        assert abs(evaluate(q, xs)) <= max(abs(a) for a in lo) + 1e-12


def test_balance_already_balanced():
    p = BlockPoly((4, 4), [[i, i] for i in range(4)], [0.1] * 4)
    q, tr = balance(p, 0.5)
    assert tr.new_variables == 0 and not tr.passes
    np.testing.assert_array_equal(q.coef, p.coef)


def test_balance_single_monomial():
    p = monomial((1, 1), (0, 0))
    q, tr = balance(p, 0.1)
    assert all(v <= 0.1 + 1e-12 for v in all_lambdas(q).values())
    assert tr.new_variables <= 40


def test_balance_rejects_unbounded():
    p = BlockPoly((2, 2), [[0, 0], [1, 1]], [1.0, 1.0])
    with pytest.raises(PreconditionError):
        balance(p, 0.1)
    with pytest.raises(DomainError):
        balance(monomial((1, 1), (0, 0)), 0.0)


def test_balance_chsh():
    # bounded by 1 but sum sqrt(V_i) = sqrt(2) > 1
    p = BlockPoly((2, 2), [[0, 0], [0, 1], [1, 0], [1, 1]], [0.5, 0.5, 0.5, -0.5])
    xs = [np.array(v, float) for v in itertools.product([-1, 1], repeat=2)]
    assert max(abs(evaluate(p, [a, b])) for a in xs for b in xs) == 1.0
    for d in (0.3, 0.05, 0.01):
        q, tr = balance(p, d)
        assert is_balanced(q, d)
        assert tr.new_variables <= 4 / d


def test_balance_monotone_per_pass(rng):
    p = random_bounded_blockpoly(3, 4, rng)
    before = all_lambdas(p)
    q, tr = balance(p, 0.02, pad=False)
    after = all_lambdas(q)
    for S in before:
        assert after[S] <= before[S] + 1e-12


def test_split_block_leaves_other_lambdas(rng):
    p = random_bounded_blockpoly(3, 4, rng)
    q = split_variable(p, 1, 0, 5)
    for S in bp.nonempty_subsets(3):
        if 1 not in S:
            assert lambda_S(q, S) == pytest.approx(lambda_S(p, S), abs=1e-12)
        else:
            assert lambda_S(q, S) <= lambda_S(p, S) + 1e-12


def test_balance_trace_origin(rng):
    p = random_bounded_blockpoly(2, 4, rng)
    q, tr = balance(p, 0.02)
    xs = [rng.choice([-1.0, 1.0], 4) for _ in range(2)]
    ys = [np.where(o >= 0, x[np.maximum(o, 0)], 0.0) for o, x in zip(tr.origin, xs)]
    assert evaluate(q, ys) == pytest.approx(evaluate(p, xs), abs=1e-12)
    assert len(set(q.block_sizes)) == 1


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.sampled_from([0.3, 0.1, 0.03]), st.integers(0, 2**32 - 1))
def test_balance_postcondition(k, delta, seed):
    rng = np.random.default_rng(seed)
    p = random_bounded_blockpoly(k, 4, rng)
    q, tr = balance(p, delta, rng=rng)
    for S in bp.nonempty_subsets(k):
        assert dense_lambda(q, S) <= delta * (1 + 1e-9)
    assert tr.new_variables <= 2**k / delta


def test_balance_term_guard(rng):
    p = random_bounded_blockpoly(4, 8, rng)
    with pytest.raises(ResourceError):
        balance(p, 1e-4, max_terms=1000)


def test_random_bounded_is_bounded(rng):
    for k in (2, 3, 4):
        p = random_bounded_blockpoly(k, 3, rng)
        pts = list(itertools.product([-1.0, 1.0], repeat=3))
        worst = 0.0
        for combo in itertools.product(pts, repeat=k):
            worst = max(worst, abs(evaluate(p, [np.array(c) for c in combo])))
        assert worst <= 1 + 1e-12


# ---------------------------------------------------------------- extraction


def h_query_h():
    H = hadamard_matrix(1)
    return QueryAlgorithm(1, 2, [H, H], [0], np.array([1, 2]))


def test_extraction_hand_case():
    p = from_query_algorithm(h_query_h())
    assert p.block_sizes == (3, 3)
    got = {tuple(r): c for r, c in zip(p.idx.tolist(), p.coef)}
    assert set(got) == {(1, 1), (1, 2), (2, 1), (2, 2)}
    for c in got.values():
        assert c == pytest.approx(0.25, abs=1e-15)


def all_inputs(N):
    return [np.array(v, dtype=float) for v in itertools.product([-1, 1], repeat=N)]


@pytest.mark.parametrize("n,t,N", [(1, 1, 2), (2, 1, 3), (2, 2, 3), (3, 1, 4), (3, 2, 3)])
def test_extraction_matches_simulation(rng, n, t, N):
    A = random_query_algorithm(n, t, N, rng)
    p = from_query_algorithm(A)
    assert p.k == 2 * t
    for X in all_inputs(N):
        full = np.concatenate([[1.0], X])
        assert evaluate(p, [full] * p.k) == pytest.approx(acceptance_probability(A, X), abs=1e-10)


def test_extraction_bounded_on_mismatched(rng):
    A = random_query_algorithm(2, 2, 3, rng)
    p = from_query_algorithm(A)
    xs = [np.concatenate([np.ones((10000, 1)), rng.choice([-1.0, 1.0], (10000, 3))], axis=1) for _ in range(p.k)]
    assert np.max(np.abs(evaluate(p, xs))) <= 1 + 1e-9


def test_extraction_guard(rng, monkeypatch):
    A = random_query_algorithm(2, 1, 3, rng)
    monkeypatch.setattr(bp, "MAX_EXTRACT_QUBITS", 1)
    with pytest.raises(ResourceError):
        from_query_algorithm(A)


def test_extraction_homogeneous(rng):
    p = from_query_algorithm(random_query_algorithm(2, 2, 4, rng))
    assert p.idx.shape[1] == 4


def test_balance_extracted_poly(rng):
    A = random_query_algorithm(3, 1, 8, rng)
    p = from_query_algorithm(A)
    delta = 0.25**2 / 8
    q, _ = balance(p, delta, check_bounded=False)
    for S in bp.nonempty_subsets(2):
        assert dense_lambda(q, S) <= delta * (1 + 1e-9)


def test_query_algorithm_validation(rng):
    with pytest.raises(PreconditionError):
        QueryAlgorithm(1, 2, [np.eye(2), np.ones((2, 2))], [0], np.array([1, 2]))
    with pytest.raises(ShapeError):
        QueryAlgorithm(1, 2, [np.eye(2), np.eye(4)], [0], np.array([1, 2]))


def test_poly_json_roundtrip(tmp_path, rng):
    p = random_bounded_blockpoly(3, 4, rng)
    save_poly(p, tmp_path / "p.json")
    q = load_poly(tmp_path / "p.json")
    assert q.block_sizes == p.block_sizes
    xs = [rng.choice([-1.0, 1.0], 4) for _ in range(3)]
    assert evaluate(q, xs) == pytest.approx(evaluate(p, xs), abs=1e-15)
