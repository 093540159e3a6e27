"""Extract the block-multilinear polynomial of a one-query algorithm,
balance it, and estimate the acceptance probability from a sample of
input positions."""

import numpy as np

from forrelab.blockpoly import all_lambdas, balance, from_query_algorithm, random_bounded_blockpoly, random_query_algorithm
from forrelab.estimators import simulate_quantum_classically

rng = np.random.default_rng(3)

p = random_bounded_blockpoly(2, 8, rng)
delta = 0.3**2 / 8
q, tr = balance(p, delta, rng=rng)
print(f"bounded k=2 poly: {p.num_terms} terms -> {q.num_terms} after balancing, {tr.new_variables} new variables")
print(f"  max Lambda_S {max(all_lambdas(q).values()):.4g} <= delta {delta:.4g}")

A = random_query_algorithm(3, 1, 32, rng)
print("\nextracted polynomial:", from_query_algorithm(A).num_terms, "terms over blocks of size", A.N + 1)
for seed in range(5):
    X = 1.0 - 2.0 * rng.integers(0, 2, size=32)
    rep = simulate_quantum_classically(A, X, 0.2, np.random.default_rng(seed))
    print(f"  truth {rep.info['truth']:.4f} estimate {rep.estimate:.4f} queries {rep.queries_used} of 32")
