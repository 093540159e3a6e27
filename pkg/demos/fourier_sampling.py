"""Fourier Sampling relation at c=1: one quantum sample against the best
zero-query guess."""

import numpy as np

from forrelab.fourier_sampling import asymptotic_success, finite_success, relation_trials

rng = np.random.default_rng(5)
for s in ("quantum", "zero_query"):
    rate = relation_trials(10, 1.0, s, 20000, rng).mean()
    print(f"{s:10s} sampled {rate:.4f}  exact n=10 {finite_success(10, 1.0, s):.4f}  limit {asymptotic_success(1.0, s):.4f}")
