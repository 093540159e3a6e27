"""Bias of the Gaussian distinguisher as the query budget grows, on the
Forrelation vector set at n=8."""

import numpy as np

from forrelab.gaussian import make_forrelation_vectors, run_distinguisher

V = make_forrelation_vectors(8)
for t in (2, 8, 32, 128, V.size):
    rep = run_distinguisher("random-order", V, t, 400, np.random.default_rng(t))
    print(f"t={t:4d}  bias {rep.bias:.3f}  95% CI [{rep.ci95[0]:.3f}, {rep.ci95[1]:.3f}]")
