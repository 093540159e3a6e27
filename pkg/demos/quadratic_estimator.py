"""Estimate a bounded quadratic at eps = 0.1 after influence splitting."""

import numpy as np

from forrelab.estimators import estimate_quadratic, random_bounded_quadratic

rng = np.random.default_rng(4)
N = 256
for _ in range(5):
    p = random_bounded_quadratic(N, rng)
    x = rng.choice([-1.0, 1.0], N)
    rep = estimate_quadratic(p, x, 0.1, rng)
    print(f"p(x) {p.evaluate(x):+.4f}  estimate {rep.estimate:+.4f}  split vars {rep.info['split_variables']}  queries {rep.queries_used}")
