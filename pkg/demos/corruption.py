"""Re-randomising a fraction eps of every table shrinks Phi by about (1-eps)^k."""

import numpy as np

from forrelab import corrupt, phi, sample_real_pair, sign_round
from forrelab.instances import corruption_count

rng = np.random.default_rng(6)
base = [sign_round(f) for f in sample_real_pair(8, "forrelated", rng).functions]
phi_f = phi(base).phi
for eps in (0.05, 0.1, 0.2):
    m = np.mean([phi(corrupt(base, eps, rng)).phi for _ in range(3000)])
    frac = corruption_count(eps, 256) / 256
    print(f"eps {eps}: mean {m:.4f}  (1-eps)^2 Phi {(1 - eps) ** 2 * phi_f:.4f}  (1-m/N)^2 Phi {(1 - frac) ** 2 * phi_f:.4f}")
