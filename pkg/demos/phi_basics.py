"""Phi of a k-tuple: the transform pipeline, the brute-force sum, and the
ceil(k/2)-query algorithm that accepts with probability (1 + Phi)/2."""

import numpy as np

from forrelab import decide_probability, halfk_accept_probability, phi, phi_bruteforce, sample_boolean_tuple, sample_real_pair, sign_round

rng = np.random.default_rng(1)

t = sample_boolean_tuple(3, 3, rng)
print("random Boolean triple, n=3")
print("  Phi (fast)       ", phi(t).phi)
print("  Phi (brute force)", phi_bruteforce(t))
print("  accept prob      ", halfk_accept_probability(t), "= (1+Phi)/2 =", (1 + phi(t).phi) / 2)

# uniform pairs are nearly uncorrelated; rounded forrelated pairs are not
N = 2**10
u = [phi(sample_boolean_tuple(10, 2, rng)).phi for _ in range(200)]
f = [phi([sign_round(g) for g in sample_real_pair(10, "forrelated", rng).functions]).phi for _ in range(200)]
print(f"\nn=10: uniform N*E[Phi^2] ~ {N * np.mean(np.square(u)):.2f}, forrelated E[Phi] ~ {np.mean(f):.3f} (2/pi = {2 / np.pi:.3f})")
print("decide: Phi=3/5 ->", decide_probability(0.6), " Phi=1/100 ->", decide_probability(0.01))
