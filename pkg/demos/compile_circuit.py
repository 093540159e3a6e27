"""Compile a small H/CZ/CCZ circuit into a tuple of phase functions and
check that Phi reproduces its <0|C|0> amplitude."""

from forrelab.compiler import circuit_amplitude, compile_layers, gadget_matrix_exact, parse_circuit, verify_compilation
from forrelab.phi import phi

print("((1/2) H4 CZ)^3 =\n", gadget_matrix_exact())

c = parse_circuit("H 0 1 2\nCCZ 0 1 2\nH 1\nCZ 0 2\nH 0 1 2\n")
r = compile_layers(c)
print(f"\ndepth {c.depth}, k = {r.k} functions on {r.n_bits} bits, scale {r.scale:.4f}")
print("scale * A_Q   ", r.scale * circuit_amplitude(c))
print("Phi           ", phi(r.tables()).phi)
print("residual      ", verify_compilation(c, r))
