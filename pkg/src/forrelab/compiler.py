"""Compile {H, CZ, CCZ} circuits into explicit k-fold forrelation instances.

The k-fold circuit forces a Hadamard on every qubit between consecutive
phase functions.  Selective Hadamards come from the gadget

    H^{(x)2} CZ H^{(x)2} CZ H^{(x)2} CZ H^{(x)2} = SWAP (H (x) H)

on a pair of wires, while every other wire sees H^4 = I.  The swap is
tracked as a relabelling of logical qubits onto wires.  An odd Hadamard set
pairs its leftover qubit with one dummy wire (index n).

Text format, one layer per line, gate groups separated by ``|``::

    H 0 2 | CCZ 0 1 2 | CZ 1 3
    CCX 0 1 2        # Toffoli, expands to H 2 / CCZ 0 1 2 / H 2
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ResourceError, ShapeError
from .phi import kfold_state

__all__ = [
    "Layer",
    "Circuit",
    "PhasePolyFunction",
    "CompileResult",
    "parse_circuit",
    "format_circuit",
    "hadamard_gadget",
    "gadget_matrix_exact",
    "compile_gatewise",
    "compile_layers",
    "simulate_circuit",
    "circuit_amplitude",
    "verify_compilation",
    "verify_statevector",
    "random_circuit",
    "result_to_json",
    "result_from_json",
]


@dataclass
class Layer:
    hadamards: tuple = ()
    cz: tuple = ()
    ccz: tuple = ()

    def __post_init__(self):
        self.hadamards = tuple(sorted({int(q) for q in self.hadamards}))
        self.cz = tuple(tuple(sorted(int(q) for q in g)) for g in self.cz)
        self.ccz = tuple(tuple(sorted(int(q) for q in g)) for g in self.ccz)
        for g in self.cz + self.ccz:
            if len(set(g)) != len(g):
                raise DomainError(f"repeated qubit in gate {g}")
        diag = {q for g in self.cz + self.ccz for q in g}
        if diag & set(self.hadamards):
            raise DomainError("Hadamard set overlaps a diagonal gate in the same layer")

    def qubits(self):
        return set(self.hadamards) | {q for g in self.cz + self.ccz for q in g}

    @property
    def empty(self) -> bool:
        return not (self.hadamards or self.cz or self.ccz)


@dataclass
class Circuit:
    n: int
    layers: list = field(default_factory=list)

    def __post_init__(self):
        for layer in self.layers:
            if any(q < 0 or q >= self.n for q in layer.qubits()):
                raise DomainError(f"qubit index out of range for n={self.n}")

    @property
    def depth(self) -> int:
        return len(self.layers)


@dataclass
class PhasePolyFunction:
    """f(z) = (-1)^(sum over monomials of prod z_i) on n_bits bits."""

    n_bits: int
    monomials: frozenset = frozenset()

    def __post_init__(self):
        self.monomials = frozenset(tuple(sorted(m)) for m in self.monomials)

    def __mul__(self, other):
        # pointwise product: exponents add over GF(2)
        return PhasePolyFunction(max(self.n_bits, other.n_bits), self.monomials ^ other.monomials)

    @property
    def is_constant(self) -> bool:
        return not self.monomials

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.monomials), default=0)

    def truth_table(self, n_bits=None) -> np.ndarray:
        n_bits = self.n_bits if n_bits is None else n_bits
        z = np.arange(2**n_bits)
        parity = np.zeros(z.size, dtype=np.int64)
        for m in self.monomials:
            term = np.ones(z.size, dtype=np.int64)
            for q in m:
                term &= (z >> q) & 1
            parity ^= term
        return 1.0 - 2.0 * parity


@dataclass
class CompileResult:
    functions: list
    qubit_relabeling: list
    scale: float
    dummy_count: int
    n: int
    n_bits: int

    @property
    def k(self) -> int:
        return len(self.functions)

    def tables(self):
        return [f.truth_table(self.n_bits) for f in self.functions]


# ------------------------------------------------------------------ parsing

_ALIASES = {"H": "H", "CZ": "CZ", "CSIGN": "CZ", "CCZ": "CCZ", "CCSIGN": "CCZ", "CCX": "CCX", "TOFFOLI": "CCX"}


def parse_circuit(text: str, n: int | None = None) -> Circuit:
    """Parse the line-per-layer text format.  n defaults to 1 + max qubit."""
    layers = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        hs, czs, cczs, toffolis = set(), [], [], []
        for group in line.split("|"):
            parts = group.split()
            if not parts:
                continue
            name = _ALIASES.get(parts[0].upper())
            if name is None:
                raise ShapeError(f"line {lineno}: unknown gate {parts[0]!r}")
            try:
                qs = [int(q) for q in parts[1:]]
            except ValueError as exc:
                raise ShapeError(f"line {lineno}: bad qubit index") from exc
            if name == "H":
                hs.update(qs)
            elif name == "CZ":
                if len(qs) != 2:
                    raise ShapeError(f"line {lineno}: CZ takes 2 qubits")
                czs.append(qs)
            elif name == "CCZ":
                if len(qs) != 3:
                    raise ShapeError(f"line {lineno}: CCZ takes 3 qubits")
                cczs.append(qs)
            else:
                if len(qs) != 3:
                    raise ShapeError(f"line {lineno}: CCX takes 3 qubits")
                toffolis.append(qs)
        if toffolis:
            # CCX(a, b; c) = H_c CCZ(a, b, c) H_c
            if hs or czs or cczs:
                raise ShapeError(f"line {lineno}: CCX must be alone in its layer")
            targets = [t[2] for t in toffolis]
            layers.append(Layer(hadamards=targets))
            layers.append(Layer(ccz=toffolis))
            layers.append(Layer(hadamards=targets))
        else:
            layers.append(Layer(hadamards=hs, cz=czs, ccz=cczs))
    if n is None:
        qs = [q for layer in layers for q in layer.qubits()]
        n = max(qs) + 1 if qs else 1
    return Circuit(n, layers)


def format_circuit(c: Circuit) -> str:
    lines = []
    for layer in c.layers:
        groups = []
        if layer.hadamards:
            groups.append("H " + " ".join(map(str, layer.hadamards)))
        groups += ["CCZ " + " ".join(map(str, g)) for g in layer.ccz]
        groups += ["CZ " + " ".join(map(str, g)) for g in layer.cz]
        lines.append(" | ".join(groups))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- gadget


def hadamard_gadget(a: int, b: int, n_bits: int | None = None):
    """The three CZ phase functions that realise SWAP (H (x) H) on (a, b)."""
    if a == b:
        raise DomainError("gadget needs two distinct qubits")
    n_bits = max(a, b) + 1 if n_bits is None else n_bits
    f = PhasePolyFunction(n_bits, {(a, b)})
    return [f, f, f]


def gadget_matrix_exact() -> np.ndarray:
    """((1/2) H4 CZ)^3 in exact integer arithmetic; equals SWAP."""
    h4 = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], dtype=object)
    cz = np.diag(np.array([1, 1, 1, -1], dtype=object))
    m = h4.dot(cz)
    cube = m.dot(m).dot(m)
    assert all(v % 8 == 0 for v in cube.flat)
    return (cube // 8).astype(np.int64)


# ----------------------------------------------------------------- compiling


class _Builder:
    """Assemble the time-ordered token word H f H f ... f H."""

    def __init__(self, n):
        self.n = n
        self.sigma = list(range(n + 1))  # logical -> wire; logical n is the dummy
        self.dummy_uses = 0
        self.units = []  # each unit: (list of functions, starts_with_H, ends_with_H)

    def wire(self, q):
        return self.sigma[q]

    def phase_set(self, monomials):
        """Monomials on wires; a gate listed twice cancels (exponents mod 2)."""
        out = set()
        for m in monomials:
            out ^= {tuple(sorted(self.wire(q) for q in m))}
        return out

    def diagonal(self, monomials):
        f = PhasePolyFunction(self.n + 1, self.phase_set(monomials))
        self.units.append(([f], False, False))

    def hadamard_pairs(self, qubits, extra=(), one_gadget=False):
        """Gadget(s) for a Hadamard set; ``extra`` diagonal monomials ride in the
        middle function (used by the layered compiler)."""
        qs = sorted(qubits)
        if len(qs) % 2:
            qs.append(self.n)
            self.dummy_uses += 1
        pairs = [(qs[i], qs[i + 1]) for i in range(0, len(qs), 2)]
        wired = [(self.wire(a), self.wire(b)) for a, b in pairs]
        diag = self.phase_set(extra)
        if one_gadget:
            outer = PhasePolyFunction(self.n + 1, set(wired))
            middle = PhasePolyFunction(self.n + 1, set(wired) ^ diag)
            self.units.append(([outer, middle, outer], True, True))
        else:
            for wa, wb in wired:
                g = PhasePolyFunction(self.n + 1, {(wa, wb)})
                self.units.append(([g, g, g], True, True))
        for a, b in pairs:
            self.sigma[a], self.sigma[b] = self.sigma[b], self.sigma[a]

    def functions(self):
        one = PhasePolyFunction(self.n + 1)
        out = []
        prev_h = False  # the global start behaves like a bare boundary
        for funcs, starts_h, ends_h in self.units:
            if starts_h == prev_h:
                out.append(one)
            out.extend(funcs)
            prev_h = ends_h
        if prev_h is False:
            out.append(one)
        if not out:
            out.append(one)
        return out

    def result(self, funcs):
        n_bits = self.n + 1 if self.dummy_uses else self.n
        funcs = [PhasePolyFunction(n_bits, f.monomials) for f in funcs]
        scale = 2.0 ** (-(self.dummy_uses % 2) / 2)
        return CompileResult(funcs, self.sigma[: n_bits], scale, self.dummy_uses, self.n, n_bits)


def _diag_monomials(layer):
    return [tuple(g) for g in layer.cz] + [tuple(g) for g in layer.ccz]


def compile_gatewise(c: Circuit) -> CompileResult:
    """One unit per gate: a CZ/CCZ is one phase function, each Hadamard pair a
    three-function gadget; a constant 1 separates neighbours whose
    boundaries have the same kind."""
    b = _Builder(c.n)
    for layer in c.layers:
        for m in _diag_monomials(layer):
            b.diagonal([m])
        if layer.hadamards:
            b.hadamard_pairs(layer.hadamards)
    return b.result(b.functions())


def _merge_constants(funcs):
    """Drop interior constant functions by merging their two neighbours.

    f H 1 H g = f g, so [.., f, 1, g, ..] -> [.., f*g, ..].
    """
    funcs = list(funcs)
    changed = True
    while changed and len(funcs) >= 3:
        changed = False
        for i in range(1, len(funcs) - 1):
            if funcs[i].is_constant:
                funcs[i - 1 : i + 2] = [funcs[i - 1] * funcs[i + 1]]
                changed = True
                break
    return funcs


def compile_layers(c: Circuit, d: int | None = None) -> CompileResult:
    """Layer-packed compilation with at most 2d+1 functions.

    Each layer gives (g, g * D, g) where g holds the CZs of all its Hadamard
    pairs and D its diagonal gates; layers are joined with constants which
    are then merged away.
    """
    if d is not None and d != c.depth:
        raise DomainError(f"circuit has depth {c.depth}, not {d}")
    b = _Builder(c.n)
    for layer in c.layers:
        diag = _diag_monomials(layer)
        if layer.hadamards:
            b.hadamard_pairs(layer.hadamards, extra=diag, one_gadget=True)
        else:
            one = PhasePolyFunction(c.n + 1)
            f = PhasePolyFunction(c.n + 1, b.phase_set(diag))
            b.units.append(([one, f, one], True, True))
    funcs = _merge_constants(b.functions())
    return b.result(funcs)


# ---------------------------------------------------------------- simulation

STATEVECTOR_LIMIT = 12


def _apply_h(state, q, n):
    s = state.reshape(2 ** (n - q - 1), 2, 2**q)
    a, b = s[:, 0, :].copy(), s[:, 1, :].copy()
    s[:, 0, :] = (a + b) / math.sqrt(2)
    s[:, 1, :] = (a - b) / math.sqrt(2)
    return s.reshape(-1)


def _apply_diag(state, qubits, n):
    z = np.arange(2**n)
    mask = np.ones(z.size, dtype=bool)
    for q in qubits:
        mask &= ((z >> q) & 1).astype(bool)
    state = state.copy()
    state[mask] *= -1
    return state


def simulate_circuit(c: Circuit, n_total: int | None = None) -> np.ndarray:
    """Gate-by-gate statevector of Q|0...0> (extra qubits stay in |0>)."""
    n = c.n if n_total is None else n_total
    if n > STATEVECTOR_LIMIT:
        raise ResourceError(f"statevector limited to {STATEVECTOR_LIMIT} qubits")
    state = np.zeros(2**n)
    state[0] = 1.0
    for layer in c.layers:
        for g in layer.cz + layer.ccz:
            state = _apply_diag(state, g, n)
        for q in layer.hadamards:
            state = _apply_h(state, q, n)
    return state


def circuit_amplitude(c: Circuit) -> float:
    """A_Q = <0...0| Q |0...0>."""
    return float(simulate_circuit(c)[0])


def verify_compilation(c: Circuit, r: CompileResult) -> float:
    """|Phi(compiled functions) - scale * A_Q|."""
    if r.n_bits > STATEVECTOR_LIMIT:
        raise ResourceError(f"verification limited to {STATEVECTOR_LIMIT} bits")
    phi = float(kfold_state(r.tables())[0])
    return abs(phi - r.scale * circuit_amplitude(c))


def verify_statevector(c: Circuit, r: CompileResult) -> float:
    """Max deviation between the whole compiled final state and the circuit's
    state with wires permuted by the relabelling (dummy in H^r|0>)."""
    nb = r.n_bits
    logical = simulate_circuit(c, nb)
    if nb > c.n and r.dummy_count % 2:
        logical = _apply_h(logical, c.n, nb)
    x = np.arange(2**nb)
    y = np.zeros_like(x)
    for q in range(nb):
        y |= ((x >> q) & 1) << r.qubit_relabeling[q]
    wired = np.zeros(2**nb)
    wired[y] = logical
    compiled = kfold_state(r.tables())
    return float(np.max(np.abs(compiled - wired)))


def random_circuit(n, depth, rng, *, p_h=0.5, max_diag=2) -> Circuit:
    """Random layered circuit: a random Hadamard subset plus up to
    ``max_diag`` CZ/CCZ gates on the remaining qubits."""
    layers = []
    for _ in range(depth):
        hs = [q for q in range(n) if rng.random() < p_h]
        free = [q for q in range(n) if q not in hs]
        cz, ccz = [], []
        for _ in range(rng.integers(0, max_diag + 1)):
            size = rng.choice([2, 3])
            if len(free) >= size:
                g = [int(q) for q in rng.choice(free, size=size, replace=False)]
                (cz if size == 2 else ccz).append(g)
        layers.append(Layer(hadamards=hs, cz=cz, ccz=ccz))
    return Circuit(n, layers)


# --------------------------------------------------------------------- IO


def result_to_json(r: CompileResult) -> dict:
    return {
        "n": r.n,
        "n_bits": r.n_bits,
        "scale": r.scale,
        "dummy_count": r.dummy_count,
        "qubit_relabeling": list(map(int, r.qubit_relabeling)),
        "functions": [sorted(list(m) for m in f.monomials) for f in r.functions],
    }


def result_from_json(obj) -> CompileResult:
    nb = int(obj["n_bits"])
    funcs = [PhasePolyFunction(nb, {tuple(m) for m in mons}) for mons in obj["functions"]]
    return CompileResult(funcs, obj["qubit_relabeling"], float(obj["scale"]), int(obj["dummy_count"]), int(obj["n"]), nb)


def save_result(r, path):
    Path(path).write_text(json.dumps(result_to_json(r)))


def load_result(path) -> CompileResult:
    return result_from_json(json.loads(Path(path).read_text()))
