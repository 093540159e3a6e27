"""Instance generators: uniform and forrelated pairs, sign rounding, k-fold
hybrids with multipliers, corruption, and goodness diagnostics.

Every sampler takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ShapeError
from .hadamard import as_real_vector, fwht, fwht_raw, num_qubits
from .phi import kfold_state

__all__ = [
    "InstanceTuple",
    "GoodnessReport",
    "is_boolean",
    "random_boolean",
    "sample_real_pair",
    "sample_boolean_tuple",
    "sign_round",
    "multipliers",
    "sample_kfold_hybrid",
    "corrupt",
    "corruption_count",
    "check_goodness",
    "save_tuple",
    "load_tuple",
    "tuple_to_json",
    "tuple_from_json",
]

MEASURES = ("uniform", "forrelated")


def is_boolean(f) -> bool:
    f = np.asarray(f)
    return bool(np.all((f == 1) | (f == -1)))


@dataclass
class InstanceTuple:
    """k functions on n bits, each a dense array of length 2**n."""

    functions: list
    label: str | None = None

    def __post_init__(self):
        self.functions = [as_real_vector(f, name="function") for f in self.functions]
        if not self.functions:
            raise ShapeError("empty tuple")
        sizes = {f.shape for f in self.functions}
        if len(sizes) != 1 or self.functions[0].ndim != 1:
            raise ShapeError(f"functions must be 1-d and share n, got shapes {sizes}")
        if self.label is not None and self.label not in MEASURES:
            raise DomainError(f"unknown label {self.label!r}")

    @property
    def n(self) -> int:
        return num_qubits(self.functions[0].size)

    @property
    def N(self) -> int:
        return self.functions[0].size

    @property
    def k(self) -> int:
        return len(self.functions)

    @property
    def boolean(self) -> bool:
        return all(is_boolean(f) for f in self.functions)

    def __len__(self):
        return self.k

    def __iter__(self):
        return iter(self.functions)


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return int(n)


def _check_measure(measure):
    if measure not in MEASURES:
        raise DomainError(f"measure must be one of {MEASURES}, got {measure!r}")


def random_boolean(n, rng, size=None) -> np.ndarray:
    """Uniform +-1 table(s); ``size`` adds leading batch axes."""
    shape = (2 ** _check_n(n),) if size is None else tuple(np.atleast_1d(size)) + (2**n,)
    return 1.0 - 2.0 * rng.integers(0, 2, size=shape)


def sample_boolean_tuple(n, k, rng) -> InstanceTuple:
    return InstanceTuple([random_boolean(n, rng) for _ in range(k)])


def sample_real_pair(n, measure, rng) -> InstanceTuple:
    """Gaussian pair: independent (uniform) or ``g = H f`` (forrelated)."""
    n = _check_n(n)
    _check_measure(measure)
    f = rng.standard_normal(2**n)
    g = rng.standard_normal(2**n) if measure == "uniform" else fwht(f)
    return InstanceTuple([f, g], label=measure)


def sign_round(rf) -> np.ndarray:
    """Entrywise sign with sign(0) = +1."""
    rf = np.asarray(rf, dtype=float)
    return np.where(rf >= 0, 1.0, -1.0)


def multipliers(prefix) -> np.ndarray:
    """``c = sqrt(N) * H U_{f_{k-2}} H ... U_{f_1} H |0>`` for a prefix of k-2 tables.

    ``sum(c**2) == N`` for Boolean prefixes.
    """
    prefix = list(getattr(prefix, "functions", prefix))
    if len(prefix) < 1:
        raise DomainError("multipliers need k >= 3, i.e. a non-empty prefix")
    state = kfold_state(prefix)
    return np.sqrt(state.shape[-1]) * state


def sample_kfold_hybrid(n, k, measure, rng) -> InstanceTuple:
    """Boolean prefix of k-2 uniform tables, then two real functions.

    Forrelated case: ``f_{k-1}`` Gaussian and ``f_k = H (c * f_{k-1})``.
    """
    n = _check_n(n)
    _check_measure(measure)
    if k < 2:
        raise DomainError("k must be at least 2")
    if k == 2:
        return sample_real_pair(n, measure, rng)
    prefix = [random_boolean(n, rng) for _ in range(k - 2)]
    f = rng.standard_normal(2**n)
    if measure == "uniform":
        g = rng.standard_normal(2**n)
    else:
        g = fwht(multipliers(prefix) * f)
    return InstanceTuple(prefix + [f, g], label=measure)


def corruption_count(eps, N) -> int:
    """Round eps*N to the nearest integer (halves round up)."""
    if not 0 <= eps <= 1:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")
    return int(math.floor(eps * N + 0.5))


def corrupt(t, eps, rng) -> InstanceTuple:
    """Re-randomise a uniformly random subset of round(eps*N) entries per function."""
    t = t if isinstance(t, InstanceTuple) else InstanceTuple(list(t))
    m = corruption_count(eps, t.N)
    out = []
    for f in t.functions:
        g = f.copy()
        if m:
            pos = rng.choice(t.N, size=m, replace=False)
            g[pos] = 1.0 - 2.0 * rng.integers(0, 2, size=m)
        out.append(g)
    return InstanceTuple(out, label=t.label)


@dataclass
class GoodnessReport:
    """Concentration diagnostics over every prefix level i = 1..k.

    ``max_scaled_amplitude`` is max_{i,x} |Phi_{f_1..f_i^{(x)}}| * sqrt(N).
    ``tail`` rows are (t, worst observed fraction, bound C_k / t^(t/2)).
    ``balance_deviation`` is max_{i, y != 0} |sum_{z.y=0} amp_z^2 - 1/2|.
    """

    n: int
    k: int
    max_scaled_amplitude: float
    amplitude_bound: float
    tail: list = field(default_factory=list)
    balance_deviation: float = 0.0
    balance_bound: float = 0.0
    partial_sums_ok: bool = True
    tail_ok: bool = True
    balance_ok: bool = True

    @property
    def good(self) -> bool:
        return self.partial_sums_ok and self.tail_ok and self.balance_ok


def check_goodness(t, *, c_k: float = 10.0) -> GoodnessReport:
    t = t if isinstance(t, InstanceTuple) else InstanceTuple(list(t))
    N, n, k = t.N, t.n, t.k
    log_n = math.log2(N)
    amps = [kfold_state(t.functions[: i + 1]) for i in range(k)]
    scaled = max(float(np.max(np.abs(a))) * math.sqrt(N) for a in amps)

    tail = []
    for s in range(1, int(log_n) + 1):
        worst = max(float(np.mean(np.abs(a) >= s / math.sqrt(N) - 1e-12)) for a in amps)
        tail.append((s, worst, c_k / s ** (s / 2)))

    # sum over z with z.y = 0 of a_z^2, minus 1/2, is fwht_raw(a^2)[y] / 2
    dev = 0.0
    if N > 1:
        dev = max(float(np.max(np.abs(fwht_raw(a * a)[1:]))) / 2 for a in amps)
    # the deviation never exceeds 1/2, and 1/2 means all weight on one
    # half-space, so cap the bound there and compare strictly
    bal_bound = min(log_n**2.5 / math.sqrt(N), 0.5)
    return GoodnessReport(
        n=n,
        k=k,
        max_scaled_amplitude=scaled,
        amplitude_bound=log_n,
        tail=tail,
        balance_deviation=dev,
        balance_bound=bal_bound,
        partial_sums_ok=scaled <= log_n,
        tail_ok=all(obs <= bound for _, obs, bound in tail),
        balance_ok=dev < bal_bound,
    )


# ---------------------------------------------------------------- file IO


def _table_json(f):
    f = np.asarray(f, dtype=float)
    values = [int(v) for v in f] if is_boolean(f) else [float(v) for v in f]
    return {"n": num_qubits(f.size), "values": values}


def tuple_to_json(t) -> dict:
    t = t if isinstance(t, InstanceTuple) else InstanceTuple(list(t))
    return {
        "n": t.n,
        "k": t.k,
        "label": t.label,
        "functions": [_table_json(f) for f in t.functions],
    }


def tuple_from_json(obj) -> InstanceTuple:
    """Read a tuple object, or a bare ``{"n", "values"}`` table (k = 1)."""
    if "functions" in obj:
        tables = obj["functions"]
        label = obj.get("label")
    elif "values" in obj:
        tables = [obj]
        label = None
    else:
        raise ShapeError("expected keys 'functions' or 'values'")
    funcs = []
    for tab in tables:
        vals = np.asarray(tab["values"], dtype=float)
        if "n" in tab and vals.size != 2 ** int(tab["n"]):
            raise ShapeError(f"table declares n={tab['n']} but has {vals.size} values")
        funcs.append(vals)
    return InstanceTuple(funcs, label=label)


def save_tuple(t, path) -> None:
    Path(path).write_text(json.dumps(tuple_to_json(t)))


def load_tuple(path) -> InstanceTuple:
    return tuple_from_json(json.loads(Path(path).read_text()))
