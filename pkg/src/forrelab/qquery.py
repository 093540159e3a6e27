"""Statevector simulation of the ceil(k/2)-query algorithm and its decision rule.

Split the k-fold circuit at m = ceil(k/2).  Branch 0 prepares
``H U_{f_m} H ... U_{f_1} H|0>`` and branch 1 prepares
``U_{f_{m+1}} H U_{f_{m+2}} ... H U_{f_k} H|0>``; each uses at most m queries
and they run in superposition under a control qubit.  A final Hadamard on the
control accepts with probability (1 + <b1|b0>)/2 = (1 + Phi)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hadamard import fwht
from .phi import functions_of, kfold_state

__all__ = [
    "DecisionOutcome",
    "halfk_branches",
    "halfk_accept_probability",
    "decide_probability",
    "decide",
    "queries_halfk",
]


@dataclass
class DecisionOutcome:
    accept_probability: float
    decision: str
    queries_used: int


def queries_halfk(k: int) -> int:
    return -(-k // 2)


def halfk_branches(t):
    funcs = functions_of(t)
    k = len(funcs)
    m = queries_halfk(k)
    b0 = kfold_state(funcs[:m])
    size = funcs[0].shape[-1]
    b1 = np.zeros(size)
    b1[0] = 1.0
    for f in reversed(funcs[m:]):
        b1 = f * fwht(b1)
    return b0, b1


def halfk_accept_probability(t, *, controlled: bool = False) -> float:
    """Probability that the control qubit reads 0.

    With ``controlled=True`` the (n+1)-qubit state is assembled explicitly:
    control in |+>, both branches prepared, Hadamard on the control, and the
    squared norm of the control-0 block is returned.
    """
    b0, b1 = halfk_branches(t)
    if not controlled:
        return float((1.0 + np.dot(b0, b1)) / 2.0)
    state = np.stack([b0, b1]) / math.sqrt(2.0)
    after = np.stack([state[0] + state[1], state[0] - state[1]]) / math.sqrt(2.0)
    return float(np.sum(after[0] ** 2))


def decide_probability(phi_value: float) -> float:
    """Reject outright with probability 1/4, otherwise run the circuit.

    Written as 3(1 + Phi)/8 so Fraction inputs stay exact.
    """
    return 3 * (1 + phi_value) / 8


def decide(t, rng) -> DecisionOutcome:
    """Accept with probability (3/4)(1+Phi)/2; >= 0.6 if Phi >= 3/5, < 0.4 if |Phi| <= 1/100."""
    p_run = halfk_accept_probability(t)
    p = 0.75 * p_run
    decision = "accept" if rng.random() < p else "reject"
    return DecisionOutcome(p, decision, queries_halfk(len(functions_of(t))))
