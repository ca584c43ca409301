"""Three-qubit GHZ equality test on third moments."""
from __future__ import annotations

import numpy as np

from ..hilbert import HilbertSpace, Operator, State, embed, expect, pauli
from ..moments import ObservableSet
from .report import InequalityReport

SPACE = HilbertSpace.qubits(3)
PREMISE_TOL = 1e-12
IMAG_TOL = 1e-12


def ghz_state() -> State:
    psi = np.zeros(8)
    psi[0] = psi[7] = 1 / np.sqrt(2)
    return State.pure(SPACE, psi)


def ghz_observables(b_sign: float = 1.0) -> ObservableSet:
    """A_a = sigma_1 on qubit a (setting 1), B_a = C sigma_2 on qubit a (setting 2).

    All six belong to one observer, so A_a and B_b with a != b never share a
    run.  ``b_sign`` exists for negative-path checks.
    """
    s2 = [embed(pauli(2), a, SPACE) for a in range(3)]
    C = s2[0] @ s2[1] @ s2[2]
    entries = [(("Q", 1, a), embed(pauli(1), a, SPACE)) for a in range(3)]
    entries += [(("Q", 2, a), b_sign * (C @ s2[a])) for a in range(3)]
    return ObservableSet(entries, SPACE)


def _real(state: State, op: Operator, what: str) -> float:
    v = expect(state, op)
    if abs(v.imag) > IMAG_TOL:
        raise ValueError(f"{what} has imaginary part {v.imag:.3e}")
    return v.real


def ghz_test(state: State | None = None, obs: ObservableSet | None = None) -> InequalityReport:
    state = state or ghz_state()
    obs = obs or ghz_observables()
    A = obs.operators[:3]
    B = obs.operators[3:]
    audit = max(float(np.max(np.abs((a @ b - b @ a).matrix))) for a, b in zip(A, B))
    if audit > PREMISE_TOL:
        raise ValueError(f"A_a and B_a do not commute (residual {audit:.3e})")
    sq = [_real(state, (a + b) @ (a + b), "<(A+B)^2>") for a, b in zip(A, B)]
    aaa = _real(state, A[0] @ A[1] @ A[2], "<A1A2A3>")
    bbb = _real(state, B[0] @ B[1] @ B[2], "<B1B2B3>")
    premise = all(abs(x) <= PREMISE_TOL for x in sq)
    details = {
        "sum_squares": sq,
        "A1A2A3": aaa,
        "B1B2B3": bbb,
        "commutation_residual": audit,
        "premise_met": premise,
        "note": "classical constraint <A1A2A3> = -<B1B2B3> follows from <(A+B)^2> = 0"
        if premise
        else "premise not met: <(A+B)^2> != 0, no classical constraint",
    }
    return InequalityReport("ghz", aaa, -bbb, kind="equality", applicable=premise, details=details)
