"""CFRD-type fourth-moment inequalities and the Tsirelson consequence of weak positivity.

Complex observables are pairs ``(re, im)`` of Hermitian operators; the two
parts need not commute, and every average is expanded into real correlators
that never contain both parts of the same observable.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from ..hilbert import Operator, State, apply_local, expect, expect_real, ladder_matrix, zero
from ..intdet import tridiagonal_det
from .report import InequalityReport

COMMUTE_TOL = 1e-12
ROUTE_TOL = 1e-12
NORM_TOL = 1e-12


def _check_cross(groups):
    for g, h in itertools.combinations(groups, 2):
        for a in g:
            for b in h:
                if not a.commutes_with(b):
                    raise ValueError("operators of different observers must commute")


def tsirelson_check(state: State, A1: Operator, A2: Operator, B1: Operator, B2: Operator) -> InequalityReport:
    """<A1B1> + <A1B2> + <A2B1> - <A2B2> <= (sum of <X^2>) / sqrt 2."""
    _check_cross([(A1, A2), (B1, B2)])
    e = lambda x, y: expect_real(state, x @ y)  # noqa: E731
    lhs = e(A1, B1) + e(A1, B2) + e(A2, B1) - e(A2, B2)
    rhs = sum(expect_real(state, X @ X) for X in (A1, A2, B1, B2)) / math.sqrt(2)
    return InequalityReport("tsirelson", lhs, rhs)


def _pad(pairs, space, n=4):
    z = zero(space)
    out = []
    for k in range(n):
        p = pairs[k] if k < len(pairs) else None
        if p is None:
            out.append((z, z))
        else:
            re, im = p
            out.append((re if re is not None else z, im if im is not None else z))
    return out


def correlator_matrix(state: State, A_real, B_real) -> np.ndarray:
    """G[x, y] = <A_x B_y> for lists of Hermitian operators on the two sides."""
    return np.array([[expect_real(state, a @ b) for b in B_real] for a in A_real])


def cfrd_two_party(state: State, A, B) -> InequalityReport:
    """Eight-setting two-party CFRD inequality evaluated through real correlators.

    ``A`` and ``B`` are sequences of up to four ``(re, im)`` pairs; missing
    entries (or ``None``) are zero operators.
    """
    A = _pad(list(A), state.space)
    B = _pad(list(B), state.space)
    Ar = [x for p in A for x in p]
    Br = [x for p in B for x in p]
    _check_cross([Ar, Br])
    G = correlator_matrix(state, Ar, Br)

    def ab(a, b):  # <A_a B_b>
        return complex(G[2 * a, 2 * b] - G[2 * a + 1, 2 * b + 1], G[2 * a, 2 * b + 1] + G[2 * a + 1, 2 * b])

    def ab_dag(a, b):  # <A_a B_b^dag>
        return complex(G[2 * a, 2 * b] + G[2 * a + 1, 2 * b + 1], G[2 * a + 1, 2 * b] - G[2 * a, 2 * b + 1])

    def dd(a, b):  # <A_a^dag B_b^dag>
        return ab(a, b).conjugate()

    terms = [
        sum(ab_dag(k, k) for k in range(4)),
        ab(0, 1) - ab(1, 0) + dd(2, 3) - dd(3, 2),
        ab(0, 2) - ab(2, 0) + dd(3, 1) - dd(1, 3),
        ab(0, 3) - ab(3, 0) + dd(1, 2) - dd(2, 1),
    ]
    lhs = float(sum(abs(t) ** 2 for t in terms))
    rhs = float(sum(expect_real(state, (a @ a) @ (b @ b)) for a in Ar for b in Br))
    return InequalityReport("cfrd-two-party", lhs, rhs, details={"terms": [complex(t) for t in terms]})


def cfrd_two_setting(state: State, A1: Operator, A2: Operator, B1: Operator, B2: Operator) -> InequalityReport:
    """<A1B1 - A2B2>^2 + <A1B2 + A2B1>^2 <= <(A1^2 + A2^2)(B1^2 + B2^2)>."""
    _check_cross([(A1, A2), (B1, B2)])
    e = lambda x, y: expect_real(state, x @ y)  # noqa: E731
    lhs = (e(A1, B1) - e(A2, B2)) ** 2 + (e(A1, B2) + e(A2, B1)) ** 2
    rhs = expect_real(state, (A1 @ A1 + A2 @ A2) @ (B1 @ B1 + B2 @ B2))
    return InequalityReport("cfrd-two-setting", lhs, rhs)


def complex_correlator(state: State, pairs) -> complex:
    """<prod_k (X_k + i Y_k)> summed over real products, one part per observer."""
    total = 0j
    for choice in itertools.product((0, 1), repeat=len(pairs)):
        op = pairs[0][choice[0]]
        for p, c in zip(pairs[1:], choice[1:]):
            op = op @ p[c]
        total += (1j ** sum(choice)) * expect_real(state, op)
    return total


def abs_square(state: State, pairs) -> float:
    """<|prod_k (X_k + i Y_k)|^2> = sum over choices of <prod_k part^2>."""
    total = 0.0
    for choice in itertools.product((0, 1), repeat=len(pairs)):
        op = pairs[0][choice[0]] @ pairs[0][choice[0]]
        for p, c in zip(pairs[1:], choice[1:]):
            op = op @ p[c] @ p[c]
        total += expect_real(state, op)
    return total


def tripartite_cfrd(state: State, A, B, C) -> InequalityReport:
    """|<ABC>|^2 <= <|AB|^2> <|C|^2>."""
    _check_cross([A, B, C])
    abc = complex_correlator(state, [A, B, C])
    lhs = abs(abc) ** 2
    rhs = abs_square(state, [A, B]) * abs_square(state, [C])
    return InequalityReport("cfrd-tripartite", lhs, rhs, details={"ABC": abc})


def _fock_closed(z: np.ndarray) -> tuple[float, float]:
    n = np.arange(len(z))
    abcd = float(np.sum(n[1:] ** 2 * z[1:] * z[:-1]))
    ab2 = float(np.sum(z**2 * (n + 0.5) ** 2))
    return abcd, ab2


def _fock_parts(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    a = ladder_matrix(cutoff)
    return (a + a.conj().T) / 2, (a - a.conj().T) / 2j


def fock_operator_route(z: np.ndarray, cutoff: int) -> dict:
    """<ABCD>, <|AB|^2> and the symmetrized <(AA^+ + A^+A)(BB^+ + B^+B)>/4 on sum z_n |nnnn>.

    Operators act factor by factor on the state tensor, so nothing of
    dimension (cutoff+1)^4 is ever formed.
    """
    d = cutoff + 1
    psi = np.zeros((d,) * 4, dtype=complex)
    for k, zk in enumerate(z):
        psi[(k,) * 4] = zk
    parts = _fock_parts(cutoff)

    def ev(mats):
        phi = psi
        for axis, m in mats:
            phi = apply_local(phi, m, axis)
        return complex(np.vdot(psi, phi))

    abcd = sum((1j ** sum(c)) * ev([(ax, parts[ci]) for ax, ci in enumerate(c)]) for c in itertools.product((0, 1), repeat=4))
    ab2 = sum(ev([(0, parts[i] @ parts[i]), (1, parts[j] @ parts[j])]) for i in (0, 1) for j in (0, 1))
    cd2 = sum(ev([(2, parts[i] @ parts[i]), (3, parts[j] @ parts[j])]) for i in (0, 1) for j in (0, 1))
    a = ladder_matrix(cutoff)
    sym = a @ a.conj().T + a.conj().T @ a
    ab_sym = ev([(0, sym), (1, sym)]) / 4
    return {"ABCD": abcd, "AB2": ab2, "CD2": cd2, "AB2_symmetrized": ab_sym}


def normalize_z(z) -> tuple[np.ndarray, float, bool]:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size == 0:
        raise ValueError("empty coefficient vector")
    norm = float(np.linalg.norm(z))
    if norm == 0:
        raise ValueError("zero coefficient vector")
    residual = abs(norm - 1.0)
    return z / norm, residual, residual > NORM_TOL


def quadripartite_cfrd(
    state: State | None = None, A=None, B=None, C=None, D=None, *, z=None, cutoff: int | None = None
) -> InequalityReport:
    """|<ABCD>|^2 <= <|AB|^2> <|CD|^2>, for a state with four complex observables or for sum z_n |nnnn>.

    The Fock form reports the symmetric reduction <ABCD> <= <|AB|^2>, whose
    margin equals z^T M z.
    """
    if z is None:
        if state is None or any(x is None for x in (A, B, C, D)):
            raise ValueError("give a state with four (re, im) pairs, or z")
        _check_cross([A, B, C, D])
        abcd = complex_correlator(state, [A, B, C, D])
        lhs = abs(abcd) ** 2
        ab2 = abs_square(state, [A, B])
        cd2 = abs_square(state, [C, D])
        return InequalityReport("cfrd-quadripartite", lhs, ab2 * cd2, details={"ABCD": abcd, "AB2": ab2, "CD2": cd2})

    z, norm_residual, renormalized = normalize_z(z)
    need = len(z)
    cutoff = need if cutoff is None else int(cutoff)
    if cutoff < need:
        raise ValueError(f"operator route needs cutoff >= {need} (len(z) - 1 plus one guard level)")
    if (cutoff + 1) ** 4 * 16 > 2**31:
        raise ValueError("cutoff too large for the operator route")
    abcd_cf, ab2_cf = _fock_closed(z)
    route = fock_operator_route(z, cutoff)
    gaps = {
        "ABCD": abs(route["ABCD"] - abcd_cf),
        "AB2": abs(route["AB2"] - ab2_cf),
        "CD2": abs(route["CD2"] - ab2_cf),
        "AB2_symmetrized": abs(route["AB2_symmetrized"] - ab2_cf),
    }
    scale = max(1.0, ab2_cf)
    if max(gaps.values()) > ROUTE_TOL * scale:
        raise RuntimeError(f"closed form and operator route disagree: {gaps}")
    details = {
        "ABCD": abcd_cf,
        "AB2": ab2_cf,
        "full_lhs": abcd_cf**2,
        "full_rhs": ab2_cf**2,
        "route_gaps": gaps,
        "renormalized": renormalized,
        "norm_residual": norm_residual,
        "z": z,
    }
    return InequalityReport(
        "cfrd-quadripartite-fock", abcd_cf, ab2_cf, details=details, params={"cutoff": cutoff, "len_z": len(z)}
    )


def m_integer_entries(N: int) -> tuple[list[int], list[int]]:
    """Diagonal and off-diagonal of 4M."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return [(2 * n + 1) ** 2 for n in range(N + 1)], [-2 * (n + 1) ** 2 for n in range(N)]


def m_matrix(N: int) -> tuple[np.ndarray, int]:
    """M_nn = (n + 1/2)^2, M_{n,n+1} = -(n + 1)^2 / 2, and det(4M) as an exact integer."""
    diag, off = m_integer_entries(N)
    M = np.diag(np.array(diag, dtype=float) / 4)
    if N:
        o = np.array(off, dtype=float) / 4
        M += np.diag(o, 1) + np.diag(o, -1)
    return M, tridiagonal_det(diag, off)


def oscillator_tripartite_bound(z) -> InequalityReport:
    """(sum z_n z_{n-1} n^{3/2})^2 <= sum z_n^2 (n + 1/2)^2 * sum z_n^2 (n + 1/2)."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if np.any(z < 0):
        raise ValueError("coefficients must be nonnegative")
    z, norm_residual, renormalized = normalize_z(z)
    n = np.arange(len(z))
    lhs = float(np.sum(z[1:] * z[:-1] * n[1:] ** 1.5)) ** 2
    rhs = float(np.sum(z**2 * (n + 0.5) ** 2) * np.sum(z**2 * (n + 0.5)))
    return InequalityReport(
        "cfrd-tripartite-oscillator", lhs, rhs, details={"renormalized": renormalized, "norm_residual": norm_residual}
    )
