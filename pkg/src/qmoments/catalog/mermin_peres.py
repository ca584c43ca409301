"""Mermin-Peres square and its fourth-moment noncontextuality inequality."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..hilbert import ATOL, HilbertSpace, Operator, State, expect_real, identity, pauli, tensor
from .report import InequalityReport

SPACE = HilbertSpace.qubits(2)


class SquareError(ValueError):
    pass


def _residual(a: Operator, b: Operator) -> float:
    return float(np.max(np.abs((a @ b - b @ a).matrix)))


@dataclass(frozen=True, eq=False)
class MerminPeresSquare:
    """3x3 grid of Hermitian operators; row-mates and column-mates commute."""

    entries: tuple

    def __post_init__(self):
        grid = tuple(tuple(row) for row in self.entries)
        if len(grid) != 3 or any(len(r) != 3 for r in grid):
            raise SquareError("need a 3x3 grid")
        for i in range(3):
            for j in range(3):
                if not grid[i][j].is_hermitian():
                    raise SquareError(f"M[{i}][{j}] is not Hermitian")
                for k in range(3):
                    if k != j and _residual(grid[i][j], grid[i][k]) > ATOL:
                        raise SquareError(f"row {i}: entries {j},{k} do not commute")
                    if k != i and _residual(grid[i][j], grid[k][j]) > ATOL:
                        raise SquareError(f"column {j}: entries {i},{k} do not commute")
        object.__setattr__(self, "entries", grid)

    def row(self, i: int) -> Operator:
        e = self.entries[i]
        return e[0] @ e[1] @ e[2]

    def column(self, j: int) -> Operator:
        e = self.entries
        return e[0][j] @ e[1][j] @ e[2][j]

    def s_operator(self) -> Operator:
        out = self.column(0) - self.row(0)
        for i in (1, 2):
            out = out + self.column(i) - self.row(i)
        return out


def mermin_peres_square() -> MerminPeresSquare:
    s = {k: pauli(k) for k in (1, 2, 3)}
    one = identity(HilbertSpace((2,)))

    def ab(a, b):
        return tensor(s[a] if a else one, s[b] if b else one)

    grid = (
        (ab(1, 0), ab(1, 1), ab(0, 1)),
        (-ab(1, 3), ab(2, 2), -ab(3, 1)),
        (ab(0, 3), ab(3, 3), ab(3, 0)),
    )
    sq = MerminPeresSquare(grid)
    one4 = identity(SPACE)
    for i in range(3):
        if not sq.row(i).allclose(one4) or not sq.column(i).allclose(-one4):
            raise SquareError("canonical square must have rows +1 and columns -1")
    return sq


def mp_inequality(state: State, square: MerminPeresSquare | None = None) -> InequalityReport:
    square = square or mermin_peres_square()
    lhs = abs(expect_real(state, square.s_operator()))
    terms = []
    for row in square.entries:
        for m in row:
            m2 = m @ m
            terms.append(math.sqrt(max(expect_real(state, m2) * expect_real(state, m2 @ m2), 0.0) / 3))
    return InequalityReport("mermin-peres", lhs, float(sum(terms)), details={"terms": terms})


def n_matrix(M) -> np.ndarray:
    """N_ij = M_{(i+j) mod 3, (i-j) mod 3}."""
    M = np.asarray(M, dtype=float)
    return np.array([[M[(i + j) % 3, (i - j) % 3] for j in range(3)] for i in range(3)])


def s_value(M) -> float:
    M = np.asarray(M, dtype=float)
    return float(sum(np.prod(M[:, i]) - np.prod(M[i, :]) for i in range(3)))


def det_identity_check(M) -> tuple[float, float]:
    """S = sum_i (C_i - R_i) and det N for a real 3x3 table."""
    return s_value(M), float(np.linalg.det(n_matrix(M)))


def classical_mp_check(n_tables: int = 100_000, seed: int = 0) -> InequalityReport:
    """Standard-normal tables: the identity and the classical chain per table, then the averaged bound."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n_tables, 3, 3))
    S = np.zeros(n_tables)
    for i in range(3):
        S = S + np.prod(M[:, :, i], axis=1) - np.prod(M[:, i, :], axis=1)
    N = np.empty_like(M)
    for i in range(3):
        for j in range(3):
            N[:, i, j] = M[:, (i + j) % 3, (i - j) % 3]
    det = np.linalg.det(N)
    identity_gap = float(np.max(np.abs(S - det) / (1 + np.abs(det))))
    sq = np.sum(M**2, axis=(1, 2))
    chain = float(np.max(3 * math.sqrt(3) * np.abs(S) - sq**1.5))
    holder = float(np.max(sq**1.5 - 3 * np.sum(np.abs(M) ** 3, axis=(1, 2))))
    lhs = abs(float(S.mean()))
    rhs = float(np.sum(np.sqrt(np.mean(M**2, axis=0) * np.mean(M**4, axis=0) / 3)))
    details = {
        "identity_gap": identity_gap,
        "cauchy_step_max_excess": chain,
        "holder_step_max_excess": holder,
        "distribution": "independent standard normal entries",
    }
    return InequalityReport("mermin-peres-classical", lhs, rhs, seed=seed, params={"n_tables": n_tables}, details=details)
