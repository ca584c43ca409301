"""Five observables on a qutrit: third moments versus state-dependent noncontextuality.

A_a and A_{a+2} commute (indices mod 5).  With Fourier operators
A(q) = sum_a A_a exp(2 pi i a q / 5), a vanishing S forces A(0) = A(2) = 0
for classical variables and then Q = 25 sum_a <A_a^3> must vanish too.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..hilbert import HilbertSpace, Operator, State, expect_real
from .report import InequalityReport

SPACE = HilbertSpace((3,))
COS1 = math.cos(math.pi / 5)
COS2 = math.cos(2 * math.pi / 5)
SIN1 = math.sin(math.pi / 5)
SIN2 = math.sin(2 * math.pi / 5)
CONSTRAINT_TOL = 1e-12

_F0 = np.diag([0, 1, 1]).astype(complex)
_F2 = np.array([[0, 0, 0], [0, 1, 1j], [0, 1j, -1]])
_F1 = np.array([[0, 1, 1j], [1, 0, 0], [1j, 0, 0]])


def _comm(x, y):
    return x @ y - y @ x


@dataclass(frozen=True, eq=False)
class AppendixDModel:
    a: float
    b: complex
    c: complex

    def __post_init__(self):
        r = self.constraint_residuals()
        if max(r) > CONSTRAINT_TOL:
            raise ValueError(f"parameters violate |c|^2 = 4|b|^2 cos(pi/5), b c* = -a c cos(pi/5): {r}")

    def constraint_residuals(self) -> tuple[float, float]:
        a, b, c = self.a, complex(self.b), complex(self.c)
        return abs(abs(c) ** 2 - 4 * abs(b) ** 2 * COS1), abs(b * c.conjugate() + a * c * COS1)

    def fourier(self, q: int) -> np.ndarray:
        """A(q) for any integer q; A(3) = A(2)^dag and A(4) = A(1)^dag."""
        base = {0: self.a * _F0, 1: self.c * _F1, 2: self.b * _F2}
        q %= 5
        return base[q] if q in base else base[5 - q].conj().T

    def observables(self) -> list[np.ndarray]:
        """A_a for a = 1..5 by inverse transform."""
        out = []
        for alpha in range(1, 6):
            m = sum(self.fourier(q) * np.exp(-2j * math.pi * alpha * q / 5) for q in range(5)) / 5
            out.append(m)
        return out

    def operators(self) -> list[Operator]:
        return [Operator(SPACE, (m + m.conj().T) / 2) for m in self.observables()]

    def hermiticity_residual(self) -> float:
        return max(float(np.max(np.abs(m - m.conj().T))) for m in self.observables())

    def commutation_residual(self) -> float:
        A = self.observables()
        return max(float(np.max(np.abs(_comm(A[k], A[(k + 2) % 5])))) for k in range(5))

    def fourier_relation_residuals(self) -> list[float]:
        F = self.fourier
        rels = [
            _comm(F(1), F(1).conj().T) * SIN1 - _comm(F(2), F(2).conj().T) * SIN2,
            _comm(F(1), F(0)) * SIN2 - _comm(F(2), F(1).conj().T) * SIN1,
            _comm(F(2), F(0)) * SIN1 - _comm(F(2).conj().T, F(1).conj().T) * SIN2,
        ]
        return [float(np.max(np.abs(r))) for r in rels]

    def round_trip_residual(self) -> float:
        A = self.observables()
        return max(
            float(np.max(np.abs(sum(A[k] * np.exp(2j * math.pi * (k + 1) * q / 5) for k in range(5)) - self.fourier(q))))
            for q in range(5)
        )


def canonical_model() -> AppendixDModel:
    return AppendixDModel(a=-1 / COS1, b=1.0, c=2 * math.sqrt(COS1))


def s_value(state: State, ops) -> float:
    sq = sum(expect_real(state, A @ A) for A in ops)
    cross = sum(expect_real(state, ops[k] @ ops[(k + 2) % 5]) for k in range(5))
    return sq * (1 + COS1) + 2 * cross * (COS1 + COS2)


def q_value(state: State, ops) -> float:
    return 25 * sum(expect_real(state, A @ A @ A) for A in ops)


def classical_q_check(n_vectors: int = 100_000, seed: int = 0) -> float:
    """max |Q| over random real 5-vectors restricted to A(0) = A(2) = 0."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_vectors, 5))
    alpha = np.arange(1, 6)
    keep = np.stack([np.cos(2 * np.pi * alpha / 5), np.sin(2 * np.pi * alpha / 5)])
    keep /= np.linalg.norm(keep, axis=1, keepdims=True)
    x = x @ keep.T @ keep
    return float(np.max(np.abs(25 * np.sum(x**3, axis=1))))


def appendix_d_test(model: AppendixDModel | None = None, classical_vectors: int = 100_000, seed: int = 0) -> InequalityReport:
    model = model or canonical_model()
    ops = model.operators()
    state = State.pure(SPACE, [1, 0, 0])
    S = s_value(state, ops)
    Q = q_value(state, ops)
    details = {
        "S": S,
        "Q": Q,
        "Q_expected": 8 * (math.sqrt(5) - 1),
        "commutation_residual": model.commutation_residual(),
        "fourier_relation_residuals": model.fourier_relation_residuals(),
        "hermiticity_residual": model.hermiticity_residual(),
        "round_trip_residual": model.round_trip_residual(),
        "constraint_residuals": list(model.constraint_residuals()),
        "classical_max_abs_Q": classical_q_check(classical_vectors, seed) if classical_vectors else None,
        "premise_met": abs(S) <= 1e-12,
    }
    return InequalityReport(
        "appendix-d", Q, 0.0, kind="equality", applicable=abs(S) <= 1e-12, details=details, seed=seed,
        params={"a": model.a, "b": complex(model.b), "c": complex(model.c)},
    )
