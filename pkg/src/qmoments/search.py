"""Lowest eigenpair of the tridiagonal matrix M and cutoff sweeps.

A negative eigenvalue of M at cutoff N means the state sum_n z_n |nnnn>
built from its eigenvector violates the quadripartite inequality.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .catalog.cfrd import m_integer_entries, m_matrix

MAX_BISECT = 200
MAX_INVERSE = 50
RESIDUAL_REL = 1e-10


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class EigenResult:
    cutoff: int
    lambda_min: float
    vector: np.ndarray
    iterations: int
    residual: float

    def to_json(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "lambda_min": self.lambda_min,
            "vector": [float(x) for x in self.vector],
            "iterations": self.iterations,
            "residual": self.residual,
        }


def _bands(N: int) -> tuple[np.ndarray, np.ndarray]:
    diag, off = m_integer_entries(N)
    return np.array(diag, dtype=float) / 4, np.array(off, dtype=float) / 4


def _count_below(d: np.ndarray, e: np.ndarray, x: float, tiny: float) -> int:
    """Number of eigenvalues below x (Sturm sequence via LDL^T pivots)."""
    count = 0
    q = d[0] - x
    for k in range(len(d)):
        if k:
            q = d[k] - x - e[k - 1] ** 2 / q
        if q == 0.0:
            q = -tiny
        if q < 0:
            count += 1
    return count


def _matvec(d, e, v):
    out = d * v
    out[:-1] += e * v[1:]
    out[1:] += e * v[:-1]
    return out


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 0)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def min_eigenpair(N: int) -> EigenResult:
    """Smallest eigenvalue and unit eigenvector of M at cutoff N."""
    if N < 0:
        raise ValueError("N must be >= 0")
    d, e = _bands(N)
    if N == 0:
        return EigenResult(0, float(d[0]), np.array([1.0]), 0, 0.0)
    radius = np.abs(e)
    lo = float(np.min(d - np.r_[radius, 0] - np.r_[0, radius]))
    hi = float(np.max(d + np.r_[radius, 0] + np.r_[0, radius]))
    norm = max(abs(lo), abs(hi))
    tiny = np.finfo(float).eps * norm
    its = 0
    while hi - lo > 4 * np.finfo(float).eps * norm and its < MAX_BISECT:
        mid = 0.5 * (lo + hi)
        if _count_below(d, e, mid, tiny) >= 1:
            hi = mid
        else:
            lo = mid
        its += 1
    lam = 0.5 * (lo + hi)

    ab = np.zeros((3, N + 1))
    ab[0, 1:] = e
    ab[2, :-1] = e
    v = np.ones(N + 1) / np.sqrt(N + 1)
    shift = lam - 16 * tiny
    residual = np.inf
    for _ in range(MAX_INVERSE):
        its += 1
        ab[1] = d - shift
        w = solve_banded((1, 1), ab, v)
        v = w / np.linalg.norm(w)
        mv = _matvec(d, e, v)
        lam = float(v @ mv)
        residual = float(np.linalg.norm(mv - lam * v))
        if residual <= RESIDUAL_REL * norm * 1e-2:
            break
    if residual > RESIDUAL_REL * norm:
        raise ConvergenceError(f"inverse iteration residual {residual:.3e} at N={N}")
    return EigenResult(N, lam, _fix_sign(v), its, residual)


def violation_margin(z) -> float:
    """z^T M z for a unit vector z; negative means the quadripartite inequality fails."""
    z = np.asarray(z, dtype=float).reshape(-1)
    d, e = _bands(len(z) - 1)
    return float(z @ _matvec(d, e, z)) if len(z) > 1 else float(d[0] * z[0] ** 2)


@dataclass(frozen=True)
class SweepRow:
    N: int
    det4M_sign: int
    lambda_min: float


def cutoff_sweep(N_max: int, N_min: int = 0) -> list[SweepRow]:
    if N_max < N_min or N_min < 0:
        raise ValueError("need 0 <= N_min <= N_max")
    rows = []
    for N in range(N_min, N_max + 1):
        _, det = m_matrix(N)
        rows.append(SweepRow(N, (det > 0) - (det < 0), min_eigenpair(N).lambda_min))
    return rows


def first_negative_determinant(rows) -> int | None:
    return next((r.N for r in rows if r.det4M_sign < 0), None)


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "det4M_sign", "lambda_min"])
    for r in rows:
        w.writerow([r.N, r.det4M_sign, repr(r.lambda_min)])
    return buf.getvalue()


def sweep_to_json(rows) -> str:
    data = [{"N": r.N, "det4M_sign": r.det4M_sign, "lambda_min": r.lambda_min} for r in rows]
    return json.dumps({"rows": data, "first_negative_det": first_negative_determinant(rows)}, sort_keys=True)
