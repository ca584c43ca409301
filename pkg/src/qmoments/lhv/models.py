"""Gaussian and delta-peak classical models reproducing second and third moments.

The peaked model mixes a Gaussian of weight ``1 - c/lam**3`` with ``c`` delta
peaks of weight ``lam**-3`` each.  Every peak family comes in three copies
scaled by ``q in (3, -1, -2)``: the copies cancel in the first moment
(3 - 1 - 2 = 0) and add up to 18 in the third (27 - 1 - 8 = 18).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..moments import KERNEL_TOL, PSD_FLOOR, Label, MomentTensor

Q_VALUES = (3.0, -1.0, -2.0)
Q_CUBES = sum(q**3 for q in Q_VALUES)  # 18
LAMBDA_CAP = 2.0**40
CALIBRATION_TOL = 1e-10


class ModelError(ValueError):
    pass


def cbrt(x):
    """Real cube root, negative for negative input."""
    return np.cbrt(x)


def _isserlis(cov: np.ndarray, idx: Sequence[int]) -> float:
    k = len(idx)
    if k == 0:
        return 1.0
    if k % 2:
        return 0.0
    if k == 2:
        return float(cov[idx[0], idx[1]])
    if k == 4:
        a, b, c, d = idx
        return float(cov[a, b] * cov[c, d] + cov[a, c] * cov[b, d] + cov[a, d] * cov[b, c])
    raise ModelError("moments above order 4 are not supported")


def _psd_sqrt(cov: np.ndarray, tol: float = KERNEL_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Factor L with L L^T = cov restricted to its range, plus the range basis."""
    w, v = np.linalg.eigh(cov)
    scale = max(float(np.max(np.abs(w))), 1e-300) if w.size else 1.0
    keep = w > tol * scale
    return v[:, keep] * np.sqrt(w[keep]), v[:, keep]


@dataclass(frozen=True, eq=False)
class GaussianLHV:
    labels: tuple[Label, ...]
    covariance: np.ndarray
    support_basis: np.ndarray | None = None

    def __post_init__(self):
        cov = np.array(self.covariance, dtype=float)
        n = len(self.labels)
        if cov.shape != (n, n):
            raise ModelError(f"covariance shape {cov.shape} does not match {n} labels")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(cov)))):
            raise ModelError("covariance is not symmetric")
        if n and np.linalg.eigvalsh(cov)[0] < -PSD_FLOOR:
            raise ModelError("covariance has a negative eigenvalue")
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)

    @property
    def n(self) -> int:
        return len(self.labels)

    def moment(self, idx: Sequence[int]) -> float:
        return _isserlis(self.covariance, list(idx))

    def sample(self, rng: np.random.Generator, n_draws: int) -> np.ndarray:
        factor, _ = _psd_sqrt(self.covariance)
        z = rng.standard_normal((n_draws, factor.shape[1]))
        return z @ factor.T

    def to_json(self) -> dict:
        return {
            "type": "gaussian",
            "labels": [list(x) for x in self.labels],
            "covariance": self.covariance.tolist(),
            "peaks": [],
            "lambda": None,
        }


@dataclass(frozen=True, eq=False)
class PeakedLHV:
    """Gaussian core plus equally weighted delta peaks."""

    gaussian: GaussianLHV
    positions: np.ndarray  # (c, n) peak coordinates
    lam: float
    peak_tags: tuple = field(default=())

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, self.gaussian.n)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if self.lam <= 0:
            raise ModelError("lambda must be positive")
        if self.label_count / self.lam**3 >= 1:
            raise ModelError("peak mass c/lambda^3 must stay below 1")

    @property
    def labels(self) -> tuple[Label, ...]:
        return self.gaussian.labels

    @property
    def n(self) -> int:
        return self.gaussian.n

    @property
    def label_count(self) -> int:
        return self.positions.shape[0]

    @property
    def peak_weight(self) -> float:
        return self.lam**-3

    @property
    def gaussian_weight(self) -> float:
        return 1.0 - self.label_count * self.peak_weight

    @property
    def peak_weights(self) -> np.ndarray:
        return np.full(self.label_count, self.peak_weight)

    def moment(self, idx: Sequence[int]) -> float:
        idx = list(idx)
        g = self.gaussian_weight * self.gaussian.moment(idx)
        if not idx:
            return g + self.label_count * self.peak_weight
        prod = np.prod(self.positions[:, idx], axis=1)
        return float(g + self.peak_weight * prod.sum())

    def sample(self, rng: np.random.Generator, n_draws: int) -> np.ndarray:
        u = rng.random(n_draws)
        which = rng.integers(0, self.label_count, size=n_draws)
        draws = self.gaussian.sample(rng, n_draws)
        in_peak = u >= self.gaussian_weight
        draws[in_peak] = self.positions[which[in_peak]]
        return draws

    def to_json(self) -> dict:
        return {
            "type": "peaked",
            "labels": [list(x) for x in self.labels],
            "covariance": self.gaussian.covariance.tolist(),
            "gaussian_weight": self.gaussian_weight,
            "peaks": [{"position": p.tolist(), "weight": self.peak_weight} for p in self.positions],
            "lambda": self.lam,
        }


def model_from_json(data: dict):
    labels = tuple(Label.coerce(x) for x in data["labels"])
    gauss = GaussianLHV(labels, np.asarray(data["covariance"], dtype=float))
    if data["type"] == "gaussian":
        return gauss
    if data["type"] != "peaked":
        raise ModelError(f"unknown model type {data['type']!r}")
    pos = np.array([p["position"] for p in data["peaks"]], dtype=float)
    return PeakedLHV(gauss, pos, float(data["lambda"]))


def _labels_and_matrix(C) -> tuple[tuple[Label, ...], np.ndarray]:
    if isinstance(C, MomentTensor):
        if C.order != 2:
            raise ModelError("expected an order-2 moment tensor")
        return C.labels, C.to_array()
    M = np.asarray(C, dtype=float)
    return tuple(Label("X", 1, i) for i in range(M.shape[0])), M


def gaussian_model(C) -> GaussianLHV:
    """Zero-mean Gaussian with covariance C; singular C is supported on its range."""
    labels, M = _labels_and_matrix(C)
    if M.size and np.linalg.eigvalsh(M)[0] < -PSD_FLOOR:
        raise ModelError("correlation matrix is not positive semidefinite")
    _, basis = _psd_sqrt(M)
    support = basis if basis.shape[1] < M.shape[0] else None
    return GaussianLHV(labels, M, support)


def min_scaled_eigenvalue(M: np.ndarray) -> float:
    """Smallest eigenvalue after scaling M to unit diagonal."""
    d = np.diag(M)
    if np.any(d <= 0):
        return -math.inf if np.any(d < 0) else 0.0
    s = 1.0 / np.sqrt(d)
    return float(np.linalg.eigvalsh(M * np.outer(s, s))[0])


@dataclass
class _PeakFamilies:
    """Cube amplitudes of the three peak families.

    triple[(i,j,k)] -> a, pair[(i,j)] -> b (ordered), single[i] -> s
    """

    n: int
    triple: dict = field(default_factory=dict)
    pair: dict = field(default_factory=dict)
    single: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, n: int) -> "_PeakFamilies":
        fam = cls(n)
        for t in itertools.combinations(range(n), 3):
            fam.triple[t] = 0.0
        for p in itertools.permutations(range(n), 2):
            fam.pair[p] = 0.0
        for i in range(n):
            fam.single[i] = 0.0
        return fam

    def positions(self, lam: float) -> tuple[np.ndarray, list]:
        n = self.n
        c18 = cbrt(Q_CUBES)
        rows, tags = [], []
        for (i, j, k), a in self.triple.items():
            for q in Q_VALUES:
                w = np.zeros(n)
                w[[i, j, k]] = q * lam * cbrt(a) / c18
                rows.append(w)
                tags.append(("triple", (i, j, k), q))
        for (i, j), b in self.pair.items():
            big_q = lam * cbrt(b / 4.0)
            for sign in (1.0, -1.0):
                for q in Q_VALUES:
                    w = np.zeros(n)
                    w[i] = sign * math.sqrt(2.0) * q * big_q / c18
                    w[j] = q * big_q / c18
                    rows.append(w)
                    tags.append(("pair", (i, j), sign, q))
        for i, s in self.single.items():
            for q in Q_VALUES:
                w = np.zeros(n)
                w[i] = q * lam * cbrt(s) / c18
                rows.append(w)
                tags.append(("single", (i,), q))
        return np.array(rows).reshape(-1, n), tags


def _peak_third(pos: np.ndarray, weight: float, idx) -> float:
    return float(weight * np.prod(pos[:, list(idx)], axis=1).sum())


def _initial_families(T: np.ndarray) -> _PeakFamilies:
    """Amplitudes from the closed-form peak assignment."""
    n = T.shape[0]
    fam = _PeakFamilies.zeros(n)
    for t in fam.triple:
        fam.triple[t] = T[t]
    for (i, j) in fam.pair:
        fam.pair[(i, j)] = T[i, i, j] - sum(T[i, j, k] for k in range(n) if k not in (i, j))
    for i in fam.single:
        fam.single[i] = T[i, i, i] - sum(T[j, j, i] for j in range(n) if j != i) / 2
    return fam


def _calibrate(fam: _PeakFamilies, T: np.ndarray) -> _PeakFamilies:
    """Zero residual third moments family by family (triples, pairs, singles).

    The map from cube amplitudes to third moments is triangular in this order,
    and positions use a unit scale here since lambda**3 cancels against the
    peak weight.
    """
    for family, keys in (
        ("triple", list(fam.triple)),
        ("pair", list(fam.pair)),
        ("single", list(fam.single)),
    ):
        pos, _ = fam.positions(1.0)
        for key in keys:
            if family == "triple":
                idx = key
            elif family == "pair":
                idx = (key[0], key[0], key[1])
            else:
                idx = (key, key, key)
            resid = T[idx] - _peak_third(pos, 1.0, idx)
            getattr(fam, family)[key] += resid
    return fam


def _third_residual(pos: np.ndarray, weight: float, T: np.ndarray) -> float:
    n = T.shape[0]
    worst = 0.0
    for idx in itertools.combinations_with_replacement(range(n), 3):
        worst = max(worst, abs(_peak_third(pos, weight, idx) - T[idx]))
    return worst


def _as_third(T, labels) -> np.ndarray:
    if isinstance(T, MomentTensor):
        if T.order != 3:
            raise ModelError("expected an order-3 moment tensor")
        return T.to_array(labels)
    return np.asarray(T, dtype=float)


def peaked_model(C, T, lam: float | str = "auto") -> PeakedLHV:
    """Mixture reproducing the correlation matrix C and third moments T exactly.

    C must be strictly positive definite.  With ``lam="auto"`` the peak scale
    doubles from a conservative start until the peak mass is below 1/2 and the
    adjusted Gaussian covariance (C - P) / (1 - c/lam^3) is positive definite.
    """
    labels, M = _labels_and_matrix(C)
    n = M.shape[0]
    T = _as_third(T, labels)
    if T.shape != (n, n, n):
        raise ModelError(f"third-moment array shape {T.shape} does not match {n} labels")
    if n == 0:
        raise ModelError("empty model")
    if min_scaled_eigenvalue(M) <= KERNEL_TOL:
        raise ModelError("correlation matrix must be strictly positive definite")

    fam = _calibrate(_initial_families(T), T)
    unit_pos, tags = fam.positions(1.0)
    c = unit_pos.shape[0]
    tscale = max(1.0, float(np.max(np.abs(T))))
    resid = _third_residual(unit_pos, 1.0, T)
    if resid > CALIBRATION_TOL * tscale:
        raise ModelError(f"calibration left a third-moment residual of {resid:.3e}")

    def adjusted(lam_):
        pos = unit_pos * lam_
        w = lam_**-3
        P = w * pos.T @ pos
        g = 1.0 - c * w
        Cp = (M - P) / g
        return pos, (Cp + Cp.T) / 2

    if lam == "auto":
        spread = float(np.max(np.abs(unit_pos))) if unit_pos.size else 0.0
        lam_ = max(10.0, (4.0 * c) ** (1.0 / 3.0), 10.0 * spread)
        while True:
            if c / lam_**3 < 0.5:
                pos, Cp = adjusted(lam_)
                if min_scaled_eigenvalue(Cp) > KERNEL_TOL:
                    break
            lam_ *= 2.0
            if lam_ > LAMBDA_CAP:
                raise ModelError("no peak scale up to 2**40 keeps the Gaussian covariance positive definite")
    else:
        lam_ = float(lam)
        if lam_ <= 0 or c / lam_**3 >= 1:
            raise ModelError(f"lambda={lam_} gives peak mass c/lambda^3 >= 1 (c={c})")
        pos, Cp = adjusted(lam_)
        if min_scaled_eigenvalue(Cp) <= KERNEL_TOL:
            raise ModelError(f"lambda={lam_} leaves the adjusted covariance indefinite; increase it")

    model = PeakedLHV(GaussianLHV(labels, Cp), pos, lam_, tuple(tags))
    resid = _third_residual(model.positions, model.peak_weight, T)
    if resid > CALIBRATION_TOL * tscale:
        raise ModelError(f"third-moment residual {resid:.3e} after scaling by lambda={lam_}")
    return model


def model_moment(model: GaussianLHV | PeakedLHV, labels) -> float:
    """Exact moment of the model distribution for a tuple of 1..4 labels."""
    labels = list(labels)
    if not 1 <= len(labels) <= 4:
        raise ModelError("moments of order 1..4 only")
    idx = []
    for lab in labels:
        if isinstance(lab, (int, np.integer)):
            idx.append(int(lab))
            continue
        lab = Label.coerce(lab)
        if lab not in model.labels:
            raise KeyError(f"unknown label {lab}")
        idx.append(model.labels.index(lab))
    return model.moment(idx)


def sample(model: GaussianLHV | PeakedLHV, seed: int, n_draws: int) -> np.ndarray:
    """Draws of shape (n_draws, n_labels); deterministic in ``seed``."""
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    rng = np.random.default_rng(seed)
    return model.sample(rng, n_draws)
