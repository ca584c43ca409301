"""Full classical model for first, second and third moments of an observable set.

Pipeline: centred correlations, kernel reduction through nonmeasurable
entries (contextual mode only), a per-setting rotation that isolates the
kernel variables, elimination of one variable per kernel equation, a peaked
model on the remaining strictly positive definite system, and a linear map
back to the original observables.  Every measurable moment of order 1 to 3 is
then compared with its quantum value.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..hilbert import Operator, State, expect_real, sym_product
from ..moments import (
    KERNEL_SPLIT,
    KERNEL_TOL,
    Label,
    MomentTensor,
    ObservableSet,
    correlation_matrix,
    kernel_basis,
    third_moment_array,
)
from .kernel import _row_space, kernel_reduce, setting_blocks
from .models import PeakedLHV, peaked_model

FIT_TOL = 1e-9
PIVOT_TOL = 1e-6
MODES = ("contextual", "noncontextual")


class FitError(RuntimeError):
    pass


@dataclass(eq=False)
class LHVFit:
    """Peaked model on independent variables plus the map back to the observables.

    ``X = means + loading @ Y`` with ``Y`` drawn from ``model``.
    """

    labels: tuple[Label, ...]
    mode: str
    means: np.ndarray
    loading: np.ndarray
    model: PeakedLHV
    reduced: MomentTensor
    residuals: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max((abs(q - m) for q, m in self.residuals.values()), default=0.0)

    @property
    def success(self) -> bool:
        return self.max_residual <= FIT_TOL

    def worst(self) -> tuple[tuple[Label, ...], float, float]:
        key = max(self.residuals, key=lambda k: abs(self.residuals[k][0] - self.residuals[k][1]))
        return (key, *self.residuals[key])

    def central(self, order: int) -> np.ndarray:
        """Central moment array of the fitted observables (order 2 or 3)."""
        r = self.model.n
        G = self.loading
        if order == 2:
            m = np.array([[self.model.moment((i, j)) for j in range(r)] for i in range(r)])
            return G @ m @ G.T
        if order == 3:
            m = np.empty((r, r, r))
            for idx in itertools.combinations_with_replacement(range(r), 3):
                v = self.model.moment(idx)
                for p in set(itertools.permutations(idx)):
                    m[p] = v
            return np.einsum("ai,bj,ck,ijk->abc", G, G, G, m)
        raise ValueError("order must be 2 or 3")

    def moment(self, idx) -> float:
        """Raw moment E[X_a X_b ...] for 1 to 3 observable indices."""
        idx = [self.labels.index(Label.coerce(i)) if not isinstance(i, (int, np.integer)) else int(i) for i in idx]
        mu = self.means
        if len(idx) == 1:
            return float(mu[idx[0]])
        c2 = self.central(2)
        if len(idx) == 2:
            a, b = idx
            return float(mu[a] * mu[b] + c2[a, b])
        if len(idx) == 3:
            a, b, c = idx
            c3 = self.central(3)
            return float(
                mu[a] * mu[b] * mu[c] + mu[a] * c2[b, c] + mu[b] * c2[a, c] + mu[c] * c2[a, b] + c3[a, b, c]
            )
        raise ValueError("moments of order 1 to 3 only")

    def sample(self, seed: int, n_draws: int) -> np.ndarray:
        y = self.model.sample(np.random.default_rng(seed), n_draws)
        return self.means + y @ self.loading.T

    def to_json(self) -> dict:
        worst = self.worst() if self.residuals else ((), 0.0, 0.0)
        return {
            "mode": self.mode,
            "labels": [list(lab) for lab in self.labels],
            "means": [float(x) for x in self.means],
            "loading": self.loading.tolist(),
            "model": self.model.to_json(),
            "max_residual": self.max_residual,
            "success": self.success,
            "worst": {"labels": [list(lab) for lab in worst[0]], "quantum": worst[1], "model": worst[2]},
        }


def _setting_rotation(K: np.ndarray, labels) -> tuple[np.ndarray, list[int]]:
    """Orthogonal T, block diagonal over (observer, setting), and the kernel rows.

    Within each block the first rows span the block projection of the kernel.
    """
    n = len(labels)
    T = np.zeros((n, n))
    kernel_vars: list[int] = []
    for obs, blocks in setting_blocks(labels).items():
        total = 0
        for s, cols in blocks.items():
            basis = _row_space(K[:, cols]) if K.shape[0] else np.zeros((0, len(cols)))
            d = basis.shape[0]
            if d < len(cols):
                _, _, vt = np.linalg.svd(np.vstack([basis, np.zeros((len(cols) - d, len(cols)))]))
                comp = vt[d:] if d else np.eye(len(cols))
                block = np.vstack([basis, comp])
            else:
                block = basis
            T[np.ix_(cols, cols)] = block
            kernel_vars.extend(cols[:d])
            total += d
        if K.shape[0]:
            idx = [i for c in blocks.values() for i in c]
            if total != _row_space(K[:, idx]).shape[0]:
                raise FitError(f"kernel of observer {obs!r} is not split by settings after reduction")
    return T, sorted(kernel_vars)


def _eliminate(K: np.ndarray, allowed: list[int]) -> tuple[list[int], np.ndarray]:
    """Choose one variable per kernel equation, preferring later columns.

    Returns the eliminated indices and E with X_elim = E @ X_rest.
    """
    n = K.shape[1]
    A = K.copy()
    rows = list(range(A.shape[0]))
    pivots: list[int] = []
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    for col in sorted(allowed, reverse=True):
        if not rows:
            break
        r = max(rows, key=lambda i: abs(A[i, col]))
        if abs(A[r, col]) <= PIVOT_TOL * scale:
            continue
        A[r] /= A[r, col]
        for i in range(A.shape[0]):
            if i != r:
                A[i] -= A[i, col] * A[r]
        rows.remove(r)
        pivots.append(col)
    if rows:
        raise FitError("could not choose an eliminated variable for every kernel equation")
    rest = [j for j in range(n) if j not in pivots]
    piv_rows = [int(np.argmax(np.abs(A[:, p]))) for p in pivots]
    E = -np.array([[A[r, j] for j in rest] for r in piv_rows]).reshape(len(pivots), len(rest))
    return pivots, E


def measurable_tuples(obs: ObservableSet, mode: str, max_order: int = 3):
    for k in range(1, max_order + 1):
        for idx in itertools.combinations_with_replacement(range(len(obs)), k):
            if obs.is_measurable(idx, mode):
                yield idx


def _assemble(labels, mode, means, C2, K, T3_fn, epsilon_meta, lam) -> LHVFit:
    n = len(labels)
    if mode == "contextual":
        T, kv = _setting_rotation(K, labels)
    else:
        T = np.eye(n)
        support = np.max(np.abs(K), axis=0) if K.shape[0] else np.zeros(n)
        kv = [i for i in range(n) if support[i] > PIVOT_TOL]
    Cp = T @ C2 @ T.T
    Kp = K @ T.T
    T3p = T3_fn(T, kv)
    elim, E = _eliminate(Kp, kv) if K.shape[0] else ([], np.zeros((0, n)))
    rest = [j for j in range(n) if j not in elim]
    if not rest:
        raise FitError("every variable is fixed by a kernel equation; nothing left to model")
    emb = np.zeros((n, len(rest)))
    emb[rest, range(len(rest))] = 1.0
    if elim:
        emb[elim] = E
    sub = np.ix_(rest, rest)
    rlabels = tuple(labels[j] for j in rest)
    Cr = MomentTensor.from_array((Cp[sub] + Cp[sub].T) / 2, rlabels, meta=epsilon_meta)
    Tr = T3p[np.ix_(rest, rest, rest)]
    model = peaked_model(Cr, Tr, lam)
    return LHVFit(tuple(labels), mode, np.asarray(means, dtype=float), T.T @ emb, model, Cr)


def fit(state: State, obs: ObservableSet, mode: str = "contextual", lam="auto", epsilon0: float | None = None) -> LHVFit:
    """Classical model of all measurable moments up to third order.

    ``contextual``: a tuple is measurable when each observer uses one setting,
    and nonmeasurable correlations may be adjusted.  ``noncontextual``: only
    commuting tuples are measurable and every kernel equation is enforced as
    an identity between the variables.  Check ``success`` on the result.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    centred, means = obs.centered(state)
    C = correlation_matrix(state, obs)
    C2 = kernel_reduce(C, epsilon0=epsilon0) if mode == "contextual" else C
    K = np.array(kernel_basis(C2, KERNEL_TOL)).reshape(-1, len(obs))
    mats = [op.matrix for op in centred.operators]

    def third(T, kv):
        primed = [Operator(obs.space, sum(T[a, j] * mats[j] for j in range(len(mats)))) for a in range(len(mats))]
        return third_moment_array(state, primed, KERNEL_SPLIT, kv)

    result = _assemble(obs.labels, mode, means, C2.to_array(), K, third, C2.meta, lam)
    for idx in measurable_tuples(obs, mode):
        q = expect_real(state, sym_product([obs.operators[i] for i in idx]))
        result.residuals[tuple(obs.labels[i] for i in idx)] = (q, result.moment(idx))
    return result


def fit_moments(C: MomentTensor, T3: MomentTensor, means=None, mode: str = "contextual", lam="auto") -> LHVFit:
    """Fit from tabulated central moments instead of a state.

    Third moments are taken as given and rotated with the setting transform;
    residuals are reported on the tabulated entries that are measurable.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    labels = C.labels
    n = len(labels)
    means = np.zeros(n) if means is None else np.asarray(means, dtype=float)
    C2 = kernel_reduce(C) if mode == "contextual" else C
    K = np.array(kernel_basis(C2, KERNEL_TOL)).reshape(-1, n)
    raw3 = T3.to_array(labels)

    def third(T, kv):
        return np.einsum("ai,bj,ck,ijk->abc", T, T, T, raw3)

    result = _assemble(labels, mode, means, C2.to_array(), K, third, C2.meta, lam)
    M2 = C.to_array()
    centred_fit = LHVFit(labels, mode, np.zeros(n), result.loading, result.model, result.reduced)
    for idx in itertools.chain(
        itertools.combinations_with_replacement(range(n), 2), itertools.combinations_with_replacement(range(n), 3)
    ):
        # without operators, cross-setting tuples of one observer count as unmeasured in both modes
        if not _contextual_ok(labels, idx):
            continue
        q = M2[idx] if len(idx) == 2 else raw3[idx]
        result.residuals[tuple(labels[i] for i in idx)] = (float(q), centred_fit.moment(idx))
    return result


def _contextual_ok(labels, idx) -> bool:
    seen: dict[str, int] = {}
    return all(seen.setdefault(labels[i].observer, labels[i].setting) == labels[i].setting for i in idx)
