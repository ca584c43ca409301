"""Symmetrized quantum moments of labeled observables and correlation-matrix analysis."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .hilbert import HilbertSpace, Operator, SpaceMismatch, State, expect_real, identity, sym_product

KERNEL_TOL = 1e-9
PSD_FLOOR = 1e-10

FULL = "full-symmetrization"
KERNEL_SPLIT = "kernel-split"
CONVENTIONS = (FULL, KERNEL_SPLIT)


class Label(NamedTuple):
    """(observer, setting, index) tag of one measured quantity."""

    observer: str
    setting: int
    index: int

    def __str__(self):
        return f"{self.observer}{self.setting}.{self.index}"

    @classmethod
    def coerce(cls, x) -> "Label":
        if isinstance(x, Label):
            return x
        obs, setting, index = x
        return cls(str(obs), int(setting), int(index))


class ObservableSetError(ValueError):
    pass


class ObservableSet:
    """Hermitian observables tagged by observer, setting and index.

    Observables of one observer in one setting must commute, and so must
    observables belonging to different observers.
    """

    def __init__(self, entries: Iterable[tuple], space: HilbertSpace | None = None):
        entries = [(Label.coerce(lab), op) for lab, op in entries]
        if not entries:
            raise ObservableSetError("empty observable set")
        labels = [lab for lab, _ in entries]
        if len(set(labels)) != len(labels):
            dup = sorted({str(lab) for lab in labels if labels.count(lab) > 1})
            raise ObservableSetError(f"duplicate labels: {dup}")
        space = space or entries[0][1].space
        for lab, op in entries:
            if op.space != space:
                raise SpaceMismatch(f"{lab} lives on {op.space}, expected {space}")
            if not op.is_hermitian():
                raise ObservableSetError(f"{lab} is not Hermitian")
        self.space = space
        self.labels: tuple[Label, ...] = tuple(labels)
        self.operators: tuple[Operator, ...] = tuple(op for _, op in entries)
        n = len(labels)
        comm = np.eye(n, dtype=bool)
        for i, j in itertools.combinations(range(n), 2):
            comm[i, j] = comm[j, i] = self.operators[i].commutes_with(self.operators[j])
        self.commutation = comm
        for i, j in itertools.combinations(range(n), 2):
            a, b = labels[i], labels[j]
            if comm[i, j]:
                continue
            if a.observer != b.observer:
                raise ObservableSetError(f"{a} and {b} belong to different observers but do not commute")
            if a.setting == b.setting:
                raise ObservableSetError(f"{a} and {b} share a setting but do not commute")

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(zip(self.labels, self.operators))

    def index(self, label) -> int:
        return self.labels.index(Label.coerce(label))

    def operator(self, label) -> Operator:
        return self.operators[self.index(label)]

    def commutes(self, i: int, j: int) -> bool:
        return bool(self.commutation[i, j])

    def commutation_edges(self) -> list[tuple[int, int]]:
        n = len(self)
        return [(i, j) for i, j in itertools.combinations(range(n), 2) if self.commutation[i, j]]

    def is_measurable(self, idx: Sequence[int], mode: str = "contextual") -> bool:
        """Whether the tuple of observable indices can be measured in one run.

        ``contextual``: per observer, all entries share a setting.
        ``noncontextual``: the operators pairwise commute.
        """
        idx = list(idx)
        if mode == "noncontextual":
            return all(self.commutation[i, j] for i, j in itertools.combinations(idx, 2))
        if mode != "contextual":
            raise ValueError(f"unknown mode {mode!r}")
        setting_of: dict[str, int] = {}
        for i in idx:
            lab = self.labels[i]
            if setting_of.setdefault(lab.observer, lab.setting) != lab.setting:
                return False
        return True

    def centered(self, state: State) -> tuple["ObservableSet", np.ndarray]:
        """Observables shifted by their means, and the means."""
        ident = identity(self.space)
        means = np.array([expect_real(state, op) for op in self.operators])
        shifted = [(lab, op - m * ident) for lab, op, m in zip(self.labels, self.operators, means)]
        return ObservableSet(shifted, self.space), means


def _key(labels: Iterable[Label]) -> tuple[Label, ...]:
    return tuple(sorted(Label.coerce(x) for x in labels))


@dataclass
class MomentTensor:
    """Table of symmetrized moments of one order, keyed by sorted label tuples."""

    order: int
    labels: tuple[Label, ...]
    table: dict[tuple[Label, ...], float]
    convention: str = FULL
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.order <= 4:
            raise ValueError("moment order must be 1..4")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {self.convention!r}")
        self.labels = tuple(Label.coerce(x) for x in self.labels)
        self.table = {_key(k): float(v) for k, v in self.table.items()}

    def __getitem__(self, labels) -> float:
        return self.table[_key(labels)]

    def get(self, labels, default=None):
        return self.table.get(_key(labels), default)

    @classmethod
    def from_array(cls, arr: np.ndarray, labels, convention: str = FULL, meta=None) -> "MomentTensor":
        arr = np.asarray(arr, dtype=float)
        labels = tuple(Label.coerce(x) for x in labels)
        order = arr.ndim
        table = {}
        for idx in itertools.combinations_with_replacement(range(len(labels)), order):
            table[_key(labels[i] for i in idx)] = float(arr[idx])
        return cls(order, labels, table, convention, dict(meta or {}))

    def to_array(self, labels=None) -> np.ndarray:
        labels = tuple(Label.coerce(x) for x in (labels or self.labels))
        n = len(labels)
        out = np.zeros((n,) * self.order)
        for idx in itertools.product(range(n), repeat=self.order):
            out[idx] = self.table[_key(labels[i] for i in idx)]
        return out

    def to_json(self) -> dict:
        entries = [
            {"labels": [list(lab) for lab in key], "value": val}
            for key, val in sorted(self.table.items())
        ]
        return {
            "order": self.order,
            "convention": self.convention,
            "labels": [list(lab) for lab in self.labels],
            "entries": entries,
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "MomentTensor":
        order = int(data["order"])
        entries = data["entries"]
        if "labels" in data:
            labels = [Label.coerce(x) for x in data["labels"]]
        else:
            labels = sorted({Label.coerce(x) for e in entries for x in e["labels"]})
        table = {}
        for e in entries:
            key = _key(e["labels"])
            if len(key) != order:
                raise ValueError(f"entry {e['labels']} does not have {order} labels")
            table[key] = float(e["value"])
        missing = [
            idx for idx in itertools.combinations_with_replacement(sorted(labels), order) if idx not in table
        ]
        if missing:
            raise ValueError(f"moment table incomplete; first missing entry {[list(x) for x in missing[0]]}")
        return cls(order, tuple(labels), table, data.get("convention", FULL), dict(data.get("meta", {})))


def correlation_matrix(state: State, obs: ObservableSet, subtract_mean: bool = True) -> MomentTensor:
    """C_ij = Tr rho {X_i, X_j} / 2, after shifting each X_i by its mean."""
    if state.space != obs.space:
        raise SpaceMismatch(f"state on {state.space}, observables on {obs.space}")
    if subtract_mean:
        obs, means = obs.centered(state)
    else:
        means = np.zeros(len(obs))
    rho = state.rho
    mats = [op.matrix for op in obs.operators]
    n = len(mats)
    C = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            C[i, j] = C[j, i] = np.real(np.trace(rho @ (mats[i] @ mats[j] + mats[j] @ mats[i]))) / 2
    meta = {"mean_subtracted": bool(subtract_mean), "means": [float(m) for m in means]}
    return MomentTensor.from_array(C, obs.labels, FULL, meta)


def third_moment_array(
    state: State,
    ops: Sequence[Operator],
    convention: str = FULL,
    kernel_vars: Iterable[int] | None = None,
) -> np.ndarray:
    """Order-3 moment array for a list of Hermitian operators.

    ``kernel-split`` splits the operators into kernel variables V and the rest Y:
    YYY and VVV are fully symmetrized, VYY uses {V,{Y,Y'}}/4, VVY uses
    (V Y V' + V' Y V)/2.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if convention == KERNEL_SPLIT and kernel_vars is None:
        raise ValueError("kernel-split convention needs a kernel-variable designation")
    V = set(kernel_vars or ())
    rho = state.rho
    mats = [op.matrix for op in ops]
    n = len(mats)

    def tr(*ms):
        m = ms[0]
        for x in ms[1:]:
            m = m @ x
        return np.trace(rho @ m)

    out = np.empty((n, n, n))
    for i, j, k in itertools.combinations_with_replacement(range(n), 3):
        idx = (i, j, k)
        nv = sum(t in V for t in idx) if convention == KERNEL_SPLIT else 0
        if nv in (0, 3):
            val = sum(tr(*(mats[t] for t in p)) for p in itertools.permutations(idx)) / 6
        elif nv == 1:
            v = next(t for t in idx if t in V)
            y1, y2 = [t for t in idx if t not in V]
            Vm, A, B = mats[v], mats[y1], mats[y2]
            yy = A @ B + B @ A
            val = (tr(Vm, yy) + tr(yy, Vm)) / 4
        else:
            v1, v2 = [t for t in idx if t in V]
            y = next(t for t in idx if t not in V)
            val = (tr(mats[v1], mats[y], mats[v2]) + tr(mats[v2], mats[y], mats[v1])) / 2
        for p in set(itertools.permutations(idx)):
            out[p] = np.real(val)
    return out


def third_moments(
    state: State,
    obs: ObservableSet,
    convention: str = FULL,
    kernel_vars: Iterable | None = None,
    subtract_mean: bool = True,
) -> MomentTensor:
    """Symmetrized third moments ⟨X_i X_j X_k⟩ (central moments by default).

    ``kernel_vars`` lists the labels (or indices) treated as kernel variables
    under the ``kernel-split`` convention.
    """
    if state.space != obs.space:
        raise SpaceMismatch(f"state on {state.space}, observables on {obs.space}")
    if convention == KERNEL_SPLIT and kernel_vars is None:
        raise ValueError("kernel-split convention needs a kernel-variable designation")
    kv = None
    if kernel_vars is not None:
        kv = [k if isinstance(k, (int, np.integer)) else obs.index(k) for k in kernel_vars]
    if subtract_mean:
        obs, means = obs.centered(state)
    else:
        means = np.zeros(len(obs))
    arr = third_moment_array(state, obs.operators, convention, kv)
    meta = {"mean_subtracted": bool(subtract_mean), "means": [float(m) for m in means]}
    if kv is not None:
        meta["kernel_vars"] = [list(obs.labels[k]) for k in sorted(kv)]
    return MomentTensor.from_array(arr, obs.labels, convention, meta)


def moment(state: State, ops: Sequence[Operator]) -> float:
    """Fully symmetrized moment of up to four operators."""
    return expect_real(state, sym_product(ops))


def fourth_moment(state: State, op: Operator, power: int = 4) -> float:
    """Tr rho op^power for power 2 or 4."""
    if power not in (2, 4):
        raise ValueError("power must be 2 or 4")
    return expect_real(state, op.power(power))


def _as_matrix(C) -> np.ndarray:
    if isinstance(C, MomentTensor):
        if C.order != 2:
            raise ValueError("expected an order-2 moment tensor")
        return C.to_array()
    return np.asarray(C, dtype=float)


def _check_symmetric(M: np.ndarray):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")


def psd_check(C, tol: float = PSD_FLOOR) -> tuple[np.ndarray, bool]:
    """Ascending eigenvalues and whether the smallest is >= -tol."""
    M = _as_matrix(C)
    _check_symmetric(M)
    w = np.linalg.eigvalsh(M)
    return w, bool(w[0] >= -tol) if w.size else True


def kernel_basis(C, tol: float = KERNEL_TOL) -> list[np.ndarray]:
    """Orthonormal basis of the near-null eigenspace of a PSD matrix.

    The matrix is scaled to unit maximal diagonal before thresholding.
    """
    M = _as_matrix(C)
    _check_symmetric(M)
    scale = float(np.max(np.diag(M))) if M.size else 0.0
    if scale <= 0:
        return [e for e in np.eye(M.shape[0])]
    w, v = np.linalg.eigh(M / scale)
    if w[0] < -tol:
        raise ValueError(f"matrix is not PSD: min scaled eigenvalue {w[0]:.3e}")
    return [v[:, i].copy() for i in range(len(w)) if abs(w[i]) <= tol]
