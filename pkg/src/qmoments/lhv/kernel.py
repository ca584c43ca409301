"""Shrinking the kernel of a correlation matrix through nonmeasurable entries.

Entries between two settings of the same observer are never measured, so a
contextual model may change them freely as long as the matrix stays PSD.  A
kernel vector is harmless when, observer by observer, it can be rewritten so
that it contains a single variable of that observer (plus variables of other
observers).  For observer X with kernel projection P onto its coordinates,
that holds exactly when P splits into its intersections with the individual
settings.  Otherwise there is r in the orthogonal complement of P with at
least two setting blocks r_a lying inside the projections of P; picking one
block as hub h and p_x = -r_x for the others gives functionals
f_h = sum_x f_x on the kernel, and the perturbation

    D = sum_x (p_x p_h^T + p_h p_x^T) - 2 sum_{x<y} (p_x p_y^T + p_y p_x^T)

has quadratic form 2 sum_x f_x(u)^2 on the kernel and annihilates the part of
the kernel it does not lift.  D touches only cross-setting entries of X.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..moments import KERNEL_TOL, PSD_FLOOR, Label, MomentTensor, kernel_basis

RANK_TOL = 1e-9
MAX_RETRIES = 8


class KernelReductionError(RuntimeError):
    pass


def _labels_and_matrix(C, labels):
    if isinstance(C, MomentTensor):
        return C.labels, C.to_array()
    if labels is None:
        raise ValueError("plain matrices need explicit labels")
    return tuple(Label.coerce(x) for x in labels), np.asarray(C, dtype=float)


def nonmeasurable_mask(labels) -> np.ndarray:
    """True where the entry pairs two settings of one observer."""
    labels = [Label.coerce(x) for x in labels]
    n = len(labels)
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            a, b = labels[i], labels[j]
            mask[i, j] = a.observer == b.observer and a.setting != b.setting
    return mask


def _row_space(A: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal rows spanning the row space of A."""
    if A.size == 0:
        return np.zeros((0, A.shape[1]))
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    if s.size == 0 or s[0] <= 0:
        return np.zeros((0, A.shape[1]))
    r = int(np.sum(s > tol * max(1.0, s[0])))
    return vt[:r]


def _null_space_rows(B: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal rows spanning the orthogonal complement of the rows of B."""
    if B.shape[0] == 0:
        return np.eye(dim)
    _, _, vt = np.linalg.svd(B, full_matrices=True)
    return vt[B.shape[0]:]


def setting_blocks(labels) -> dict[str, dict[int, list[int]]]:
    out: dict[str, dict[int, list[int]]] = {}
    for i, lab in enumerate(labels):
        out.setdefault(lab.observer, {}).setdefault(lab.setting, []).append(i)
    return out


def observer_defect(K: np.ndarray, labels, observer: str) -> np.ndarray | None:
    """Vector r (full length) certifying that the kernel is not split by settings.

    Returns None when the kernel projection onto ``observer`` is the direct sum
    of its setting pieces.
    """
    blocks = setting_blocks(labels)[observer]
    if len(blocks) < 2 or K.shape[0] == 0:
        return None
    idx = [i for s in sorted(blocks) for i in blocks[s]]
    P = _row_space(K[:, idx])
    if P.shape[0] == 0:
        return None
    pieces = {s: _row_space(K[:, blocks[s]]) for s in blocks}
    if sum(b.shape[0] for b in pieces.values()) == P.shape[0]:
        return None
    perp = _null_space_rows(P, len(idx))
    pos = {i: k for k, i in enumerate(idx)}
    best, best_norm = None, 0.0
    for r in perp:
        rt = np.zeros(len(labels))
        for s, cols in blocks.items():
            basis = pieces[s]
            seg = r[[pos[i] for i in cols]]
            rt[cols] = basis.T @ (basis @ seg)
        nrm = np.linalg.norm(rt)
        if nrm > best_norm:
            best, best_norm = rt, nrm
    if best is None or best_norm < 1e-6:
        raise KernelReductionError(f"kernel of observer {observer!r} does not split but no defect found")
    return best / best_norm


def is_split_form(K: np.ndarray, labels) -> bool:
    """Every observer's kernel projection splits into per-setting pieces."""
    labels = [Label.coerce(x) for x in labels]
    return all(observer_defect(K, labels, obs) is None for obs in setting_blocks(labels))


def _perturbation(r: np.ndarray, labels, observer: str) -> np.ndarray:
    blocks = setting_blocks(labels)[observer]
    parts = []
    for s in sorted(blocks):
        p = np.zeros(len(labels))
        p[blocks[s]] = r[blocks[s]]
        if np.linalg.norm(p) > 1e-12:
            parts.append(p)
    parts.sort(key=lambda p: -np.linalg.norm(p))
    hub, others = parts[0], [-p for p in parts[1:]]
    D = np.zeros((len(labels),) * 2)
    for px in others:
        D += np.outer(px, hub) + np.outer(hub, px)
    for a in range(len(others)):
        for b in range(a + 1, len(others)):
            D -= 2 * (np.outer(others[a], others[b]) + np.outer(others[b], others[a]))
    return D


@dataclass
class ReductionStep:
    observer: str
    epsilon: float
    kernel_before: int
    kernel_after: int


def _kernel_rows(M: np.ndarray, tol: float) -> np.ndarray:
    vecs = kernel_basis(M, tol)
    return np.array(vecs).reshape(len(vecs), M.shape[0])


def kernel_reduce(C, labels=None, epsilon0: float | None = None, tol: float = KERNEL_TOL):
    """Adjust nonmeasurable correlations until the kernel is split by settings.

    Returns a :class:`MomentTensor` whose ``meta["reduction_steps"]`` lists
    the perturbations applied.  Measurable entries are copied unchanged.
    """
    labels, M = _labels_and_matrix(C, labels)
    n = len(labels)
    mask = nonmeasurable_mask(labels)
    diag_max = float(np.max(np.diag(M))) if n else 0.0
    eps = (1e-3 * diag_max) if epsilon0 is None else float(epsilon0)
    floor = -PSD_FLOOR * max(1.0, diag_max)
    if n and np.linalg.eigvalsh(M)[0] < floor:
        raise KernelReductionError("input correlation matrix is not PSD")
    M = M.copy()
    steps: list[ReductionStep] = []
    while True:
        K = _kernel_rows(M, tol)
        if K.shape[0] == 0:
            break
        defect = None
        for obs in setting_blocks(labels):
            r = observer_defect(K, labels, obs)
            if r is not None:
                defect = (obs, r)
                break
        if defect is None:
            break
        obs, r = defect
        D = _perturbation(r, labels, obs)
        if np.any(D[~mask] != 0):
            raise KernelReductionError("perturbation leaked onto measurable entries")
        for _ in range(MAX_RETRIES):
            trial = M.copy()
            trial[mask] += eps * D[mask]
            w = np.linalg.eigvalsh(trial)
            K_new = _kernel_rows(trial, tol) if w[0] >= floor else None
            ok = (
                K_new is not None
                and K_new.shape[0] < K.shape[0]
                and (K_new.shape[0] == 0 or np.max(np.abs(K_new @ M)) <= 1e-6 * max(1.0, diag_max))
            )
            if ok:
                break
            eps /= 10
        else:
            raise KernelReductionError(
                f"epsilon schedule exhausted at {eps:.3e} without lifting a kernel vector; "
                "retry with a smaller epsilon0"
            )
        steps.append(ReductionStep(obs, eps, K.shape[0], K_new.shape[0]))
        M = trial
        eps /= 10
    meta = dict(C.meta) if isinstance(C, MomentTensor) else {}
    meta["reduction_steps"] = [vars(s) for s in steps]
    conv = C.convention if isinstance(C, MomentTensor) else "full-symmetrization"
    return MomentTensor.from_array(M, labels, conv, meta)
