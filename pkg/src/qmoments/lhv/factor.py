"""Noncontextual joint distributions for small commutation graphs.

For up to four observables every commutation graph except the four-cycle is
chordal, and the joint distribution is a product of clique distributions
divided by separator distributions.  Each clique distribution is the quantum
joint distribution of mutually commuting observables,
``rho(a, b, ...) = Tr rho P_a P_b ...`` with spectral projectors ``P``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..hilbert import Operator, State
from ..moments import ObservableSet

DEGENERACY_TOL = 1e-8
MASS_TOL = 1e-9
ATOM_TOL = 1e-10

_V = "ABCD"


def _edges(spec: str) -> frozenset:
    return frozenset(frozenset(e) for e in spec.split()) if spec else frozenset()


# (name, edges among A..D, numerator cliques, denominator separators)
GRAPH_CASES = (
    ("A B C D", "", ["A", "B", "C", "D"], []),
    ("A-B C D", "AB", ["AB", "C", "D"], []),
    ("triangle ABC, D", "AB AC BC", ["ABC", "D"], []),
    ("B-C, A, D", "BC", ["A", "BC", "D"], []),
    ("B-A-C D", "AB AC", ["AB", "AC", "D"], ["A"]),
    ("star at A", "AB AC AD", ["AB", "AC", "AD"], ["A", "A"]),
    ("triangle ABC + A-D", "AB AC BC AD", ["ABC", "AD"], ["A"]),
    ("complete", "AB AC AD BC BD CD", ["ABCD"], []),
    ("A-B-C-D", "AB BC CD", ["AB", "BC", "CD"], ["B", "C"]),
    ("A-B C-D", "AB CD", ["AB", "CD"], []),
    ("diamond", "AB AC BC BD CD", ["ABC", "BCD"], ["BC"]),
    ("four-cycle", "AB BC CD DA", None, None),
)


class FourCycleError(ValueError):
    """The A1-B1-A2-B2 commutation pattern; needs the contextual kernel pipeline."""


def match_case(n: int, edges) -> tuple[str, dict, list, list]:
    """Find the table row isomorphic to the graph on ``n <= 4`` vertices.

    Missing vertices are padded as isolated dummies.  Returns the row name, the
    map from row letters to vertex indices (None for dummies), cliques and
    separators.
    """
    if not 1 <= n <= 4:
        raise ValueError("the table covers 1 to 4 observables")
    g = {frozenset(e) for e in edges}
    verts = list(range(n)) + [None] * (4 - n)
    for name, spec, num, den in GRAPH_CASES:
        row = _edges(spec)
        for perm in itertools.permutations(verts):
            m = dict(zip(_V, perm))
            mapped = {frozenset((m[a], m[b])) for a, b in (tuple(e) for e in row)}
            if any(None in e for e in mapped):
                continue
            if mapped == g:
                if num is None:
                    raise FourCycleError(
                        "four-cycle commutation graph: route through kernel_reduce + peaked_model"
                    )
                return name, m, num, den
    raise RuntimeError(f"no table row matches the graph {sorted(tuple(e) for e in g)}")


def _spectral(op: Operator) -> tuple[np.ndarray, list[np.ndarray]]:
    w, v = np.linalg.eigh(op.matrix)
    values, projectors = [], []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[start] > DEGENERACY_TOL:
            block = v[:, start:k]
            values.append(float(np.mean(w[start:k])))
            projectors.append(block @ block.conj().T)
            start = k
    return np.array(values), projectors


def joint_distribution(state: State, spectra, subset) -> np.ndarray:
    """Tr rho prod P over the outcome grid of a commuting subset."""
    rho = state.rho
    shape = tuple(len(spectra[i][0]) for i in subset)
    out = np.zeros(shape)
    for outcome in itertools.product(*(range(s) for s in shape)):
        m = rho
        for i, a in zip(subset, outcome):
            m = m @ spectra[i][1][a]
        out[outcome] = np.real(np.trace(m))
    return out


@dataclass(frozen=True, eq=False)
class FactorModel:
    """Joint distribution over the product outcome grid of all observables."""

    case: str
    labels: tuple
    outcomes: tuple  # per-observable eigenvalue arrays
    probability: np.ndarray
    cliques: tuple
    separators: tuple

    def moment(self, powers) -> float:
        """E[prod_i X_i**powers[i]] by enumeration over the grid."""
        p = self.probability
        for axis, (vals, k) in enumerate(zip(self.outcomes, powers)):
            shape = [1] * p.ndim
            shape[axis] = len(vals)
            p = p * (vals**k).reshape(shape)
        return float(p.sum())

    def marginal(self, subset) -> np.ndarray:
        drop = tuple(i for i in range(len(self.labels)) if i not in subset)
        return self.probability.sum(axis=drop)


def _grouped(state: State, ops, groups, case, labels, separators=()) -> FactorModel:
    spectra = [_spectral(op) for op in ops]
    n = len(ops)
    shape = tuple(len(s[0]) for s in spectra)
    num = np.ones(shape)
    den = np.ones(shape)
    atoms = {}
    for kind, sets in (("num", groups), ("den", separators)):
        for subset in sets:
            subset = tuple(sorted(subset))
            if subset not in atoms:
                dist = joint_distribution(state, spectra, subset)
                if dist.min() < -ATOM_TOL or abs(dist.sum() - 1) > ATOM_TOL:
                    raise ValueError(f"atom on {subset} is not a probability distribution")
                atoms[subset] = np.clip(dist, 0.0, None)
            dist = atoms[subset]
            bshape = [1] * n
            for i in subset:
                bshape[i] = shape[i]
            if kind == "num":
                num = num * dist.reshape(bshape)
            else:
                den = den * dist.reshape(bshape)
    with np.errstate(divide="ignore", invalid="ignore"):
        prob = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    if prob.min() < 0 or abs(prob.sum() - 1) > MASS_TOL:
        raise ValueError(f"composite distribution has mass {prob.sum()!r}")
    return FactorModel(
        case,
        tuple(labels),
        tuple(s[0] for s in spectra),
        prob,
        tuple(tuple(sorted(g)) for g in groups),
        tuple(tuple(sorted(s)) for s in separators),
    )


def factor_model(state: State, obs: ObservableSet) -> FactorModel:
    """Positive joint distribution for 1-4 observables matched to a table row."""
    n = len(obs)
    name, m, num, den = match_case(n, obs.commutation_edges())

    def resolve(letters):
        return tuple(m[ch] for ch in letters if m[ch] is not None)

    groups = [g for g in (resolve(c) for c in num) if g]
    seps = [s for s in (resolve(c) for c in den) if s]
    return _grouped(state, obs.operators, groups, name, obs.labels, seps)


def cluster_model(state: State, obs: ObservableSet) -> FactorModel:
    """Product of joint distributions over groups of mutually commuting observables.

    Applies when commutation is transitive, e.g. any set of qubit observables
    whose Bloch vectors are parallel within a group and non-parallel across
    groups.  Scalars commute with everything and form their own groups.
    """
    n = len(obs)
    groups: list[list[int]] = []
    scalar = [
        np.allclose(op.matrix, op.matrix[0, 0] * np.eye(op.dim), atol=DEGENERACY_TOL) for op in obs.operators
    ]
    for i in range(n):
        if scalar[i]:
            groups.append([i])
            continue
        for g in groups:
            if not scalar[g[0]] and obs.commutes(i, g[0]):
                g.append(i)
                break
        else:
            groups.append([i])
    for g in groups:
        for i, j in itertools.combinations(g, 2):
            if not obs.commutes(i, j):
                raise ValueError("commutation is not transitive; grouping does not apply")
    for g, h in itertools.combinations(groups, 2):
        if not scalar[g[0]] and not scalar[h[0]] and any(obs.commutes(i, j) for i in g for j in h):
            raise ValueError("commutation is not transitive; grouping does not apply")
    return _grouped(state, obs.operators, groups, "commuting clusters", obs.labels)


def measurable_subsets(obs: ObservableSet) -> list[tuple[int, ...]]:
    """All non-empty subsets of mutually commuting observables."""
    n = len(obs)
    out = []
    for r in range(1, n + 1):
        for sub in itertools.combinations(range(n), r):
            if all(obs.commutes(i, j) for i, j in itertools.combinations(sub, 2)):
                out.append(sub)
    return out
