"""Seeded random states, observables and labelled observable sets."""
from __future__ import annotations

import itertools

import numpy as np

from .hilbert import HilbertSpace, Operator, State, embed, pauli, tensor
from .moments import ObservableSet

DEFAULT_SEED = 20240917


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng: np.random.Generator, space: HilbertSpace, scale: float = 1.0) -> Operator:
    n = space.total_dim
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return Operator(space, scale * (z + z.conj().T) / 2)


def random_pure(rng: np.random.Generator, space: HilbertSpace) -> State:
    n = space.total_dim
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return State.pure(space, v, normalize=True)


def random_mixed(rng: np.random.Generator, space: HilbertSpace, rank: int | None = None) -> State:
    n = space.total_dim
    k = rank or n
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return State.mixed(space, (rho + rho.conj().T) / 2)


def random_state(rng: np.random.Generator, space: HilbertSpace) -> State:
    return random_pure(rng, space) if rng.random() < 0.5 else random_mixed(rng, space)


def local_observable_set(rng: np.random.Generator, observers: int, settings: int, dim: int = 2) -> ObservableSet:
    """One random Hermitian per (observer, setting) on a product of ``dim`` levels."""
    space = HilbertSpace((dim,) * observers)
    local = HilbertSpace((dim,))
    entries = []
    for o in range(observers):
        for s in range(1, settings + 1):
            entries.append(((chr(ord("A") + o), s, 0), embed(random_hermitian(rng, local), o, space)))
    return ObservableSet(entries, space)


def random_contextual_instance(rng: np.random.Generator, max_obs: int = 5) -> tuple[State, ObservableSet]:
    """Random state and up to ``max_obs`` labelled observables on at most 2 qubits per observer."""
    while True:
        observers = int(rng.integers(1, 4))
        settings = [int(rng.integers(1, 3)) for _ in range(observers)]
        if sum(settings) <= max_obs:
            break
    dims = tuple(2 for _ in range(observers))
    space = HilbertSpace(dims)
    entries = []
    for o, ns in enumerate(settings):
        for s in range(1, ns + 1):
            op = random_hermitian(rng, HilbertSpace((2,)))
            entries.append(((chr(ord("A") + o), s, 0), embed(op, o, space)))
    return random_state(rng, space), ObservableSet(entries, space)


_PAULIS = [np.eye(2)] + [pauli(k).matrix for k in (1, 2, 3)]


def _pauli_string(codes) -> np.ndarray:
    m = np.array([[1.0 + 0j]])
    for c in codes:
        m = np.kron(m, _PAULIS[c])
    return m


def graph_instance(rng: np.random.Generator, edges, n: int = 4) -> list[Operator]:
    """Two-qubit observables whose commutation graph is exactly ``edges``.

    Random Pauli strings (plus an optional commuting partner and identity
    shift) are drawn until their commutation graph matches, then conjugated by
    a common random unitary.
    """
    want = {frozenset(e) for e in edges}
    strings = [c for c in itertools.product(range(4), repeat=2) if c != (0, 0)]
    space = HilbertSpace.qubits(2)
    for _ in range(100000):
        picks = [strings[i] for i in rng.choice(len(strings), size=n)]
        mats = [_pauli_string(p) for p in picks]
        got = set()
        for i, j in itertools.combinations(range(n), 2):
            if np.allclose(mats[i] @ mats[j], mats[j] @ mats[i]):
                got.add(frozenset((i, j)))
        if got != want:
            continue
        u = random_unitary(rng, 4)
        ops = []
        for m in mats:
            coeffs = rng.standard_normal(2)
            h = coeffs[0] * m + coeffs[1] * np.eye(4)
            ops.append(Operator(space, u @ h @ u.conj().T))
        return ops
    raise RuntimeError(f"no Pauli-string realisation found for edges {sorted(map(sorted, want))}")


def product_observable(*mats) -> Operator:
    return tensor(*(Operator(HilbertSpace((m.shape[0],)), m) for m in mats))
