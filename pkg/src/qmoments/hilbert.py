"""Dense operator algebra on finite tensor-product Hilbert spaces.

Qubits use the computational basis with index 0 as the ``+`` level, so
``pauli(3) = diag(1, -1)`` and ``pauli(2)`` is the usual sigma_y.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

MAX_DIM = 4096
ATOL = 1e-12


class SpaceMismatch(ValueError):
    pass


@dataclass(frozen=True)
class HilbertSpace:
    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims:
            raise ValueError("need at least one tensor factor")
        if any(d < 2 for d in dims):
            raise ValueError(f"every factor dimension must be >= 2, got {dims}")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.factor_dims)

    @classmethod
    def qubits(cls, n: int) -> "HilbertSpace":
        return cls((2,) * n)

    def __str__(self):
        return "⊗".join(str(d) for d in self.factor_dims)


def _relative_atol(*mats: np.ndarray) -> float:
    scale = max((float(np.max(np.abs(m))) if m.size else 0.0) for m in mats)
    return ATOL * max(1.0, scale)


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix bound to a :class:`HilbertSpace`."""

    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.space.total_dim
        if n > MAX_DIM:
            raise ValueError(f"dense operators are capped at dimension {MAX_DIM}, got {n}")
        if m.shape != (n, n):
            raise SpaceMismatch(f"matrix shape {m.shape} does not match space {self.space} (dim {n})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def _check(self, other: "Operator"):
        if not isinstance(other, Operator):
            raise TypeError(f"expected Operator, got {type(other).__name__}")
        if other.space != self.space:
            raise SpaceMismatch(f"operators live on different spaces: {self.space} vs {other.space}")

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar) -> "Operator":
        if isinstance(scalar, Operator):
            raise TypeError("use @ for operator products")
        return Operator(self.space, complex(scalar) * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Operator":
        return Operator(self.space, self.matrix / complex(scalar))

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def is_hermitian(self) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m - m.conj().T)) <= _relative_atol(m))

    def commutes_with(self, other: "Operator") -> bool:
        c = commutator(self, other).matrix
        scale = max(1.0, float(np.max(np.abs(self.matrix))) * float(np.max(np.abs(other.matrix))))
        return bool(np.max(np.abs(c)) <= ATOL * scale)

    def power(self, k: int) -> "Operator":
        return Operator(self.space, np.linalg.matrix_power(self.matrix, k))

    def allclose(self, other: "Operator", atol: float = ATOL) -> bool:
        self._check(other)
        return bool(np.max(np.abs(self.matrix - other.matrix)) <= atol)

    def __repr__(self):
        return f"Operator(space={self.space}, matrix=\n{self.matrix})"


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.total_dim))


def zero(space: HilbertSpace) -> Operator:
    return Operator(space, np.zeros((space.total_dim,) * 2))


def dagger(op: Operator) -> Operator:
    return op.dag()


_PAULI = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}
QUBIT = HilbertSpace((2,))


def pauli(axis: int) -> Operator:
    """Pauli matrix sigma_axis on a single qubit (axis in {1, 2, 3})."""
    if axis not in _PAULI:
        raise ValueError(f"Pauli axis must be 1, 2 or 3, got {axis!r}")
    return Operator(QUBIT, _PAULI[axis])


def ladder(cutoff: int) -> Operator:
    """Annihilation operator on the Fock levels ``|0>..|cutoff>``."""
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    if cutoff == 0:
        # a one-level space cannot be a HilbertSpace factor; the operator is the 1x1 zero
        raise ValueError("cutoff 0 gives a one-dimensional space; use ladder_matrix(0)")
    return Operator(HilbertSpace((cutoff + 1,)), ladder_matrix(cutoff))


def ladder_matrix(cutoff: int) -> np.ndarray:
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1).astype(complex)


def number_state(cutoff: int, n: int) -> np.ndarray:
    if not 0 <= n <= cutoff:
        raise ValueError(f"level {n} outside 0..{cutoff}")
    v = np.zeros(cutoff + 1, dtype=complex)
    v[n] = 1.0
    return v


def tensor(*ops: Operator) -> Operator:
    space = HilbertSpace(tuple(d for op in ops for d in op.space.factor_dims))
    return Operator(space, reduce(np.kron, (op.matrix for op in ops)))


def embed(op: Operator, slot: int, space: HilbertSpace) -> Operator:
    """Lift a single-factor operator into ``space`` acting on factor ``slot``."""
    dims = space.factor_dims
    if not 0 <= slot < len(dims):
        raise IndexError(f"slot {slot} out of range for space {space}")
    if op.dim != dims[slot]:
        raise SpaceMismatch(f"operator dimension {op.dim} != factor dimension {dims[slot]}")
    left = math.prod(dims[:slot])
    right = math.prod(dims[slot + 1:])
    m = np.kron(np.kron(np.eye(left), op.matrix), np.eye(right))
    return Operator(space, m)


def commutator(a: Operator, b: Operator) -> Operator:
    a._check(b)
    return Operator(a.space, a.matrix @ b.matrix - b.matrix @ a.matrix)


def anticommutator(a: Operator, b: Operator) -> Operator:
    a._check(b)
    return Operator(a.space, a.matrix @ b.matrix + b.matrix @ a.matrix)


def sym_product(ops) -> Operator:
    """Average of the operator product over all orderings of ``ops`` (k <= 4)."""
    ops = list(ops)
    if not 1 <= len(ops) <= 4:
        raise ValueError("sym_product supports 1 to 4 factors")
    for o in ops[1:]:
        ops[0]._check(o)
    perms = list(itertools.permutations(range(len(ops))))
    acc = np.zeros_like(ops[0].matrix)
    for p in perms:
        acc = acc + reduce(np.matmul, (ops[i].matrix for i in p))
    return Operator(ops[0].space, acc / len(perms))


@dataclass(frozen=True, eq=False)
class State:
    """Pure state vector or density matrix on a :class:`HilbertSpace`."""

    space: HilbertSpace
    vector: np.ndarray | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        n = self.space.total_dim
        if (self.vector is None) == (self.density is None):
            raise ValueError("give exactly one of vector or density")
        if self.vector is not None:
            v = np.asarray(self.vector, dtype=complex).reshape(-1)
            if v.shape != (n,):
                raise SpaceMismatch(f"state vector length {v.size} != dim {n}")
            if abs(np.linalg.norm(v) - 1.0) > ATOL * 10:
                raise ValueError(f"state vector not normalized (norm {np.linalg.norm(v)!r})")
            v.setflags(write=False)
            object.__setattr__(self, "vector", v)
        else:
            r = np.asarray(self.density, dtype=complex)
            if r.shape != (n, n):
                raise SpaceMismatch(f"density shape {r.shape} != ({n}, {n})")
            if np.max(np.abs(r - r.conj().T)) > ATOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(r).real - 1.0) > ATOL * 10:
                raise ValueError(f"density matrix trace {np.trace(r).real!r} != 1")
            if np.linalg.eigvalsh(r).min() < -1e-10:
                raise ValueError("density matrix has a negative eigenvalue")
            r.setflags(write=False)
            object.__setattr__(self, "density", r)

    @classmethod
    def pure(cls, space: HilbertSpace, vector, normalize: bool = False) -> "State":
        v = np.asarray(vector, dtype=complex)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(space, vector=v)

    @classmethod
    def mixed(cls, space: HilbertSpace, density) -> "State":
        return cls(space, density=density)

    @classmethod
    def maximally_mixed(cls, space: HilbertSpace) -> "State":
        n = space.total_dim
        return cls(space, density=np.eye(n) / n)

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    @property
    def rho(self) -> np.ndarray:
        if self.density is not None:
            return self.density
        return np.outer(self.vector, self.vector.conj())


def mixture(states, weights) -> State:
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > ATOL:
        raise ValueError("mixture weights must be non-negative and sum to 1")
    space = states[0].space
    rho = sum(w * s.rho for w, s in zip(weights, states))
    return State(space, density=(rho + rho.conj().T) / 2)


def expect(state: State, op: Operator) -> complex:
    """Tr(rho op)."""
    if op.space != state.space:
        raise SpaceMismatch(f"state on {state.space}, operator on {op.space}")
    if state.vector is not None:
        v = state.vector
        return complex(np.vdot(v, op.matrix @ v))
    return complex(np.trace(state.density @ op.matrix))


def expect_real(state: State, op: Operator) -> float:
    val = expect(state, op)
    if abs(val.imag) > _relative_atol(op.matrix) * 10:
        raise ValueError(f"expectation has imaginary part {val.imag!r}; operator not Hermitian?")
    return val.real


def apply_local(psi: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    """Apply a single-factor matrix to axis ``axis`` of a state tensor.

    Used where the full dense operator would exceed ``MAX_DIM``.
    """
    out = np.tensordot(mat, psi, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)
