import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmoments.catalog.ghz import ghz_observables, ghz_state
from qmoments.hilbert import HilbertSpace, Operator, State, embed, expect_real, pauli, sym_product
from qmoments.instances import random_pure, random_unitary
from qmoments.io import moment_file_from_state, parse_moment_file
from qmoments.lhv import FitError, fit, fit_moments, is_split_form, kernel_reduce, nonmeasurable_mask
from qmoments.lhv.kernel import KernelReductionError, observer_defect
from qmoments.moments import MomentTensor, ObservableSet, correlation_matrix, kernel_basis, third_moments

seeds = st.integers(0, 2**32 - 1)
QUBIT = HilbertSpace((2,))


def _kernel(C):
    return np.array(kernel_basis(C)).reshape(-1, len(C.labels))


def _same_qubit_settings(rng, k):
    """k rotated Pauli observables of one observer, each its own setting, on a random pure qubit."""
    u = random_unitary(rng, 2)
    ops = [Operator(QUBIT, u @ pauli(a).matrix @ u.conj().T) for a in (1, 2, 3)[:k]]
    obs = ObservableSet([(("A", s + 1, 0), op) for s, op in enumerate(ops)])
    return random_pure(rng, QUBIT), obs


def _twin():
    up = State.pure(QUBIT, [1, 0])
    obs = ObservableSet([(("A", 1, 0), pauli(1)), (("A", 2, 0), pauli(1))])
    return up, obs


def test_nonmeasurable_mask():
    labels = [("A", 1, 0), ("A", 2, 0), ("B", 1, 0)]
    mask = nonmeasurable_mask(labels)
    assert mask[0, 1] and mask[1, 0]
    assert not mask[0, 2] and not mask.diagonal().any()


def test_strictly_pd_unchanged():
    rng = np.random.default_rng(0)
    g = rng.standard_normal((3, 3))
    C = MomentTensor.from_array(g @ g.T + np.eye(3), [("A", 1, 0), ("A", 2, 0), ("B", 1, 0)])
    out = kernel_reduce(C)
    assert np.array_equal(out.to_array(), C.to_array())
    assert out.meta["reduction_steps"] == []


def test_twin_observable_kernel_removed():
    state, obs = _twin()
    C = correlation_matrix(state, obs)
    assert np.allclose(C.to_array(), [[1, 1], [1, 1]])
    K = _kernel(C)
    assert K.shape[0] == 1 and abs(abs(K[0] @ np.array([1, -1]) / math.sqrt(2)) - 1) < 1e-12
    out = kernel_reduce(C)
    M = out.to_array()
    assert np.array_equal(np.diag(M), np.diag(C.to_array()))
    # unit-normalized hub vectors move the entry by epsilon / 2
    assert M[0, 1] == pytest.approx(1 - 0.5e-3, abs=1e-15)
    assert len(kernel_basis(out)) == 0
    assert out.meta["reduction_steps"][0]["epsilon"] == pytest.approx(1e-3)


def test_bell_kernel_retained():
    sp = HilbertSpace.qubits(2)
    singlet = State.pure(sp, np.array([0, 1, -1, 0]) / math.sqrt(2))
    obs = ObservableSet(
        [
            (("A", 1, 0), embed(pauli(3), 0, sp)),
            (("A", 2, 0), embed(pauli(1), 0, sp)),
            (("B", 1, 0), embed(-(pauli(3) + pauli(1)) / math.sqrt(2), 1, sp)),
            (("B", 2, 0), embed(-(pauli(3) - pauli(1)) / math.sqrt(2), 1, sp)),
        ]
    )
    C = correlation_matrix(singlet, obs)
    assert len(kernel_basis(C)) == 2
    assert is_split_form(_kernel(C), C.labels)
    out = kernel_reduce(C)
    assert np.array_equal(out.to_array(), C.to_array())
    f = fit(singlet, obs)
    assert f.success


def test_ghz_kernel_vectors():
    C = correlation_matrix(ghz_state(), ghz_observables())
    K = _kernel(C)
    assert K.shape[0] == 3
    # the kernel is spanned by A_a + B_a
    span = np.zeros((3, 6))
    for a in range(3):
        span[a, a] = span[a, a + 3] = 1 / math.sqrt(2)
    assert np.allclose(K.T @ K, span.T @ span)
    assert not is_split_form(K, C.labels)
    assert observer_defect(K, C.labels, "Q") is not None


def test_plain_matrix_needs_labels():
    with pytest.raises(ValueError):
        kernel_reduce(np.eye(2))
    with pytest.raises(KernelReductionError):
        kernel_reduce(np.array([[1.0, 2.0], [2.0, 1.0]]), labels=[("A", 1, 0), ("A", 2, 0)])


@given(seeds, st.integers(2, 3))
def test_reduction_invariants(seed, k):
    rng = np.random.default_rng(seed)
    state, obs = _same_qubit_settings(rng, k)
    C = correlation_matrix(state, obs)
    out = kernel_reduce(C)
    M0, M1 = C.to_array(), out.to_array()
    mask = nonmeasurable_mask(C.labels)
    assert np.array_equal(M0[~mask], M1[~mask])
    assert np.linalg.eigvalsh(M1)[0] >= -1e-10
    assert is_split_form(_kernel(out), out.labels)


def test_single_qubit_sigma1_sigma3():
    rng = np.random.default_rng(3)
    state = random_pure(rng, QUBIT)
    obs = ObservableSet([(("A", 1, 0), pauli(1)), (("A", 2, 0), pauli(3))])
    f = fit(state, obs)
    assert f.success
    # orders 1-3 within a setting: <X>, <X^2>, <X^3> for each of the two observables
    assert len(f.residuals) == 6
    for idx in [(0,), (1,), (0, 0), (1, 1), (0, 0, 0), (1, 1, 1)]:
        q = expect_real(state, sym_product([obs.operators[i] for i in idx]))
        assert f.moment(idx) == pytest.approx(q, abs=1e-9)


def test_fit_with_kernels():
    f = fit(*_twin())
    assert f.success
    rng = np.random.default_rng(5)
    for k in (2, 3):
        assert fit(*_same_qubit_settings(rng, k)).success


def test_ghz_fit_modes():
    st_, obs = ghz_state(), ghz_observables()
    ctx = fit(st_, obs, mode="contextual")
    assert ctx.success and ctx.max_residual < 1e-12
    nc = fit(st_, obs, mode="noncontextual")
    assert nc.max_residual == pytest.approx(2.0, abs=1e-10)
    assert not nc.success
    with pytest.raises(ValueError):
        fit(st_, obs, mode="other")


def test_fit_sampling_matches_means():
    rng = np.random.default_rng(6)
    state, obs = _same_qubit_settings(rng, 2)
    f = fit(state, obs)
    x = f.sample(1, 200_000)
    assert np.array_equal(x, f.sample(1, 200_000))
    se = x.std(axis=0) / math.sqrt(len(x))
    assert np.all(np.abs(x.mean(axis=0) - f.means) < 6 * se)


def test_fit_moments_from_table():
    st_, obs = ghz_state(), ghz_observables()
    C = correlation_matrix(st_, obs)
    T = third_moments(st_, obs)
    res = fit_moments(C, T)
    assert res.success
    mf = parse_moment_file(moment_file_from_state(st_, obs))
    assert mf.quantum


def test_everything_fixed_raises():
    # a single observable that is constant on the state has no free variable
    up = State.pure(QUBIT, [1, 0])
    obs = ObservableSet([(("A", 1, 0), pauli(3))])
    with pytest.raises(FitError):
        fit(up, obs)


@given(seeds)
def test_contextual_fit_reproduces_random_instances(seed):
    from qmoments.instances import random_contextual_instance

    state, obs = random_contextual_instance(np.random.default_rng(seed))
    f = fit(state, obs)
    assert f.success
    for idx in itertools.combinations_with_replacement(range(len(obs)), 2):
        if obs.is_measurable(idx):
            q = expect_real(state, sym_product([obs.operators[i] for i in idx]))
            assert f.moment(idx) == pytest.approx(q, abs=1e-9)
