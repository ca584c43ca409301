"""Acceptance criteria 1-10.  Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines."""
import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from qmoments import catalog, instances, search
from qmoments.catalog import appendix_d, cfrd, mermin_peres
from qmoments.catalog.ghz import ghz_observables, ghz_state, ghz_test
from qmoments.hilbert import HilbertSpace, State, embed, expect_real, pauli, sym_product
from qmoments.intdet import bareiss_det
from qmoments.lhv import GRAPH_CASES, FourCycleError, factor_model, fit, measurable_subsets
from qmoments.lhv.factor import _V, _edges
from qmoments.lhv.models import min_scaled_eigenvalue
from qmoments.moments import ObservableSet, correlation_matrix, psd_check

DET_N10 = -21772303951061875


@contextmanager
def criterion(n, budget=None):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        elapsed = time.perf_counter() - t0
        if budget is not None:
            assert elapsed < budget, f"runtime {elapsed:.2f}s exceeds {budget}s"
        ok = True
    finally:
        elapsed = time.perf_counter() - t0
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.3f}s)")


def test_criterion_01_mermin_peres():
    with criterion(1, budget=1.0):
        space = HilbertSpace.qubits(2)
        rng = np.random.default_rng(1)
        states = [State.maximally_mixed(space)] + [instances.random_pure(rng, space) for _ in range(100)]
        for st in states:
            r = catalog.mp_inequality(st)
            assert abs(r.lhs - 6) <= 1e-10
            assert abs(r.rhs - 3 * math.sqrt(3)) <= 1e-10
            assert r.violated


def test_criterion_02_ghz():
    with criterion(2, budget=1.0):
        r = ghz_test()
        for x in r.details["sum_squares"]:
            assert abs(x) <= 1e-12
        assert abs(r.details["A1A2A3"] - 1) <= 1e-12
        assert abs(r.details["B1B2B3"] - 1) <= 1e-12
        assert r.applicable and r.violated


def test_criterion_03_five_cycle_model():
    with criterion(3, budget=1.0):
        model = appendix_d.canonical_model()
        assert model.commutation_residual() <= 1e-12
        r = appendix_d.appendix_d_test(model, classical_vectors=10_000)
        assert abs(r.details["S"]) <= 1e-12
        assert abs(r.lhs - 8 * (math.sqrt(5) - 1)) <= 1e-10
        assert r.violated


def test_criterion_04_exact_determinant():
    with criterion(4, budget=1.0):
        _, det = cfrd.m_matrix(10)
        assert isinstance(det, int) and det == DET_N10
        diag, off = cfrd.m_integer_entries(10)
        dense = [[diag[i] if i == j else (off[min(i, j)] if abs(i - j) == 1 else 0) for j in range(11)] for i in range(11)]
        assert bareiss_det(dense) == DET_N10
        for N in range(10):
            assert cfrd.m_matrix(N)[1] > 0


def test_criterion_05_eigenpair():
    with criterion(5, budget=10.0):
        r10 = search.min_eigenpair(10)
        assert abs(r10.lambda_min - (-0.00287931)) <= 1e-8
        z = np.asarray(catalog.REFERENCE_Z)
        z = z / np.linalg.norm(z)
        assert np.max(np.abs(r10.vector - z)) <= 1e-5
        r3000 = search.min_eigenpair(3000)
        assert abs(r3000.lambda_min - (-0.093)) <= 1e-3


def test_criterion_06_quadripartite_violation():
    with criterion(6):
        r = cfrd.quadripartite_cfrd(z=catalog.REFERENCE_Z)
        assert r.violated
        assert max(r.details["route_gaps"].values()) <= 1e-12
        assert abs(r.margin - search.violation_margin(r.details["z"])) <= 1e-12


def _ghz_pairs(n):
    sp = HilbertSpace.qubits(n)
    psi = np.zeros(2**n)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return State.pure(sp, psi), [(embed(pauli(1), k, sp), embed(pauli(2), k, sp)) for k in range(n)]


def test_criterion_07_ghz_cfrd():
    with criterion(7):
        st, p = _ghz_pairs(3)
        r3 = cfrd.tripartite_cfrd(st, *p)
        assert abs(r3.lhs - 16) <= 1e-10 and abs(r3.rhs - 8) <= 1e-10
        st, p = _ghz_pairs(4)
        r4 = cfrd.quadripartite_cfrd(st, *p)
        assert abs(r4.lhs - 64) <= 1e-10 and abs(r4.rhs - 16) <= 1e-10


def _local_pair(rng, space, slot):
    local = HilbertSpace((space.factor_dims[slot],))
    return tuple(embed(instances.random_hermitian(rng, local), slot, space) for _ in range(2))


def test_criterion_08_nogo_properties():
    with criterion(8, budget=60.0):
        worst = math.inf
        for child in np.random.SeedSequence(8).spawn(1000):
            rng = np.random.default_rng(child)
            da, db = (int(x) for x in rng.integers(2, 5, size=2))
            space = HilbertSpace((da, db))
            st = instances.random_state(rng, space)
            A = [_local_pair(rng, space, 0) for _ in range(4)]
            B = [_local_pair(rng, space, 1) for _ in range(4)]
            worst = min(worst, cfrd.cfrd_two_party(st, A, B).margin)
        assert worst >= -1e-9

        rng = np.random.default_rng(9)
        for _ in range(10_000):
            z = rng.random(int(rng.integers(1, 40)))
            assert not cfrd.oscillator_tripartite_bound(z).violated

        rng = np.random.default_rng(10)
        for _ in range(1000):
            st, obs = instances.random_contextual_instance(rng)
            _, ok = psd_check(correlation_matrix(st, obs))
            assert ok


def _quantum(state, obs, idx):
    return expect_real(state, sym_product([obs.operators[i] for i in idx]))


def test_criterion_09_lhv_oracle():
    with criterion(9, budget=60.0):
        rng = np.random.default_rng(99)
        fitted = 0
        while fitted < 100:
            st, obs = instances.random_contextual_instance(rng)
            C = correlation_matrix(st, obs).to_array()
            if min_scaled_eigenvalue(C) <= 1e-6:
                continue
            f = fit(st, obs)
            n = len(obs)
            for order in (1, 2, 3):
                for idx in itertools.combinations_with_replacement(range(n), order):
                    if obs.is_measurable(idx, "contextual"):
                        assert abs(f.moment(idx) - _quantum(st, obs, idx)) <= 1e-9
            fitted += 1

        space = HilbertSpace.qubits(2)
        for name, spec, _, _ in GRAPH_CASES:
            edges = [tuple(_V.index(c) for c in e) for e in _edges(spec)]
            ops = instances.graph_instance(rng, edges)
            obs = ObservableSet([(("X", k + 1, 0), op) for k, op in enumerate(ops)])
            st = instances.random_state(rng, space)
            if name == "four-cycle":
                with pytest.raises(FourCycleError):
                    factor_model(st, obs)
                continue
            fm = factor_model(st, obs)
            # brute force over the outcome grid, independent of FactorModel.moment
            grid = list(itertools.product(*(range(len(v)) for v in fm.outcomes)))
            for sub in measurable_subsets(obs):
                for powers in itertools.product(range(1, 4), repeat=len(sub)):
                    if sum(powers) > 4:
                        continue
                    model = sum(
                        fm.probability[g] * math.prod(fm.outcomes[i][g[i]] ** k for i, k in zip(sub, powers))
                        for g in grid
                    )
                    op = ops[sub[0]].power(powers[0])
                    for i, k in zip(sub[1:], powers[1:]):
                        op = op @ ops[i].power(k)
                    assert abs(model - expect_real(st, op)) <= 1e-10, (name, sub, powers)


def test_criterion_10_ghz_contextuality_boundary():
    with criterion(10):
        st, obs = ghz_state(), ghz_observables()
        nc = fit(st, obs, mode="noncontextual")
        labels, quantum, model = nc.worst()
        assert abs(nc.max_residual - 2) <= 1e-10
        assert {lab.setting for lab in labels} == {2}
        assert abs(quantum - 1) <= 1e-10 and abs(model + 1) <= 1e-10
        assert fit(st, obs, mode="contextual").success
