import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmoments.catalog import REFERENCE_Z
from qmoments.catalog.appendix_d import AppendixDModel, appendix_d_test, canonical_model, classical_q_check
from qmoments.catalog.cfrd import (
    cfrd_two_setting,
    cfrd_two_party,
    fock_operator_route,
    m_matrix,
    normalize_z,
    oscillator_tripartite_bound,
    quadripartite_cfrd,
    tripartite_cfrd,
    tsirelson_check,
)
from qmoments.catalog.ghz import ghz_observables, ghz_state, ghz_test
from qmoments.catalog.mermin_peres import (
    MerminPeresSquare,
    SquareError,
    classical_mp_check,
    det_identity_check,
    mermin_peres_square,
    mp_inequality,
    s_value,
)
from qmoments.catalog.report import InequalityReport
from qmoments.hilbert import HilbertSpace, State, embed, identity, pauli, tensor
from qmoments.instances import random_hermitian, random_pure, random_state

seeds = st.integers(0, 2**32 - 1)
TWO = HilbertSpace.qubits(2)


def _singlet():
    return State.pure(TWO, np.array([0, 1, -1, 0]) / math.sqrt(2))


def _ghz_pairs(n):
    sp = HilbertSpace.qubits(n)
    psi = np.zeros(2**n)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return State.pure(sp, psi), [(embed(pauli(1), k, sp), embed(pauli(2), k, sp)) for k in range(n)]


# reports


def test_report_margins():
    r = InequalityReport("x", 2.0, 1.0)
    assert r.margin == -1 and r.violated
    assert not InequalityReport("x", 1.0, 1.0 - 1e-10).violated
    eq = InequalityReport("x", 1.0, -1.0, kind="equality")
    assert eq.margin == -2 and eq.violated
    na = InequalityReport("x", 5.0, 0.0, applicable=False)
    assert na.margin == 0 and not na.violated
    with pytest.raises(ValueError):
        InequalityReport("x", math.nan, 0.0)
    with pytest.raises(ValueError):
        InequalityReport("x", 0.0, 0.0, kind="other")


def test_report_json_encoding():
    r = InequalityReport("x", 0.0, 1.0, details={"big": -21772303951061875, "c": 1 + 2j, "v": np.arange(2)})
    d = r.to_json()["details"]
    assert d["big"] == "-21772303951061875"
    assert d["c"] == {"re": 1.0, "im": 2.0}
    assert d["v"] == [0, 1]


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.sampled_from(["inequality", "equality"]))
def test_violated_iff_margin_below_tolerance(lhs, rhs, kind):
    r = InequalityReport("x", lhs, rhs, kind=kind)
    assert r.violated == (r.margin < -r.tolerance)


# Tsirelson


def test_tsirelson_saturates():
    s1, s3 = pauli(1), pauli(3)
    A1, A2 = embed(s3, 0, TWO), embed(s1, 0, TWO)
    B1 = embed(-(s3 + s1) / math.sqrt(2), 1, TWO)
    B2 = embed(-(s3 - s1) / math.sqrt(2), 1, TWO)
    r = tsirelson_check(_singlet(), A1, A2, B1, B2)
    assert r.lhs == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert abs(r.margin) <= 1e-9 and not r.violated


def test_tsirelson_product_state():
    up = State.pure(TWO, [1, 0, 0, 0])
    z0, z1 = embed(pauli(3), 0, TWO), embed(pauli(3), 1, TWO)
    r = tsirelson_check(up, z0, z0, z1, z1)
    assert r.lhs <= 2 < r.rhs


def test_tsirelson_rejects_noncommuting():
    x0, z0 = embed(pauli(1), 0, TWO), embed(pauli(3), 0, TWO)
    with pytest.raises(ValueError):
        tsirelson_check(_singlet(), x0, x0, z0, z0)


@given(seeds)
def test_tsirelson_never_violated(seed):
    rng = np.random.default_rng(seed)
    loc = HilbertSpace((2,))
    ops = []
    for slot in (0, 0, 1, 1):
        h = random_hermitian(rng, loc)
        ops.append(embed(h / math.sqrt(np.trace(h.matrix @ h.matrix).real / 2), slot, TWO))
    assert tsirelson_check(random_state(rng, TWO), *ops).margin >= -1e-9


# GHZ


def test_ghz_canonical():
    r = ghz_test()
    assert r.details["A1A2A3"] == pytest.approx(1, abs=1e-12)
    assert r.details["B1B2B3"] == pytest.approx(1, abs=1e-12)
    assert r.details["commutation_residual"] <= 1e-12
    assert r.margin == pytest.approx(-2, abs=1e-12) and r.violated


def test_ghz_product_state_premise_fails():
    sp = HilbertSpace.qubits(3)
    prod = State.pure(sp, np.eye(8)[0])
    r = ghz_test(prod)
    assert not r.applicable and not r.violated
    assert max(abs(x) for x in r.details["sum_squares"]) > 0.5


def test_ghz_wrong_sign_breaks_premise():
    r = ghz_test(obs=ghz_observables(b_sign=-1.0))
    assert not r.applicable


# Mermin-Peres


def test_square_structure():
    sq = mermin_peres_square()
    one = identity(TWO)
    for i in range(3):
        assert sq.row(i).allclose(one) and sq.column(i).allclose(-one)
    for row in sq.entries:
        for m in row:
            assert (m @ m).allclose(one)


def test_square_rejects_noncommuting_rows():
    sq = mermin_peres_square()
    bad = [list(r) for r in sq.entries]
    bad[0][0] = tensor(pauli(3), identity(HilbertSpace((2,))))
    with pytest.raises(SquareError):
        MerminPeresSquare(tuple(tuple(r) for r in bad))


def test_mp_maximally_mixed():
    r = mp_inequality(State.maximally_mixed(TWO))
    assert r.lhs == pytest.approx(6, abs=1e-10)
    assert r.rhs == pytest.approx(3 * math.sqrt(3), abs=1e-10)
    assert r.violated


def test_mp_state_independence():
    rng = np.random.default_rng(2)
    lhs = [mp_inequality(random_pure(rng, TWO)).lhs for _ in range(100)]
    assert np.std(lhs) <= 1e-10


def test_det_identity_examples():
    assert det_identity_check(np.ones((3, 3))) == pytest.approx((0.0, 0.0), abs=1e-12)
    # brute force over +-1 tables: classical values never reach the quantum 6
    best = max(abs(s_value(np.array(s).reshape(3, 3))) for s in itertools.product((1, -1), repeat=9))
    assert best == 4


@given(st.lists(st.floats(-10, 10), min_size=9, max_size=9))
def test_det_identity_property(entries):
    S, det = det_identity_check(np.array(entries).reshape(3, 3))
    assert abs(S - det) <= 1e-12 * (1 + abs(det)) * 100


def test_classical_mp_monte_carlo():
    r = classical_mp_check(100_000, seed=0)
    assert r.details["identity_gap"] <= 1e-12
    assert r.details["cauchy_step_max_excess"] <= 1e-9
    assert r.details["holder_step_max_excess"] <= 1e-9
    assert not r.violated


# five-observable cyclic model


def test_five_cycle_canonical():
    m = canonical_model()
    assert max(m.constraint_residuals()) <= 1e-12
    assert m.hermiticity_residual() <= 1e-12
    assert m.commutation_residual() <= 1e-12
    assert max(m.fourier_relation_residuals()) <= 1e-12
    assert m.round_trip_residual() <= 1e-12
    r = appendix_d_test(m, classical_vectors=100_000)
    assert abs(r.details["S"]) <= 1e-12
    assert r.lhs == pytest.approx(8 * (math.sqrt(5) - 1), abs=1e-10)
    assert r.details["classical_max_abs_Q"] <= 1e-12 * 1e2
    assert r.violated


def test_five_cycle_bad_parameters():
    with pytest.raises(ValueError):
        AppendixDModel(a=1.0, b=1.0, c=1.0)


def test_classical_q_vanishes():
    assert classical_q_check(100_000, seed=1) < 1e-10


# CFRD


def test_two_party_zero_operators():
    r = cfrd_two_party(_singlet(), [], [])
    assert r.lhs == 0 and r.rhs == 0


def test_two_party_reduces_to_two_setting():
    rng = np.random.default_rng(12)
    st_ = random_state(rng, TWO)
    loc = HilbertSpace((2,))
    A1, A2 = (embed(random_hermitian(rng, loc), 0, TWO) for _ in range(2))
    B1, B2 = (embed(random_hermitian(rng, loc), 1, TWO) for _ in range(2))
    full = cfrd_two_party(st_, [(A1, None), (A2, None)], [(B1, None), (B2, None)])
    two_setting = cfrd_two_setting(st_, A1, A2, B1, -B2)
    assert full.lhs == pytest.approx(two_setting.lhs, abs=1e-12)
    assert full.rhs == pytest.approx(two_setting.rhs, abs=1e-12)


def test_two_setting_bell_quadratures():
    st_, pairs = _ghz_pairs(2)
    (x0, y0), (x1, y1) = pairs
    r = cfrd_two_setting(st_, x0, y0, x1, y1)
    assert r.margin >= -1e-12


@given(seeds)
def test_two_party_never_violated(seed):
    rng = np.random.default_rng(seed)
    da, db = (int(x) for x in rng.integers(2, 5, size=2))
    sp = HilbertSpace((da, db))

    def pair(slot):
        loc = HilbertSpace((sp.factor_dims[slot],))
        return tuple(embed(random_hermitian(rng, loc), slot, sp) for _ in range(2))

    r = cfrd_two_party(random_state(rng, sp), [pair(0) for _ in range(4)], [pair(1) for _ in range(4)])
    assert r.margin >= -1e-9


def test_ghz_tripartite_and_quadripartite():
    st3, p3 = _ghz_pairs(3)
    r3 = tripartite_cfrd(st3, *p3)
    assert (r3.lhs, r3.rhs) == (pytest.approx(16, abs=1e-10), pytest.approx(8, abs=1e-10))
    st4, p4 = _ghz_pairs(4)
    r4 = quadripartite_cfrd(st4, *p4)
    assert (r4.lhs, r4.rhs) == (pytest.approx(64, abs=1e-10), pytest.approx(16, abs=1e-10))


def test_tripartite_product_state():
    sp = HilbertSpace.qubits(3)
    prod = State.pure(sp, np.eye(8)[0])
    _, pairs = _ghz_pairs(3)
    assert tripartite_cfrd(prod, *pairs).lhs == pytest.approx(0, abs=1e-12)


def test_reference_z_violates():
    r = quadripartite_cfrd(z=REFERENCE_Z)
    assert r.violated
    assert r.details["renormalized"]
    assert r.details["norm_residual"] == pytest.approx(1.45e-7, rel=0.05)
    assert max(r.details["route_gaps"].values()) <= 1e-12
    assert r.params["cutoff"] == 11


def test_vacuum_not_violated():
    r = quadripartite_cfrd(z=[1.0] + [0.0] * 5)
    assert r.lhs == 0 and r.rhs == pytest.approx(0.25) and not r.violated


def test_fock_cutoff_errors():
    with pytest.raises(ValueError):
        quadripartite_cfrd(z=REFERENCE_Z, cutoff=10)
    with pytest.raises(ValueError):
        quadripartite_cfrd()
    with pytest.raises(ValueError):
        normalize_z([0.0, 0.0])


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=8).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_fock_routes_agree(z):
    r = quadripartite_cfrd(z=z)
    assert max(r.details["route_gaps"].values()) <= 1e-12 * max(1.0, r.rhs)
    route = fock_operator_route(r.details["z"], len(z) + 2)
    # extra guard levels do not change anything
    assert abs(route["ABCD"] - r.lhs) <= 1e-12 * max(1.0, r.rhs)


def test_m_matrix_small():
    M, det = m_matrix(0)
    assert np.allclose(M, [[0.25]]) and det == 1
    M, det = m_matrix(3)
    assert M[2, 3] == -4.5 and M[3, 3] == 12.25
    assert det == round(np.linalg.det(4 * M))


def test_oscillator_bound_examples():
    r = oscillator_tripartite_bound([1.0, 0.0, 0.0])
    assert r.lhs == 0
    u = oscillator_tripartite_bound(np.ones(11))
    # z_n^2 = 1/11: rhs = (161/4)(11/2), lhs = (sum n^1.5 / 11)^2
    assert u.rhs == pytest.approx(float(Fraction(161, 4) * Fraction(11, 2)), rel=1e-14)
    assert u.lhs == pytest.approx(168.22634902117449, rel=1e-13)
    assert not u.violated
    with pytest.raises(ValueError):
        oscillator_tripartite_bound([1.0, -0.5])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50).filter(lambda v: sum(v) > 1e-6))
def test_oscillator_bound_never_violated(z):
    assert oscillator_tripartite_bound(z).margin >= -1e-12 * 100
