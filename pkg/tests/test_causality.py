from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retrosim.causality import (COVARIANT, GENERIC, analytic_probability, copy_probability,
                                erasure_classifier, max_probability, max_probability_covariant,
                                max_probability_generic, probability_for_state, residual_min_eig,
                                verify_lower_bounds)
from retrosim.channels import (ChoiOperator, Erasure, Estimation, IdealClassical, Identity, Kraus,
                               QuantumState, SymmetricTrace, UniversalCloning, UniversalNot, choi_of,
                               embedded_choi, random_erasure_channel, random_kraus_channel,
                               random_mp_channel)
from retrosim.errors import PreconditionError
from retrosim.sampling import random_density_matrix

from oracles import grid_min_lambda


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_ideal_channels_both_paths(d):
    for spec, p in [(Identity(d), 1 / d ** 2), (IdealClassical(d), 1 / d)]:
        c = choi_of(spec)
        cov = max_probability_covariant(c)
        gen = max_probability_generic(c)
        assert cov.method == COVARIANT and gen.method == GENERIC
        assert abs(cov.p_max - p) <= 1e-6 and abs(gen.p_max - p) <= 1e-6
        assert cov.feasible and gen.feasible


@pytest.mark.parametrize("d", [2, 3, 4])
def test_estimation_and_unot(d):
    for spec, p in [(Estimation(d), 1 / d), (UniversalNot(d), 1 - 1 / d ** 2)]:
        for method in ("covariant", "generic"):
            assert abs(max_probability(choi_of(spec), method).p_max - p) <= 1e-6


@pytest.mark.parametrize("d", [2, 3, 4])
def test_two_copy_unrestricted(d):
    c = choi_of(SymmetricTrace(d, 2, 1, symmetric_domain=False))
    assert abs(max_probability(c, "covariant").p_max - 2 / (d * (d + 1))) <= 1e-9
    assert abs(max_probability(c, "generic").p_max - 2 / (d * (d + 1))) <= 1e-9


@pytest.mark.parametrize("d,n", [(d, n) for d in (2, 3) for n in range(1, 7)])
def test_n_to_one_generic_solver(d, n):
    cert = max_probability_generic(choi_of(SymmetricTrace(d, n, 1)))
    assert abs(cert.p_max - n / (d * (d + n - 1))) <= 1e-9
    assert cert.feasible and cert.near_optimal(1e-6)


def test_n_to_one_monotone_with_gap():
    for d in (2, 3):
        seq = [copy_probability(d, n, 1) for n in range(1, 21)]
        assert all(a < b for a, b in zip(seq, seq[1:]))
        for n, p in enumerate(seq, start=1):
            assert p == Fraction(n, d * (d + n - 1))
            assert Fraction(1, d) - p == Fraction(d - 1, d * (d + n - 1))


def test_copy_probability_symmetry_exact():
    for d in (2, 3, 4):
        for n in range(7):
            for m in range(7):
                assert copy_probability(d, n, m) == copy_probability(d, m, n)


@pytest.mark.parametrize("n,m", [(n, m) for n in range(1, 6) for m in range(1, 6)])
def test_general_copy_channels_match_closed_form(n, m):
    spec = SymmetricTrace(2, n, m) if m <= n else UniversalCloning(2, n, m)
    c = choi_of(spec)
    expected = float(copy_probability(2, n, m))
    assert abs(max_probability(c, "generic").p_max - expected) <= 1e-9
    assert abs(max_probability(c, "covariant").p_max - expected) <= 1e-12


def test_embedded_and_compressed_forms_agree():
    for spec in (SymmetricTrace(2, 3, 1), UniversalCloning(2, 1, 2)):
        p_full = max_probability_generic(embedded_choi(spec)).p_max
        assert abs(p_full - float(copy_probability(spec.d, spec.N, spec.M))) <= 1e-8


@pytest.mark.parametrize("seed", [11, 12])
def test_generic_solver_against_bloch_grid(seed):
    spec = random_kraus_channel(2, 2, 2, np.random.default_rng(seed))
    c = choi_of(spec)
    cert = max_probability_generic(c)
    assert cert.feasible
    grid = grid_min_lambda(c.matrix)
    assert abs(cert.p_max - grid) <= 1e-4
    # the grid can only approach the optimum from below
    assert cert.p_max >= grid - 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_certificate_brackets_optimum(seed):
    rng = np.random.default_rng(seed)
    c = choi_of(random_kraus_channel(3, 2, 3, rng))
    cert = max_probability_generic(c)
    assert cert.feasible and cert.near_optimal(1e-6)
    assert cert.p_upper >= cert.p_max
    # a slightly larger p is infeasible at the returned rho0
    assert residual_min_eig(c, cert.p_max * (1 + 1e-6), cert.rho0) < 0
    # no random full-rank state does better
    for _ in range(20):
        assert probability_for_state(c, random_density_matrix(2, rng)) <= cert.p_max + 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 3), st.integers(2, 3), st.integers(0, 2 ** 32 - 1))
def test_lower_bounds_and_unit_ceiling(d_in, d_out, seed):
    rng = np.random.default_rng(seed)
    for spec in (random_kraus_channel(d_in, d_out, 2, rng), random_mp_channel(d_in, d_out, rng=rng)):
        cert = max_probability_generic(choi_of(spec))
        assert cert.p_max <= 1 + 1e-12
        assert verify_lower_bounds(spec, cert).passed


def test_lower_bound_refinements_are_reported():
    spec = IdealClassical(3)
    rep = verify_lower_bounds(spec, max_probability(choi_of(spec)))
    assert rep.passed and set(rep.bounds) == {"quantum", "classical", "measure_prepare"}
    assert abs(rep.margins["classical"]) < 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_probability_one_iff_erasure(seed):
    rng = np.random.default_rng(100 + seed)
    e = random_erasure_channel(2 + seed % 2, 2, rng=rng)
    cert = max_probability_generic(choi_of(e))
    assert cert.p_max == 1.0 and cert.feasible
    assert erasure_classifier(choi_of(e))
    other = choi_of(random_kraus_channel(2, 2 + seed % 2, 2, rng))
    assert not erasure_classifier(other)
    assert max_probability_generic(other).p_max < 1 - 1e-6


def test_completely_depolarising_channel_is_erasure():
    d = 2
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    spec = Kraus(tuple(p / 2 for p in paulis))
    c = choi_of(spec)
    assert erasure_classifier(c)
    assert np.allclose(c.matrix, np.eye(d * d) / d)
    assert max_probability_generic(c).p_max == 1.0


def test_zero_choi_edge_case():
    c = ChoiOperator(np.zeros((4, 4)), 2, 2)
    for method in ("covariant", "generic", "auto"):
        assert max_probability(c, method).p_max == 1.0


def test_covariant_path_requires_symmetry(rng):
    with pytest.raises(PreconditionError):
        max_probability_covariant(choi_of(random_kraus_channel(2, 2, 2, rng)))
    c = choi_of(Identity(2))
    broken = c.with_matrix(c.matrix + 1e-2 * np.diag([1, 0, 0, -1]))
    with pytest.raises(PreconditionError):
        max_probability_covariant(broken)
    # auto falls back to the generic solver
    assert max_probability(broken).method == GENERIC


def test_unknown_method():
    with pytest.raises(ValueError):
        max_probability(choi_of(Identity(2)), "bisection")


def test_analytic_catalog():
    assert analytic_probability(Identity(3)) == Fraction(1, 9)
    assert analytic_probability(UniversalNot(2)) == Fraction(3, 4)
    assert analytic_probability(SymmetricTrace(2, 2, 1, symmetric_domain=False)) == Fraction(1, 3)
    assert analytic_probability(SymmetricTrace(2, 3, 1)) == Fraction(3, 8)
    assert analytic_probability(UniversalCloning(2, 1, 3)) == Fraction(3, 8)
    assert analytic_probability(Erasure(QuantumState(np.eye(2) / 2))) == 1
    assert analytic_probability(Kraus((np.eye(2),))) is None


def test_probability_for_state_rejects_singular_state():
    with pytest.raises(PreconditionError):
        probability_for_state(choi_of(Identity(2)), np.diag([1.0, 0.0]))


@pytest.mark.parametrize("spec", [Identity(3), IdealClassical(2), Estimation(3), UniversalNot(2),
                                  SymmetricTrace(3, 3, 2), UniversalCloning(2, 2, 3),
                                  SymmetricTrace(2, 2, 1, symmetric_domain=False)], ids=repr)
def test_trace_program_matches_eigenvalue_program(spec):
    # 1 / min Tr X over X (x) I >= C against 1 / min_rho lambda_max((rho^-1/2 (x) I) C (rho^-1/2 (x) I))
    c = choi_of(spec)
    gen = max_probability_generic(c)
    assert gen.p_upper == pytest.approx(gen.p_max, rel=1e-8)
    assert probability_for_state(c, gen.rho0) == pytest.approx(gen.p_max, rel=1e-12)
    assert gen.p_max == pytest.approx(max_probability_covariant(c).p_max, rel=1e-9)
