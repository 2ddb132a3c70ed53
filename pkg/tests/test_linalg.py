import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retrosim.channels import choi_of, max_entangled, SymmetricTrace
from retrosim.errors import CapacityError, ContractViolation, DimensionError
from retrosim.linalg import (double_ket, eigvalsh_desc, from_double_ket, hermitian_eig, kron,
                             partial_trace, partial_transpose, permute_factors, pinv_sqrt_psd,
                             psd_check, sqrt_psd)
from retrosim.sampling import ginibre, random_density_matrix, random_hermitian
from retrosim.symmetric import symmetric_projector

from oracles import kron_loops, partial_trace_last


def complex_matrices(rows, cols):
    entry = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
    return st.lists(entry, min_size=rows * cols, max_size=rows * cols).map(
        lambda xs: np.array(xs, dtype=complex).reshape(rows, cols))


def test_kron_identity_and_diagonal():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(kron(np.diag([1, 2]), np.diag([3, 4])), np.diag([3, 4, 6, 8]))


def test_kron_matches_four_index_loop(rng):
    x, y = ginibre(2, 2, rng), ginibre(2, 2, rng)
    assert np.allclose(kron(x, y), kron_loops(x, y), atol=0)
    a, b = ginibre(2, 3, rng), ginibre(3, 2, rng)
    assert np.allclose(kron(a, b), kron_loops(a, b), atol=0)


def test_kron_capacity():
    with pytest.raises(CapacityError):
        kron(np.eye(64), np.eye(64), max_dim=1000)


@settings(max_examples=30, deadline=None)
@given(complex_matrices(2, 2), complex_matrices(2, 3), complex_matrices(3, 2))
def test_kron_associative(a, b, c):
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)))


def test_partial_trace_product_state(rng):
    rho, sigma = random_density_matrix(3, rng), 2.5 * random_density_matrix(2, rng)
    assert np.allclose(partial_trace(np.kron(rho, sigma), [3, 2], keep={0}), 2.5 * rho)
    assert np.allclose(partial_trace(np.kron(rho, sigma), [3, 2], keep={1}), sigma)


def test_partial_trace_of_max_entangled_is_identity():
    assert np.allclose(partial_trace(max_entangled(3), [3, 3], keep={0}), np.eye(3))


def test_partial_trace_of_symmetric_projector():
    # traces the first factor of P+ on three qubits
    p3 = symmetric_projector(2, 3).projector
    p2 = symmetric_projector(2, 2).projector
    assert np.allclose(partial_trace(p3, [2, 2, 2], keep={1, 2}), 4 / 3 * p2, atol=1e-12)


def test_partial_trace_matches_loop_and_keeps_order(rng):
    op = ginibre(12, 12, rng)
    assert np.allclose(partial_trace(op, [4, 3], keep=[0]), partial_trace_last(op, 4, 3))
    a, b, c = (random_density_matrix(k, rng) for k in (2, 3, 2))
    full = np.kron(np.kron(a, b), c)
    assert np.allclose(partial_trace(full, [2, 3, 2], keep=[2, 0]), np.kron(a, c))
    assert np.isclose(partial_trace(full, [2, 3, 2], keep=[]).item(), 1)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(6), [2, 2], keep=[0])


@settings(max_examples=25, deadline=None)
@given(complex_matrices(6, 6), complex_matrices(6, 6), st.floats(-3, 3))
def test_partial_trace_linear_and_trace_preserving(x, y, t):
    lhs = partial_trace(x + t * y, [2, 3], keep=[1])
    rhs = partial_trace(x, [2, 3], keep=[1]) + t * partial_trace(y, [2, 3], keep=[1])
    assert np.allclose(lhs, rhs, atol=1e-9)
    assert np.isclose(np.trace(partial_trace(x, [2, 3], keep=[0])), np.trace(x))


def test_permute_and_partial_transpose(rng):
    a, b = ginibre(2, 2, rng), ginibre(3, 3, rng)
    assert np.allclose(permute_factors(np.kron(a, b), [2, 3], [1, 0]), np.kron(b, a))
    assert np.allclose(partial_transpose(np.kron(a, b), [2, 3], [1]), np.kron(a, b.T))


def test_hermitian_eig_examples():
    assert np.allclose(hermitian_eig(np.diag([3.0, 1.0, 2.0])).eigenvalues, [3, 2, 1])
    assert np.allclose(eigvalsh_desc(max_entangled(2)), [2, 0, 0, 0], atol=1e-12)
    w = eigvalsh_desc(choi_of(SymmetricTrace(3, 2, 1, symmetric_domain=False)).matrix)
    assert np.isclose(w[0], 2)
    assert np.isclose(min(x for x in w if x > 1e-9), 1)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(ContractViolation):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("d", [2, 5, 17])
def test_hermitian_eig_reconstruction(d, rng):
    h = random_hermitian(d, rng) * 7
    w, v = hermitian_eig(h)
    assert np.all(np.diff(w) <= 0)
    assert np.linalg.norm((v * w) @ v.conj().T - h) <= 1e-9 * np.linalg.norm(h)
    assert np.allclose(v.conj().T @ v, np.eye(d), atol=1e-9)


def test_double_ket_examples(rng):
    assert np.array_equal(double_ket(np.eye(2)).ravel(), [1, 0, 0, 1])
    c, dd = ginibre(3, 3, rng), ginibre(3, 3, rng)
    assert np.isclose(np.vdot(double_ket(c), double_ket(dd)), np.trace(c.conj().T @ dd))


@settings(max_examples=40, deadline=None)
@given(complex_matrices(2, 3), complex_matrices(4, 2), complex_matrices(3, 2))
def test_double_ket_algebra(a, b, c):
    # (A (x) B)|C>> = |A C B^T>> with C of shape 3 x 2 mapping into 2 x 4
    assert np.allclose(kron(a, b) @ double_ket(c), double_ket(a @ c @ b.T), atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(complex_matrices(3, 4))
def test_double_ket_bijection_and_norm(c):
    v = double_ket(c)
    assert np.array_equal(from_double_ket(v, 3, 4), c)
    assert np.isclose(np.vdot(v, v).real, np.linalg.norm(c) ** 2)


def test_psd_check_examples():
    assert psd_check(np.eye(3)) == (True, 1.0)
    ok, lo = psd_check(np.diag([1, -1e-6]), tol=1e-9)
    assert not ok and np.isclose(lo, -1e-6)
    # identity channel saturates its bound at p = 1/d^2
    d = 3
    ok, lo = psd_check(np.kron(np.eye(d) / d, np.eye(d)) - max_entangled(d) / d ** 2)
    assert ok and abs(lo) < 1e-12


def test_sqrt_examples(rng):
    assert np.allclose(sqrt_psd(np.diag([4.0, 9.0])), np.diag([2, 3]))
    assert np.allclose(pinv_sqrt_psd(np.diag([4.0, 0.0])), np.diag([0.5, 0]))
    rho = random_density_matrix(4, rng)
    s = sqrt_psd(rho)
    assert np.max(np.abs(s @ s - rho)) < 1e-10
    with pytest.raises(ContractViolation):
        sqrt_psd(np.diag([1.0, -1e-3]))
