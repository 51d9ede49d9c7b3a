import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from outlab import linalg
from outlab.errors import ConvergenceError, InvalidDimensionError, ResolventSingularError, SingularMatrixError
from outlab.outlier import Box, locate_zeros
from oracles import charpoly_coefficients, cofactor_det, dense_power_bilinear, permutation_det


def gaussian(n, seed, m=None, complex_=True):
    rng = np.random.default_rng(seed)
    shape = (n, m or n)
    M = rng.standard_normal(shape)
    return M + 1j * rng.standard_normal(shape) if complex_ else M


# lu_factor / solve / determinant


def test_lu_identity():
    f = linalg.lu_factor(np.eye(3))
    assert f.sign == 1 and list(f.perm) == [0, 1, 2] and not f.singular


def test_lu_swap_sign():
    f = linalg.lu_factor(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert f.sign == -1
    assert linalg.determinant(f) == pytest.approx(-1.0)


def test_lu_reconstruction():
    M = gaussian(8, 1)
    P, L, U = linalg.lu_factor(M).factors()
    assert np.abs(P @ L @ U - M).max() <= 1e-12 * np.abs(M).max()


def test_lu_rejects_non_square():
    with pytest.raises(InvalidDimensionError):
        linalg.lu_factor(np.zeros((2, 3)))


def test_singular_flag_and_solve_error():
    f = linalg.lu_factor(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert f.singular
    assert linalg.determinant(f) == 0
    with pytest.raises(SingularMatrixError):
        linalg.solve(f, np.ones(2))


@pytest.mark.parametrize("M, rhs, expected", [
    (np.eye(2), [1, 2], [1, 2]),
    (np.diag([2.0, 4.0]), [2, 4], [1, 1]),
])
def test_solve_small(M, rhs, expected):
    assert np.allclose(linalg.solve(linalg.lu_factor(M), np.array(rhs, float)), expected, atol=1e-15)


@given(st.integers(1, 25), st.integers(0, 2 ** 32 - 1))
def test_solve_residual_bound(n, seed):
    M = gaussian(n, seed)
    b = gaussian(n, seed + 1, 1)[:, 0]
    x = linalg.solve(linalg.lu_factor(M), b)
    bound = 1e-10 * (np.linalg.norm(M) * np.linalg.norm(x) + np.linalg.norm(b))
    assert np.linalg.norm(M @ x - b) <= bound


def test_determinant_diag():
    assert linalg.det(np.diag([2.0, 3.0])) == pytest.approx(6.0)


@pytest.mark.parametrize("seed", range(3))
def test_determinant_matches_cofactor_expansion(seed):
    M = gaussian(6, seed)
    ref = cofactor_det(M)
    assert abs(linalg.det(M) - ref) <= 1e-10 * abs(ref)
    assert abs(permutation_det(M) - ref) <= 1e-10 * abs(ref)


@given(st.integers(1, 12), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_sylvester_determinant_identity(n, k, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    B = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
    big, small = linalg.det(np.eye(n) + A @ B), linalg.det(np.eye(k) + B @ A)
    assert abs(big - small) <= 1e-9 * (1 + abs(small))


# eigenvalues


def test_eigenvalues_diag():
    assert np.allclose(np.sort_complex(linalg.eigenvalues(np.diag([2.0, 3.0]))), [2, 3])


def test_eigenvalues_companion():
    eigs = linalg.eigenvalues(np.array([[0.0, -6.0], [1.0, 5.0]]))
    assert linalg.matching_distance(eigs, [2, 3]) < 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_eigenvalues_match_characteristic_polynomial_roots(seed):
    M = gaussian(6, seed)
    coeffs, radius = charpoly_coefficients(M)
    poly = lambda z: np.polyval(coeffs, z)  # noqa: E731
    bound = radius + 0.1
    zeros = locate_zeros(poly, Box(-bound - 0.0123, bound, -bound - 0.0321, bound), tol=1e-9 * abs(coeffs).max())
    roots = [z.position for z in zeros for _ in range(z.multiplicity)]
    assert len(roots) == 6
    assert linalg.matching_distance(linalg.eigenvalues(M), roots) <= 1e-8


def test_eigenvalue_residual_via_singular_values():
    M = gaussian(12, 5)
    tol = 1e-10
    fro = np.linalg.norm(M)
    for lam in linalg.eigenvalues(M):
        assert linalg.singular_values(M - lam * np.eye(12))[-1] <= tol * fro


def test_eigenvalues_real_input():
    M = gaussian(30, 6, complex_=False)
    eigs = linalg.eigenvalues(M)
    # real matrices have conjugate-symmetric spectra
    assert linalg.matching_distance(eigs, eigs.conj()) < 1e-10


@given(st.integers(2, 30), st.integers(0, 2 ** 32 - 1))
def test_trace_and_similarity_invariance(n, seed):
    M = gaussian(n, seed)
    eigs = linalg.eigenvalues(M)
    assert abs(eigs.sum() - np.trace(M)) <= 1e-8 * np.linalg.norm(M)
    Q, _ = np.linalg.qr(gaussian(n, seed + 1))
    assert linalg.matching_distance(eigs, linalg.eigenvalues(Q.conj().T @ M @ Q)) <= 1e-7


@given(st.integers(2, 50), st.integers(0, 2 ** 32 - 1))
def test_eigen_product_is_determinant(n, seed):
    M = gaussian(n, seed) / math.sqrt(n) + 2 * np.eye(n)
    d = linalg.det(M)
    assert abs(np.prod(linalg.eigenvalues(M)) - d) <= 1e-7 * abs(d)


def test_eigenvalues_convergence_error_carries_partial():
    with pytest.raises(ConvergenceError) as info:
        linalg.eigenvalues(gaussian(20, 3), max_sweeps=2)
    assert info.value.partial is not None and info.value.partial.size < 20


# singular values and norms


def test_singular_values_rank_one():
    assert np.allclose(linalg.singular_values(np.ones((2, 2))), [2, 0], atol=1e-14)


def test_singular_values_identity():
    assert np.allclose(linalg.singular_values(np.eye(5)), 1)


@pytest.mark.parametrize("shape", [(7, 7), (9, 4), (3, 8)])
def test_singular_values_against_determinant_and_gram(shape):
    M = gaussian(shape[0], 11, shape[1])
    sv = linalg.singular_values(M)
    gram = M.conj().T @ M if shape[0] >= shape[1] else M @ M.conj().T
    ref = np.sqrt(np.sort(np.linalg.eigvalsh(gram))[::-1])
    assert np.allclose(sv, ref, rtol=1e-10)
    if shape[0] == shape[1]:
        d = abs(cofactor_det(M))
        assert abs(np.prod(sv) - d) <= 1e-9 * d


def test_operator_norm_small():
    assert linalg.operator_norm(np.eye(4)) == pytest.approx(1.0)
    assert linalg.operator_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0)


@pytest.mark.parametrize("seed", range(3))
def test_operator_norm_matches_top_singular_value(seed):
    tol = 1e-10
    M = gaussian(20, seed)
    s0 = linalg.singular_values(M)[0]
    assert abs(linalg.operator_norm(M, tol) - s0) <= 2 * tol * s0


def test_power_operator_norm_matches_explicit_power():
    M = gaussian(15, 4) / math.sqrt(15)
    ref = linalg.singular_values(np.linalg.matrix_power(M, 3))[0]
    assert linalg.power_operator_norm(M, 3, tol=1e-12) == pytest.approx(ref, rel=1e-10)


# resolvent and bilinear powers


def test_resolvent_zero_matrix():
    phi = np.full(4, 0.5)
    assert np.allclose(linalg.resolvent_solve(np.zeros((4, 4)), 2.0, phi), -phi / 2)


def test_resolvent_identity_base():
    n = 4
    out = linalg.resolvent_solve(math.sqrt(n) * np.eye(n), 3.0, np.eye(n)[0])
    assert np.allclose(out, -np.eye(n)[0] / 2)


def test_resolvent_residual():
    n = 10
    X = gaussian(n, 2)
    z = 1.7 - 0.4j
    b = gaussian(n, 3, 1)[:, 0]
    x = linalg.resolvent_solve(X, z, b)
    M = X / math.sqrt(n) - z * np.eye(n)
    assert np.linalg.norm(M @ x - b) <= 1e-10 * (np.linalg.norm(M) * np.linalg.norm(x) + np.linalg.norm(b))


def test_resolvent_singular():
    with pytest.raises(ResolventSingularError) as info:
        linalg.resolvent_solve(2.0 * np.eye(4), 1.0, np.ones(4))
    assert info.value.z == 1.0


def test_bilinear_power_cases():
    n = 5
    e1 = np.eye(n)[0]
    assert linalg.bilinear_power(math.sqrt(n) * np.eye(n), 3, e1, e1) == pytest.approx(1.0)
    assert linalg.bilinear_power(np.zeros((n, n)), 1, e1, e1) == 0
    u = gaussian(n, 1, 1)[:, 0]
    assert linalg.bilinear_power(gaussian(n, 0), 0, u, e1) == pytest.approx(np.vdot(e1, u))


def test_bilinear_power_matches_dense_power():
    X = gaussian(6, 9)
    u, v = gaussian(6, 10, 1)[:, 0], gaussian(6, 11, 1)[:, 0]
    assert abs(linalg.bilinear_power(X, 2, u, v) - dense_power_bilinear(X, 2, u, v)) <= 1e-12 * 10


def test_hessenberg_form_round_trip_and_solve():
    M = gaussian(25, 12)
    h = linalg.HessenbergForm(M)
    Q = h.from_hessenberg_basis(np.eye(25))
    assert np.abs(Q @ h.H @ Q.conj().T - M).max() < 1e-12
    z = 3.0 + 1j
    b = gaussian(25, 13, 2)
    y, logdet, phase = h.shifted_solve(z, h.to_hessenberg_basis(b))
    x = h.from_hessenberg_basis(y)
    assert np.abs((M - z * np.eye(25)) @ x - b).max() < 1e-11
    d = linalg.det(M - z * np.eye(25))
    assert logdet == pytest.approx(math.log(abs(d)), rel=1e-10)
    assert abs(phase - d / abs(d)) < 1e-10


# matching


def test_matching_distance_permutation_invariant():
    a = np.array([1, 2j, -3, 4 + 1j])
    assert linalg.matching_distance(a, a[::-1]) == 0
    assert linalg.matching_distance([0, 1], [1.1, 0.05]) == pytest.approx(0.1)


def test_matching_size_mismatch():
    with pytest.raises(ValueError):
        linalg.match_multisets([1], [1, 2])
