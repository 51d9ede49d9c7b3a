import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from outlab import linalg
from outlab.ensembles import (
    PerturbedModel,
    assemble_dense,
    jordan_block,
    low_rank_from_block,
    low_rank_from_diag,
    mean_shift_factors,
    sample_iid_matrix,
    unit_ones_vector,
)
from outlab.errors import (
    ContourError,
    InvalidDimensionError,
    InvalidParameterError,
    PoleError,
    ResolventSingularError,
)
from outlab.outlier import (
    AnnulusRegion,
    Box,
    WeinsteinDeterminant,
    box_contour,
    char_poly_ratio_oracle,
    circle,
    comparator_rational,
    detect_outliers,
    guard_order,
    jensen_log_integral,
    locate_zeros,
    log_plus_reciprocal,
    match_outliers,
    outlier_eigenvector,
    spectral_radius_guard,
    weinstein_det,
    winding_number,
)
from oracles import cofactor_det


def zero_model(n, leading):
    A, B = low_rank_from_diag(n, leading)
    return PerturbedModel(np.zeros((n, n)), A, B)


def random_model(n, k, seed):
    rng = np.random.default_rng(seed)
    X = sample_iid_matrix(n, "gaussian_complex", seed, 0)
    A = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) * 2 / math.sqrt(n)
    B = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
    return PerturbedModel(X, A, B)


# regions


def test_annulus_validation():
    with pytest.raises(InvalidParameterError):
        AnnulusRegion(0.9, 2.0)
    with pytest.raises(InvalidParameterError):
        AnnulusRegion(2.0, 1.5)
    assert AnnulusRegion.from_epsilon(0.1, 5).r_min == pytest.approx(1.2)


# determinant evaluations


def test_weinstein_zero_base():
    m = zero_model(5, [3])
    assert weinstein_det(m, 6) == pytest.approx(0.5)
    assert abs(weinstein_det(m, 3)) < 1e-15


def test_weinstein_small_against_direct_determinants():
    n = 4
    X = sample_iid_matrix(n, "rademacher", 11, 0)
    A, B = low_rank_from_diag(n, [3])
    m = PerturbedModel(X, A, B)
    base = X / 2
    ref = cofactor_det(base + A @ B - 2 * np.eye(n)) / cofactor_det(base - 2 * np.eye(n))
    assert abs(weinstein_det(m, 2.0) - ref) <= 1e-12 * (1 + abs(ref))
    assert abs(WeinsteinDeterminant(m)(2.0) - ref) <= 1e-12 * (1 + abs(ref))


def test_weinstein_resolvent_singular_propagates():
    n = 4
    m = PerturbedModel(math.sqrt(n) * 2 * np.eye(n), *low_rank_from_diag(n, [1]))
    with pytest.raises(ResolventSingularError) as info:
        weinstein_det(m, 2.0)
    assert info.value.z == 2.0


def test_comparator_examples():
    assert comparator_rational([3], 3) == 0
    assert comparator_rational([2], 4) == pytest.approx(0.5)
    assert abs(comparator_rational([2 + 1j, 3, 2], 1e6) - 1) <= 1e-5
    with pytest.raises(PoleError):
        comparator_rational([1], 0)


def test_oracle_examples():
    m = zero_model(5, [3])
    assert char_poly_ratio_oracle(m, 6) == pytest.approx(0.5)
    X = sample_iid_matrix(6, "rademacher", 0, 0)
    empty = PerturbedModel(X, np.zeros((6, 0)), np.zeros((0, 6)))
    assert char_poly_ratio_oracle(empty, 2.5 + 1j) == 1
    big = PerturbedModel(np.zeros((600, 600)), *low_rank_from_diag(600, [1]))
    with pytest.raises(InvalidDimensionError):
        char_poly_ratio_oracle(big, 3)


@given(st.integers(2, 60), st.integers(1, 3), st.integers(0, 10 ** 6),
       st.floats(1.5, 5.0), st.floats(-math.pi, math.pi))
def test_oracle_equivalence_property(n, k, seed, r, theta):
    m = random_model(n, min(k, n), seed)
    if spectral_radius_guard(m.base, 0.2)[0] >= 1.4:
        return
    z = r * complex(math.cos(theta), math.sin(theta))
    ref = char_poly_ratio_oracle(m, z)
    assert abs(weinstein_det(m, z) - ref) <= 1e-8 * (1 + abs(ref))
    assert abs(WeinsteinDeterminant(m)(z) - ref) <= 1e-8 * (1 + abs(ref))


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_zero_base_degenerates_to_comparator(k, seed):
    rng = np.random.default_rng(seed)
    leading = rng.standard_normal(k) * 3 + 1j * rng.standard_normal(k)
    m = zero_model(8, leading)
    for z in (5 + 1j, -7.0, 2j * 9):
        assert abs(weinstein_det(m, z) - comparator_rational(leading, z)) <= 1e-12


def test_normalization_at_infinity_decays():
    m = random_model(30, 2, 4)
    gaps = [abs(weinstein_det(m, r * np.exp(0.3j)) - 1) for r in (1e2, 1e3, 1e4)]
    assert 8 <= gaps[0] / gaps[1] <= 12.5
    assert 8 <= gaps[1] / gaps[2] <= 12.5


def test_evaluator_vectorized():
    m = random_model(20, 2, 1)
    f = WeinsteinDeterminant(m)
    zs = np.array([[2.0, 3j], [-2.5, 1.8 + 1.8j]])
    out = f(zs)
    assert out.shape == zs.shape
    assert all(abs(out[i] - weinstein_det(m, z)) < 1e-12 for i, z in np.ndenumerate(zs))


# winding numbers


def test_winding_examples():
    assert winding_number(lambda z: z - 3, circle(3, 1)) == 1
    assert winding_number(lambda z: (z - 2) * (z - 3), circle(0, 4)) == 2
    assert winding_number(lambda z: 1 - 3 / z, box_contour(Box(2.5, 3.5, -0.5, 0.5))) == 1


def test_winding_counts_poles_negatively():
    assert winding_number(lambda z: 1 - 3 / z, circle(0, 1)) == -1


def test_winding_through_zero_raises():
    with pytest.raises(ContourError):
        winding_number(lambda z: z - 1, circle(0, 1))


@given(st.lists(st.tuples(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9)), min_size=0, max_size=6),
       st.floats(0.2, 0.8))
def test_winding_counts_polynomial_roots(roots, radius):
    zs = np.array([complex(a, b) for a, b in roots])
    if zs.size and np.min(np.abs(np.abs(zs) - radius)) < 1e-3:
        return
    fn = (lambda z: np.prod(z[..., None] - zs, axis=-1)) if zs.size else (lambda z: np.ones_like(z))
    assert winding_number(fn, circle(0, radius)) == int(np.sum(np.abs(zs) < radius))


# zero location


def test_locate_single_zero():
    zeros = locate_zeros(lambda z: 1 - 3 / z, AnnulusRegion(1.2, 5))
    assert len(zeros) == 1
    assert abs(zeros[0].position - 3) <= 1e-9 and zeros[0].multiplicity == 1
    assert zeros[0].residual <= 1e-10


def test_locate_double_zero():
    zeros = locate_zeros(lambda z: (1 - 3 / z) ** 2, AnnulusRegion(1.2, 5))
    assert len(zeros) == 1
    assert zeros[0].multiplicity == 2
    assert abs(zeros[0].position - 3) <= 1e-4


def test_locate_in_box():
    zeros = locate_zeros(lambda z: (z - 0.3) * (z + 0.2j) * (z - 1), Box(-0.5, 0.6, -0.5, 0.5))
    pos = sorted((z.position for z in zeros), key=lambda c: c.real)
    assert len(pos) == 2
    assert abs(pos[0] + 0.2j) < 1e-9 and abs(pos[1] - 0.3) < 1e-9


def test_locate_zero_on_initial_boundary_is_recovered():
    # zero sits exactly on the outer circle of the annulus
    zeros = locate_zeros(lambda z: 1 - 2 / z, AnnulusRegion(1.2, 2.0))
    assert len(zeros) == 1 and abs(zeros[0].position - 2) < 1e-9


@pytest.mark.parametrize("seed", [0, 2, 3])
def test_locate_matches_dense_eigensolver(seed):
    n = 50
    X = sample_iid_matrix(n, "rademacher", seed, 0)
    # the search needs f analytic on the region: no bulk eigenvalue beyond 1.2
    assert spectral_radius_guard(X / math.sqrt(n), 0.1)[0] < 1.2
    m = PerturbedModel(X, *low_rank_from_diag(n, [2 + 1j, 3, 2]))
    region = AnnulusRegion(1.2, 8.0)
    zeros = locate_zeros(WeinsteinDeterminant(m), region)
    found = [z.position for z in zeros for _ in range(z.multiplicity)]
    eigs = linalg.eigenvalues(assemble_dense(m))
    inside = eigs[(np.abs(eigs) >= 1.2) & (np.abs(eigs) <= 8.0)]
    assert len(found) == inside.size
    assert linalg.matching_distance(found, inside) <= 1e-6


# detection


def test_guard_order():
    assert guard_order(0.1) == 39
    assert guard_order(0.3) == 9
    for eps in (0.05, 0.1, 0.5):
        m = guard_order(eps)
        assert m + 1 < (1 + eps) ** m and not (m < (1 + eps) ** (m - 1))


def test_guard_bounds_spectral_radius():
    for seed in range(3):
        X = sample_iid_matrix(100, "rademacher", seed, 0) / 10
        rho, _ = spectral_radius_guard(X, 0.1)
        assert rho >= np.abs(linalg.eigenvalues(X)).max() - 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_detect_figure_one(seed):
    n = 200
    X = sample_iid_matrix(n, "rademacher", seed, 0)
    m = PerturbedModel(X, *low_rank_from_diag(n, [2 + 1j, 3, 2]))
    report = detect_outliers(m, 0.1)
    assert report.guard_passed
    assert report.count == report.total_winding == 3
    match = match_outliers(report.positions, [2 + 1j, 3, 2])
    assert match.max_distance <= n ** -0.25
    eigs = linalg.eigenvalues(assemble_dense(m))
    assert linalg.matching_distance(report.positions, eigs[np.abs(eigs) >= 1.2]) <= 1e-6


def test_detect_without_perturbation():
    X = sample_iid_matrix(100, "rademacher", 0, 0)
    report = detect_outliers(PerturbedModel(X, np.zeros((100, 0)), np.zeros((0, 100))), 0.1)
    assert report.zeros == [] and report.count == 0


def test_detect_nilpotent_perturbation_creates_no_outliers():
    n = 200
    empty = 0
    for seed in range(5):
        X = sample_iid_matrix(n, "rademacher", seed, 0)
        m = PerturbedModel(X, *low_rank_from_block(n, jordan_block(3)))
        report = detect_outliers(m, 0.1)
        empty += report.guard_passed and report.count == 0
    assert empty >= 4


def test_detect_flags_failed_guard():
    n = 20
    X = 3 * math.sqrt(n) * np.eye(n)
    report = detect_outliers(PerturbedModel(X, *low_rank_from_diag(n, [5])), 0.1)
    assert not report.guard_passed and report.zeros == []


def test_detect_rejects_bad_epsilon():
    with pytest.raises(InvalidParameterError):
        detect_outliers(zero_model(4, [3]), 0.0)


def test_detect_mean_shift_far_outlier():
    n = 50
    X = sample_iid_matrix(n, "rademacher", 1, 0)
    m = PerturbedModel(X, *mean_shift_factors(n, 1.0))
    report = detect_outliers(m, 0.1, r_min=1.6)
    assert report.count == 1
    assert abs(report.positions[0] - math.sqrt(50)) <= 50 ** -0.25


# matching


def test_match_examples():
    res = match_outliers([3.01, 2.0 + 0.99j], [2 + 1j, 3])
    assert res.max_distance == pytest.approx(0.01)
    assert {(round(a.real, 2), round(b.real)) for a, b in res.pairs} == {(3.01, 3), (2.0, 2)}
    assert match_outliers([1, 2j], [2j, 1]).max_distance == 0
    assert match_outliers([], [3]).count_mismatch


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False), min_size=1, max_size=6),
       st.randoms())
def test_match_bottleneck_not_worse_than_min_sum(points, rnd):
    pred = [p + 0.1 * rnd.random() for p in points]
    rnd.shuffle(pred)
    bottleneck = match_outliers(points, pred).max_distance
    assert bottleneck <= linalg.matching_distance(points, pred) + 1e-12


# eigenvector and Jensen diagnostic


def test_eigenvector_zero_base():
    v = outlier_eigenvector(np.zeros((6, 6)), 2.0)
    assert np.allclose(v, unit_ones_vector(6))


def test_eigenvector_residual_and_delocalization():
    n = 500
    X = sample_iid_matrix(n, "rademacher", 3, 0)
    m = PerturbedModel(X, *mean_shift_factors(n, 1.0))
    report = detect_outliers(m, 0.1)
    z = report.zeros[0].position
    v = outlier_eigenvector(X, z)
    assert np.linalg.norm(m.matvec(v) - z * v) <= 1e-6
    assert np.linalg.norm(v - unit_ones_vector(n)) <= 5 / math.sqrt(n)


def test_eigenvector_rejects_zero():
    with pytest.raises(PoleError):
        outlier_eigenvector(np.zeros((3, 3)), 0)


def test_jensen_trivial_functions():
    assert jensen_log_integral(lambda z: np.ones_like(z), 0.1) == 0
    assert jensen_log_integral(lambda z: 10 * np.ones_like(z), 0.1) == 0


def test_jensen_integrand_point_value():
    assert log_plus_reciprocal(1 - 3 / 3.1) == pytest.approx(math.log(3.1 / 0.1))
    assert log_plus_reciprocal(0.0) == pytest.approx(math.log(1e15))


def test_jensen_integral_against_quadrature():
    eps = 0.1
    fn = lambda z: 1 - 1.35 / z  # noqa: E731
    val = jensen_log_integral(fn, eps, grid_resolution=256)
    r = np.linspace(1.2, 1.3, 801)
    t = np.linspace(-math.pi, math.pi, 1601)
    R, T = np.meshgrid(0.5 * (r[1:] + r[:-1]), 0.5 * (t[1:] + t[:-1]), indexing="ij")
    ref = np.sum(log_plus_reciprocal(fn(R * np.exp(1j * T))) * R) * (r[1] - r[0]) * (t[1] - t[0])
    assert val == pytest.approx(ref, rel=2e-2)
