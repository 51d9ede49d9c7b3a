import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from outlab import linalg
from outlab.ensembles import row_sum_projector, sample_iid_matrix, unit_ones_vector
from outlab.errors import InvalidParameterError
from outlab.stats import (
    PowerSums,
    circular_law_distance,
    clt_samples,
    esd_histogram,
    gaussian_moment_target,
    gaussian_moment_test,
    interlacing_check,
    kpoint_estimate,
    least_singular_diagnostic,
    outlier_count_moments,
    power_norm_ratio,
    radial_histogram,
    spectral_radius,
)
from oracles import rejection_circular


@pytest.fixture(scope="module")
def rademacher_spectrum():
    n = 1000
    X = sample_iid_matrix(n, "rademacher", 2024, 0)
    return linalg.eigenvalues(X / math.sqrt(n))


def test_spectral_radius_examples():
    assert spectral_radius([2, 3, -5j]) == 5
    assert spectral_radius(np.exp(1j * np.linspace(0, 6, 9))) == pytest.approx(1)
    with pytest.raises(InvalidParameterError):
        spectral_radius([])


def test_spectral_radius_large(rademacher_spectrum):
    assert 0.9 <= spectral_radius(rademacher_spectrum) <= 1.15


def test_histogram_basics():
    h = esd_histogram([0.25 + 0.25j], (0, 1, 0, 1), 2)
    assert h.counts[0, 0] == 1 and h.counts.sum() == 1
    h = esd_histogram([1.0 + 0.5j], (0, 1, 0, 1), 2)  # right edge is open
    assert h.out_of_window == 1


@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False), max_size=50), st.integers(1, 8))
def test_histogram_conserves_counts(points, bins):
    h = esd_histogram(points, (-1, 1, -1, 1), bins)
    assert h.counts.sum() + h.out_of_window == h.n_eigenvalues == len(points)


def test_histogram_mass_inside_disk(rademacher_spectrum):
    assert np.mean(np.abs(rademacher_spectrum) <= 1.05) >= 0.97


def test_circular_law_on_exact_samples():
    pts = rejection_circular(4000, np.random.default_rng(0))
    radial, angular = circular_law_distance(pts)
    assert radial <= 0.03 and angular <= 0.03


def test_circular_law_degenerate():
    assert circular_law_distance(np.zeros(10))[0] == pytest.approx(1.0)


def test_circular_law_iid(rademacher_spectrum):
    radial, angular = circular_law_distance(rademacher_spectrum)
    assert radial <= 0.06 and angular <= 0.06


def test_power_norm_ratio_identity():
    n = 10
    for m in (1, 2, 5):
        assert power_norm_ratio(math.sqrt(n) * np.eye(n), m) == pytest.approx(1 / (m + 1))


def test_power_norm_ratio_first_power():
    X = sample_iid_matrix(1000, "rademacher", 5, 0)
    assert 0.85 <= power_norm_ratio(X, 1) <= 1.15


@pytest.mark.parametrize("m", [2, 3])
def test_power_norm_matches_fuss_catalan_edge(m):
    # the squared singular values of (X/sqrt n)^m follow the Fuss-Catalan law,
    # whose right edge is (m+1)^(m+1)/m^m
    X = sample_iid_matrix(1000, "rademacher", 6, 0)
    edge = math.sqrt((m + 1) ** (m + 1) / m ** m)
    assert power_norm_ratio(X, m) * (m + 1) == pytest.approx(edge, rel=0.05)


def test_clt_zero_matrix_gives_zero():
    phi = unit_ones_vector(20)
    assert linalg.bilinear_power(np.zeros((20, 20)), 1, phi, phi) == 0


def test_clt_samples_match_bilinear_power():
    n = 40
    phi = unit_ones_vector(n)
    s = clt_samples(n, "rademacher", 3, phi, phi, 2, seed=9)
    X = sample_iid_matrix(n, "rademacher", 9, 1)
    for j in (1, 2, 3):
        assert s.column(j)[1] == pytest.approx(math.sqrt(n) * linalg.bilinear_power(X, j, phi, phi), abs=1e-12)


def test_clt_rejects_localized_vectors():
    n = 400
    e1 = np.eye(n)[0]
    with pytest.raises(InvalidParameterError):
        clt_samples(n, "rademacher", 1, e1, unit_ones_vector(n), 1)


def test_clt_moments_moderate_size():
    n = 500
    phi = unit_ones_vector(n)
    s = clt_samples(n, "rademacher", 2, phi, phi, 300, seed=3)
    assert abs(s.column(1).var() - 1) <= 0.25
    assert abs(np.corrcoef(s.column(1), s.column(2))[0, 1]) <= 0.2


def test_moment_targets():
    assert [gaussian_moment_target(r) for r in (2, 4, 6)] == [1, 3, 15]
    with pytest.raises(InvalidParameterError):
        gaussian_moment_target(3)


def test_moment_test_calibration():
    rng = np.random.default_rng(0)
    within = sum(abs(gaussian_moment_test(rng.standard_normal(10 ** 5), 4)[2]) <= 4 for _ in range(100))
    assert within >= 99


def test_moment_test_needs_samples():
    with pytest.raises(InvalidParameterError):
        gaussian_moment_test(np.zeros(5), 2)


def test_kpoint_single_point():
    est = kpoint_estimate([[2.5 + 0j]], 1, 2, 4, (1.0, 4.0))
    areas = est.cell_areas.ravel()
    hit = np.nonzero(est.density)[0]
    assert hit.size == 1 and est.density[hit[0]] == pytest.approx(1 / areas[hit[0]])


def test_kpoint_empty():
    est = kpoint_estimate([], 2, 2, 2, (1.0, 2.0))
    assert np.all(est.density == 0)


@given(st.lists(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False), max_size=6), min_size=1, max_size=10))
def test_kpoint_counting_identity(sets):
    est = kpoint_estimate(sets, 1, 3, 5, (1.0, 4.0))
    inside = np.mean([sum(1.0 <= abs(z) < 4.0 for z in s) for s in sets])
    assert float(np.sum(est.density * est.cell_areas.ravel())) == pytest.approx(inside, abs=1e-12)


def test_kpoint_pairs():
    est = kpoint_estimate([[1.5 + 0j, 1.6 + 0j]], 2, 1, 1, (1.0, 2.0))
    area = est.cell_areas.ravel()[0]
    # two ordered distinct pairs in the only cell, divided by 2!
    assert est.density[0, 0] == pytest.approx(1 / area ** 2)


def test_count_moments():
    assert [m for m, _ in outlier_count_moments([0, 0, 0], 3)] == [0, 0, 0]
    assert [m for m, _ in outlier_count_moments([1, 1, 1], 3)] == [1, 1, 1]


@given(st.lists(st.integers(0, 9), min_size=2, max_size=40), st.integers(1, 39))
def test_power_sums_merge_matches_sequential(counts, cut):
    cut = min(cut, len(counts) - 1)
    merged = PowerSums(3).add(counts[:cut]).merge(PowerSums(3).add(counts[cut:]))
    seq = PowerSums(3).add(counts)
    for (a, sa), (b, sb) in zip(merged.moments(), seq.moments()):
        assert a == pytest.approx(b, rel=1e-10, abs=1e-12)
        assert sa == pytest.approx(sb, rel=1e-8, abs=1e-12)


def test_radial_histogram():
    mean, se = radial_histogram([[1.5], [1.5, 2.5]], [1, 2, 3])
    assert list(mean) == [1.0, 0.5]


def test_interlacing_examples():
    M = np.diag([1.0, 2.0, 3.0])
    assert interlacing_check(M, (np.zeros(3), np.zeros(3))).holds
    e1 = np.eye(3)[0]
    res = interlacing_check(M, (e1, e1))
    assert res.holds and res.max_violation == 0


def test_interlacing_sweep():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(2, 51))
        M = rng.standard_normal((n, n))
        u, v = rng.standard_normal(n), rng.standard_normal(n)
        assert interlacing_check(M, (u, v)).holds


def test_interlacing_detects_violation():
    M = np.diag([1.0, 2.0, 3.0])
    # rank two perturbation breaks the rank-one chain
    bad = interlacing_check(M, (np.array([10.0, 0, 0]), np.array([1.0, 0, 0])))
    assert bad.holds
    M2 = np.zeros((3, 3))
    check = interlacing_check(M2 + np.diag([5.0, 5.0, 0]), (np.zeros(3), np.zeros(3)))
    assert check.holds


def test_least_singular_examples():
    assert least_singular_diagnostic(2 * np.eye(3), 2) == pytest.approx(0, abs=1e-15)
    assert least_singular_diagnostic(np.zeros((3, 3)), 1) == pytest.approx(1)


def test_least_singular_zero_row_sum():
    n = 200
    P = row_sum_projector(n)
    vals = [least_singular_diagnostic(sample_iid_matrix(n, "rademacher", 4, t) @ P / math.sqrt(n), 0.5 + 0.5j)
            for t in range(50)]
    assert min(vals) >= 1e-8
