"""Random Laurent series 1 - mu * sum_j g_j z^{-j} and Gaussian power series zeros."""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .ensembles import as_seed_policy
from .errors import DivergentRegionError, InvalidParameterError, OutsideRegionError
from .outlier import AnnulusRegion, circle, exterior_zeros, locate_zeros_with_winding, winding_number

FIELDS = ("real", "complex")
LAURENT_STREAM = 2
POWER_SERIES_STREAM = 3


@dataclass(frozen=True)
class TruncationPolicy:
    """Truncation order J whose Gaussian tail on |z| >= r_min stays below tail_tol.

    The dropped tail at |z| = r has standard deviation at most
    mu * r^{-J} / sqrt(r^2 - 1); J is the smallest order for which that
    times the two-sided normal quantile at ``fail_prob`` is within ``tail_tol``.
    """

    r_min: float
    tail_tol: float
    fail_prob: float
    certified_order: int
    mu: float = 1.0

    def tail_std(self, order=None):
        order = self.certified_order if order is None else order
        return self.mu * self.r_min ** (-order) / math.sqrt(self.r_min ** 2 - 1.0)

    def tail_bound(self, order=None):
        return self.tail_std(order) * NormalDist().inv_cdf(1.0 - self.fail_prob / 2.0)


def choose_truncation(r_min, tail_tol=1e-6, fail_prob=1e-9, mu=1.0) -> TruncationPolicy:
    if r_min <= 1.0:
        raise DivergentRegionError(f"series diverges for |z| <= 1; got r_min={r_min}")
    if not (tail_tol > 0 and 0 < fail_prob < 1):
        raise InvalidParameterError("tail_tol must be positive and fail_prob in (0, 1)")
    if mu <= 0:
        raise InvalidParameterError("mu must be positive")
    q = NormalDist().inv_cdf(1.0 - fail_prob / 2.0)
    ratio = mu * q / (tail_tol * math.sqrt(r_min ** 2 - 1.0))
    order = 1
    if ratio > 1.0:
        order = max(1, math.ceil(math.log(ratio) / math.log(r_min)))
    return TruncationPolicy(float(r_min), float(tail_tol), float(fail_prob), int(order), float(mu))


@dataclass(frozen=True)
class RandomLaurentSeries:
    mu: float
    field: str
    coefficients: np.ndarray
    policy: TruncationPolicy

    @property
    def order(self) -> int:
        return self.coefficients.size

    def __call__(self, z):
        return evaluate(self, z)


def gaussian_coefficients(rng, size, field):
    if field == "real":
        return rng.standard_normal(size)
    if field == "complex":
        return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * math.sqrt(0.5)
    raise InvalidParameterError(f"field must be one of {FIELDS}, got {field!r}")


def sample_series(mu, policy: TruncationPolicy, field="real", seed=0, trial=0) -> RandomLaurentSeries:
    rng = as_seed_policy(seed).generator(trial, LAURENT_STREAM)
    coeffs = gaussian_coefficients(rng, policy.certified_order, field)
    return RandomLaurentSeries(float(mu), field, coeffs, policy)


def series_from_coefficients(mu, coefficients, r_min=1.1, field=None) -> RandomLaurentSeries:
    """Wrap explicit coefficients g_1..g_J (no certified tail)."""
    coeffs = np.asarray(coefficients)
    if field is None:
        field = "complex" if np.iscomplexobj(coeffs) else "real"
    policy = TruncationPolicy(float(r_min), math.inf, 0.5, int(coeffs.size), float(mu))
    return RandomLaurentSeries(float(mu), field, coeffs, policy)


def _horner_tail(coeffs, w):
    # sum_{j>=1} c_j w^j
    acc = np.zeros_like(w)
    for c in coeffs[::-1]:
        acc = (acc + c) * w
    return acc


def evaluate(series: RandomLaurentSeries, z):
    """1 - mu * sum_{j=1}^{J} g_j z^{-j}, Horner in w = 1/z; scalar or array ``z``."""
    z_arr = np.asarray(z, dtype=np.complex128)
    if np.any(np.abs(z_arr) < series.policy.r_min * (1.0 - 1e-12)):
        raise OutsideRegionError(f"|z| below the certified radius {series.policy.r_min}")
    vals = 1.0 - series.mu * _horner_tail(series.coefficients, 1.0 / z_arr)
    return complex(vals) if vals.ndim == 0 else vals


def cauchy_radius(series: RandomLaurentSeries) -> float:
    """Radius beyond which |g(z) - 1| < 1, so no zeros lie outside it."""
    if series.order == 0:
        return series.policy.r_min * 1.5
    return 1.0 + 1.01 * series.mu * float(np.max(np.abs(series.coefficients))) + 1e-9


def series_zeros(series: RandomLaurentSeries, region: AnnulusRegion | None = None, tol=1e-12, **search):
    """Zeros of the truncated series in ``region`` (default: all of |z| >= r_min)."""
    if region is None:
        if series.order == 0 or not np.any(series.coefficients):
            return []
        r_max = max(cauchy_radius(series), series.policy.r_min * 1.5)
        zeros, _, _ = exterior_zeros(series, series.policy.r_min, r_max, tol=tol, **search)
        return zeros
    if region.r_min < series.policy.r_min:
        raise OutsideRegionError("region extends inside the certified radius")
    if series.order == 0 or not np.any(series.coefficients):
        return []
    zeros, _, _ = locate_zeros_with_winding(series, region, tol=tol, **search)
    return zeros


def series_zeros_beyond(series: RandomLaurentSeries, r_min, tol=1e-12, **search):
    """(zeros, certified count) in {|z| >= r_min}."""
    if series.order == 0 or not np.any(series.coefficients):
        return [], 0
    r_max = max(cauchy_radius(series), r_min * 1.5)
    zeros, total, _ = exterior_zeros(series, r_min, r_max, tol=tol, **search)
    return zeros, total


# --------------------------------------------------------------------------
# Gaussian power series in the disk variable w


def _check_disk(points):
    w = np.asarray(points, dtype=np.complex128).ravel()
    if np.any(np.abs(w) >= 1.0):
        raise OutsideRegionError("points must lie in the open unit disk")
    return w


def gps_correlation(points, variant="linear") -> float:
    """k-point intensity of GPS zeros, (1/pi^k) det[K(w_i, w_j)].

    ``variant="linear"`` uses K = 1/(1 - w_i conj(w_j)); ``variant="squared"``
    uses its square, the Bergman kernel.
    """
    w = _check_disk(points)
    if variant not in ("linear", "squared"):
        raise InvalidParameterError(f"unknown variant {variant!r}")
    kernel = 1.0 / (1.0 - w[:, None] * w.conj()[None, :])
    if variant == "squared":
        kernel = kernel ** 2
    from .linalg import det

    value = det(kernel).real / math.pi ** w.size
    return max(float(value), 0.0)


def gps_radial_mass(s, variant="linear"):
    """Integral of the one-point intensity over the disk {|w| <= s}."""
    s2 = np.asarray(s, dtype=float) ** 2
    if variant == "linear":
        return -np.log1p(-s2)
    if variant == "squared":
        return s2 / (1.0 - s2)
    raise InvalidParameterError(f"unknown variant {variant!r}")


def gps_band_density(r, half_width, variant="linear"):
    """Mean one-point intensity over the annulus r - h <= |w| <= r + h."""
    lo, hi = r - half_width, r + half_width
    area = math.pi * (hi * hi - lo * lo)
    return float((gps_radial_mass(hi, variant) - gps_radial_mass(lo, variant)) / area)


def sample_power_series(order, seed=0, trial=0):
    """Complex Gaussian coefficients a_0..a_order."""
    rng = as_seed_policy(seed).generator(trial, POWER_SERIES_STREAM)
    return gaussian_coefficients(rng, order + 1, "complex")


def power_series_zero_count(coefficients, radius) -> int:
    """Zeros of sum_j a_j w^j in |w| < radius, by the argument principle."""
    poly = np.asarray(coefficients, dtype=np.complex128)[::-1]
    return winding_number(lambda w: np.polyval(poly, w), circle(0j, radius), threshold=1e-300)


@dataclass
class ZeroDensityEstimate:
    radii: np.ndarray
    half_width: float
    density: np.ndarray
    standard_error: np.ndarray
    trials: int


def gps_zero_density(radii, half_width=0.05, order=200, trials=5000, seed=0) -> ZeroDensityEstimate:
    """Monte Carlo zero intensity of the truncated GPS averaged over bands around each radius."""
    radii = np.asarray(radii, dtype=float)
    edges = sorted({round(float(r + s * half_width), 12) for r in radii for s in (-1.0, 1.0)})
    counts = np.zeros((trials, len(radii)))
    for t in range(trials):
        coeffs = sample_power_series(order, seed, t)
        inside = {e: power_series_zero_count(coeffs, e) for e in edges}
        for i, r in enumerate(radii):
            counts[t, i] = inside[round(r + half_width, 12)] - inside[round(r - half_width, 12)]
    areas = math.pi * ((radii + half_width) ** 2 - (radii - half_width) ** 2)
    dens = counts / areas
    se = dens.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(len(radii))
    return ZeroDensityEstimate(radii, half_width, dens.mean(axis=0), se, trials)


def adjudicate_gps(estimate: ZeroDensityEstimate, rel_tol=0.15):
    """Which closed form (if exactly one) matches every band density within ``rel_tol``."""
    verdict = {}
    for variant in ("linear", "squared"):
        preds = np.array([gps_band_density(r, estimate.half_width, variant) for r in estimate.radii])
        rel = np.abs(estimate.density - preds) / preds
        verdict[variant] = {"predicted": preds.tolist(), "relative_error": rel.tolist(),
                            "matches": bool(np.all(rel <= rel_tol))}
    matching = [v for v, d in verdict.items() if d["matches"]]
    return (matching[0] if len(matching) == 1 else None), verdict
