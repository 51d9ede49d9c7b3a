"""Spectral statistics and Monte Carlo estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sps

from . import linalg
from .ensembles import as_atom, as_seed_policy
from .errors import InvalidParameterError

# --------------------------------------------------------------------------
# spectra


def spectral_radius(eigs) -> float:
    eigs = np.asarray(eigs)
    if eigs.size == 0:
        raise InvalidParameterError("spectral radius of an empty spectrum")
    return float(np.max(np.abs(eigs)))


@dataclass
class ESDHistogram:
    """Counts on a rectangular grid over ``window = (x_min, x_max, y_min, y_max)``.

    Bins are half-open, [lo, hi), in both coordinates.
    """

    window: tuple
    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray
    out_of_window: int
    n_eigenvalues: int

    @property
    def fractions(self):
        return self.counts / max(self.n_eigenvalues, 1)


def esd_histogram(eigs, window=(-1.5, 1.5, -1.5, 1.5), bins=30) -> ESDHistogram:
    eigs = np.asarray(eigs, dtype=np.complex128).ravel()
    nx, ny = (bins, bins) if np.isscalar(bins) else bins
    if nx < 1 or ny < 1:
        raise InvalidParameterError("need at least one bin per axis")
    x0, x1, y0, y1 = window
    xe = np.linspace(x0, x1, nx + 1)
    ye = np.linspace(y0, y1, ny + 1)
    ix = np.searchsorted(xe, eigs.real, side="right") - 1
    iy = np.searchsorted(ye, eigs.imag, side="right") - 1
    ok = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    counts = np.zeros((nx, ny), dtype=np.int64)
    np.add.at(counts, (ix[ok], iy[ok]), 1)
    return ESDHistogram(tuple(window), xe, ye, counts, int((~ok).sum()), int(eigs.size))


def _radial_cdf(r):
    return np.minimum(np.asarray(r) ** 2, 1.0)


def _angular_cdf(t):
    return (np.asarray(t) + math.pi) / (2.0 * math.pi)


def circular_law_distance(eigs):
    """KS distances of radii to min(r^2, 1) and of arguments to uniform on (-pi, pi]."""
    eigs = np.asarray(eigs, dtype=np.complex128).ravel()
    if eigs.size == 0:
        raise InvalidParameterError("empty spectrum")
    radial = _sps.kstest(np.abs(eigs), _radial_cdf).statistic
    angular = _sps.kstest(np.angle(eigs), _angular_cdf).statistic
    return float(radial), float(angular)


def sample_circular_law(size, rng):
    """Uniform points in the unit disk."""
    r = np.sqrt(rng.random(size))
    return r * np.exp(1j * rng.uniform(-math.pi, math.pi, size))


def power_norm_ratio(X, m, tol=1e-8) -> float:
    """||(X/sqrt(n))^m||_op / (m + 1)."""
    if m < 1:
        raise InvalidParameterError("m must be at least 1")
    X = np.asarray(X)
    base = X / math.sqrt(X.shape[0])
    return linalg.power_operator_norm(base, m, tol=tol) / (m + 1)


# --------------------------------------------------------------------------
# central limit samples


@dataclass
class CLTSampleSet:
    samples: np.ndarray  # trials x j_max
    n: int
    atom: str
    u_label: str = "u"
    v_label: str = "v"

    def column(self, j):
        return self.samples[:, j - 1]


def delocalized(vec, n, constant=10.0) -> bool:
    return bool(np.max(np.abs(vec)) <= constant / math.sqrt(n) * (1 + 1e-12))


def clt_samples(n, atom, j_max, u, v, n_trials, seed=0, first_trial=0) -> CLTSampleSet:
    """Z_j = sqrt(n) <(X/sqrt(n))^j u, v> for j = 1..j_max, one row per trial."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != (n,) or v.shape != (n,):
        raise InvalidParameterError("u and v must be length-n vectors")
    if not (delocalized(u, n) and delocalized(v, n)):
        raise InvalidParameterError("u and v must satisfy max |entry| <= 10/sqrt(n)")
    atom = as_atom(atom)
    policy = as_seed_policy(seed)
    dtype = np.complex128 if (not atom.is_real or np.iscomplexobj(u) or np.iscomplexobj(v)) else np.float64
    out = np.zeros((n_trials, j_max), dtype=dtype)
    scale = 1.0 / math.sqrt(n)
    for t in range(n_trials):
        X = atom.sample(policy.generator(first_trial + t, 0), (n, n))
        y = u
        for j in range(j_max):
            y = (X @ y) * scale
            out[t, j] = math.sqrt(n) * np.vdot(v, y)
    return CLTSampleSet(out, n, atom.kind)


def gaussian_moment_target(r) -> float:
    if r < 0 or r % 2:
        raise InvalidParameterError("moment order must be a nonnegative even integer")
    return math.factorial(r) / (2 ** (r // 2) * math.factorial(r // 2))


def gaussian_moment_test(samples, r):
    """(empirical r-th moment, Gaussian target, z-score of the difference)."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 30:
        raise InvalidParameterError("need at least 30 samples")
    target = gaussian_moment_target(r)
    powers = x ** r
    emp = float(powers.mean())
    se = float(powers.std(ddof=1) / math.sqrt(x.size))
    z = (emp - target) / se if se > 0 else (0.0 if emp == target else math.inf)
    return emp, target, z


# --------------------------------------------------------------------------
# point process estimators


@dataclass
class PowerSums:
    """Merge-able sums of x^1..x^m over observations."""

    m_max: int
    count: int = 0
    sums: np.ndarray = field(default=None)
    sq_sums: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.sums is None:
            self.sums = np.zeros(self.m_max)
        if self.sq_sums is None:
            self.sq_sums = np.zeros(self.m_max)

    def add(self, values):
        x = np.asarray(values, dtype=float).ravel()
        p = x[:, None] ** np.arange(1, self.m_max + 1)[None, :]
        self.count += x.size
        self.sums += p.sum(axis=0)
        self.sq_sums += (p * p).sum(axis=0)
        return self

    def merge(self, other: "PowerSums") -> "PowerSums":
        if other.m_max != self.m_max:
            raise InvalidParameterError("cannot merge different orders")
        return PowerSums(self.m_max, self.count + other.count,
                         self.sums + other.sums, self.sq_sums + other.sq_sums)

    def moments(self):
        """List of (E[N^m], standard error) for m = 1..m_max."""
        if self.count == 0:
            return [(0.0, 0.0)] * self.m_max
        mean = self.sums / self.count
        if self.count > 1:
            var = np.maximum(self.sq_sums - self.count * mean ** 2, 0.0) / (self.count - 1)
            se = np.sqrt(var / self.count)
        else:
            se = np.zeros(self.m_max)
        return [(float(a), float(b)) for a, b in zip(mean, se)]


def outlier_count_moments(counts, m_max):
    if m_max < 1:
        raise InvalidParameterError("m_max must be at least 1")
    return PowerSums(m_max).add(counts).moments()


@dataclass
class CorrelationEstimate:
    k: int
    radial_edges: np.ndarray
    angular_edges: np.ndarray
    density: np.ndarray
    standard_error: np.ndarray
    n_trials: int

    @property
    def cell_areas(self):
        return _cell_areas(self.radial_edges, self.angular_edges)


def _cell_areas(r_edges, t_edges):
    ring = 0.5 * (r_edges[1:] ** 2 - r_edges[:-1] ** 2)
    return ring[:, None] * np.diff(t_edges)[None, :]


def _cell_index(points, r_edges, t_edges):
    pts = np.asarray(points, dtype=np.complex128).ravel()
    ir = np.searchsorted(r_edges, np.abs(pts), side="right") - 1
    it = np.searchsorted(t_edges, np.angle(pts), side="right") - 1
    nr, nt = r_edges.size - 1, t_edges.size - 1
    it = np.where(it == nt, nt - 1, it)  # arg = pi closes the last angular bin
    ok = (ir >= 0) & (ir < nr) & (it >= 0) & (it < nt)
    return (ir * nt + it)[ok]


def kpoint_estimate(per_trial_point_sets, k, radial_bins, angular_bins, region) -> CorrelationEstimate:
    """Binned k-point correlation density over an annulus ``region = (r_min, r_max)``.

    k = 1: mean count per cell over the cell area. k = 2: mean number of
    ordered pairs of distinct points per pair of cells over the product of
    the areas, divided by 2!. ``density`` has shape (cells,) or (cells, cells)
    where cells are numbered radial-major.
    """
    if k not in (1, 2):
        raise InvalidParameterError("k must be 1 or 2")
    r_min, r_max = (region.r_min, region.r_max) if hasattr(region, "r_min") else region
    r_edges = np.linspace(r_min, r_max, radial_bins + 1)
    t_edges = np.linspace(-math.pi, math.pi, angular_bins + 1)
    areas = _cell_areas(r_edges, t_edges).ravel()
    cells = areas.size
    sets = list(per_trial_point_sets)
    T = len(sets)
    shape = (cells,) if k == 1 else (cells, cells)
    if T == 0:
        z = np.zeros(shape)
        return CorrelationEstimate(k, r_edges, t_edges, z, z.copy(), 0)
    per_trial = np.zeros((T,) + shape)
    for t, pts in enumerate(sets):
        idx = _cell_index(pts, r_edges, t_edges)
        c = np.bincount(idx, minlength=cells).astype(float)
        if k == 1:
            per_trial[t] = c / areas
        else:
            pairs = np.outer(c, c) - np.diag(c)
            per_trial[t] = pairs / np.outer(areas, areas) / 2.0
    dens = per_trial.mean(axis=0)
    se = per_trial.std(axis=0, ddof=1) / math.sqrt(T) if T > 1 else np.zeros(shape)
    return CorrelationEstimate(k, r_edges, t_edges, dens, se, T)


def radial_histogram(per_trial_point_sets, edges):
    """Per-bin mean count per trial and its standard error, by modulus."""
    edges = np.asarray(edges, dtype=float)
    sets = list(per_trial_point_sets)
    counts = np.zeros((len(sets), edges.size - 1))
    for t, pts in enumerate(sets):
        r = np.abs(np.asarray(pts, dtype=np.complex128).ravel())
        counts[t] = np.histogram(r, bins=edges)[0]
    if not sets:
        return np.zeros(edges.size - 1), np.zeros(edges.size - 1)
    se = counts.std(axis=0, ddof=1) / math.sqrt(len(sets)) if len(sets) > 1 else np.zeros(edges.size - 1)
    return counts.mean(axis=0), se


# --------------------------------------------------------------------------
# zero row sum diagnostics


@dataclass
class InterlacingResult:
    holds: bool
    max_violation: float


def interlacing_check(M, rank_one) -> InterlacingResult:
    """Weyl chain s_{i-1}(M) >= s_i(M + u v^*) >= s_{i+1}(M), up to 1e-9 ||M||_F."""
    M = np.asarray(M)
    u, v = (np.asarray(x) for x in rank_one)
    perturbed = M + np.outer(u, v.conj())
    s = linalg.singular_values(M)
    t = linalg.singular_values(perturbed)
    slack = 1e-9 * np.linalg.norm(M)
    upper = np.maximum(t[1:] - s[:-1], 0.0)
    lower = np.maximum(s[1:] - t[:-1], 0.0)
    worst = float(max(upper.max(initial=0.0), lower.max(initial=0.0)))
    return InterlacingResult(worst <= slack, worst)


def least_singular_diagnostic(M, z) -> float:
    """Smallest singular value of M - z I."""
    M = np.asarray(M)
    shifted = M - complex(z) * np.eye(M.shape[0]) if z != 0 else M
    return float(linalg.singular_values(shifted)[-1])
