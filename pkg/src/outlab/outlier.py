"""Outlier eigenvalues as zeros of the low-rank determinant f(z).

For z outside the spectrum of X/sqrt(n),

    f(z) = det(I_k + B (X/sqrt(n) - z)^{-1} A)
         = det(X/sqrt(n) + A B - z) / det(X/sqrt(n) - z),

so the eigenvalues of the perturbed matrix outside the bulk are exactly the
zeros of a k x k determinant. Zeros are counted with the argument principle
and located by subdividing the search region into cells until each holds a
single zero, which Newton's method then polishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .ensembles import PerturbedModel, assemble_dense, unit_ones_vector
from .errors import (
    ContourError,
    InvalidDimensionError,
    InvalidParameterError,
    OracleSingularError,
    OutsideRegionError,
    PoleError,
    ResolventSingularError,
    SingularMatrixError,
    UnresolvableContourError,
)

TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------
# regions and contours


@dataclass(frozen=True)
class AnnulusRegion:
    """{r_min <= |z| <= r_max}, centred at the origin."""

    r_min: float
    r_max: float

    def __post_init__(self):
        if not 1.0 < self.r_min < self.r_max:
            raise InvalidParameterError(f"need 1 < r_min < r_max, got ({self.r_min}, {self.r_max})")

    @classmethod
    def from_epsilon(cls, epsilon, r_max):
        return cls(1.0 + 2.0 * epsilon, r_max)

    def contains(self, z):
        r = np.abs(z)
        return (r >= self.r_min) & (r <= self.r_max)


@dataclass(frozen=True)
class Box:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidParameterError("empty box")

    def contains(self, z):
        z = np.asarray(z)
        return (z.real >= self.x_min) & (z.real <= self.x_max) & (z.imag >= self.y_min) & (z.imag <= self.y_max)


@dataclass(frozen=True)
class LineSegment:
    start: complex
    end: complex

    def points(self, t):
        return self.start + (self.end - self.start) * t


@dataclass(frozen=True)
class ArcSegment:
    center: complex
    radius: float
    theta0: float
    theta1: float

    def points(self, t):
        return self.center + self.radius * np.exp(1j * (self.theta0 + (self.theta1 - self.theta0) * t))


def circle(center, radius, pieces=4):
    """Counter-clockwise circle as a list of arcs."""
    edges = np.linspace(-math.pi, math.pi, pieces + 1)
    return [ArcSegment(complex(center), float(radius), float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]


def box_contour(box: Box):
    a = complex(box.x_min, box.y_min)
    b = complex(box.x_max, box.y_min)
    c = complex(box.x_max, box.y_max)
    d = complex(box.x_min, box.y_max)
    return [LineSegment(a, b), LineSegment(b, c), LineSegment(c, d), LineSegment(d, a)]


def sector_contour(r0, r1, t0, t1):
    """Boundary of {r0 <= |z| <= r1, t0 <= arg z <= t1}, counter-clockwise."""
    e0, e1 = np.exp(1j * t0), np.exp(1j * t1)
    return [
        LineSegment(r0 * e0, r1 * e0),
        ArcSegment(0j, r1, t0, t1),
        LineSegment(r1 * e1, r0 * e1),
        ArcSegment(0j, r0, t1, t0),
    ]


# --------------------------------------------------------------------------
# argument principle


def _evaluate(fn, z):
    z = np.asarray(z, dtype=np.complex128)
    try:
        vals = np.asarray(fn(z), dtype=np.complex128)
    except (SingularMatrixError, ZeroDivisionError, OutsideRegionError) as exc:
        raise ContourError(f"function not evaluable on contour: {exc}") from exc
    if vals.shape != z.shape:
        vals = np.broadcast_to(vals, z.shape).astype(np.complex128)
    return vals


def _segment_phase(fn, seg, initial, max_refine, threshold):
    t = np.linspace(0.0, 1.0, initial + 1)
    vals = _evaluate(fn, seg.points(t))
    for _ in range(max_refine + 1):
        mags = np.abs(vals)
        if not np.all(np.isfinite(vals)):
            raise ContourError("non-finite value on contour")
        low = mags < threshold
        if low.any():
            raise ContourError("function below threshold on contour", point=complex(seg.points(t[np.argmax(low)])))
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dphi) >= math.pi / 2
        if not bad.any():
            return float(dphi.sum()), t.size
        mids = 0.5 * (t[:-1][bad] + t[1:][bad])
        mid_vals = _evaluate(fn, seg.points(mids))
        t_new = np.concatenate([t, mids])
        v_new = np.concatenate([vals, mid_vals])
        order = np.argsort(t_new, kind="stable")
        t, vals = t_new[order], v_new[order]
    raise ContourError("phase refinement exhausted; contour passes too close to a zero")


def winding_number(fn, boundary, max_refine=24, threshold=1e-13, initial=8):
    """Number of zeros minus poles of ``fn`` enclosed by ``boundary``.

    ``fn`` must accept an array of complex points. Each segment is sampled
    adaptively until consecutive phase changes are below pi/2; the summed
    phase over 2 pi is returned as an exact integer.
    """
    total = 0.0
    for seg in boundary:
        phase, _ = _segment_phase(fn, seg, initial, max_refine, threshold)
        total += phase
    w = total / TWO_PI
    k = int(round(w))
    if abs(w - k) > 0.2:
        raise ContourError(f"non-integral winding {w:.3f}")
    return k


# --------------------------------------------------------------------------
# zero location


@dataclass
class LocatedZero:
    position: complex
    multiplicity: int
    residual: float
    newton_iterations: int
    polished: bool = True


class _Rect:
    __slots__ = ("x0", "x1", "y0", "y1")

    def __init__(self, x0, x1, y0, y1):
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1

    def contour(self):
        return box_contour(Box(self.x0, self.x1, self.y0, self.y1))

    @property
    def center(self):
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    @property
    def diameter(self):
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def contains(self, z, margin=0.0):
        return (self.x0 - margin <= z.real <= self.x1 + margin) and (self.y0 - margin <= z.imag <= self.y1 + margin)

    def split(self, frac):
        wx, wy = self.x1 - self.x0, self.y1 - self.y0
        xs = [self.x0, self.x0 + frac * wx, self.x1] if wx >= 0.5 * wy else [self.x0, self.x1]
        ys = [self.y0, self.y0 + frac * wy, self.y1] if wy >= 0.5 * wx else [self.y0, self.y1]
        return [_Rect(xa, xb, ya, yb) for xa, xb in zip(xs[:-1], xs[1:]) for ya, yb in zip(ys[:-1], ys[1:])]

    def dilate(self, factor):
        cx, cy = 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)
        hx, hy = 0.5 * (self.x1 - self.x0) * factor, 0.5 * (self.y1 - self.y0) * factor
        return _Rect(cx - hx, cx + hx, cy - hy, cy + hy)


class _Sector:
    __slots__ = ("r0", "r1", "t0", "t1")

    def __init__(self, r0, r1, t0, t1):
        self.r0, self.r1, self.t0, self.t1 = r0, r1, t0, t1

    def contour(self):
        return sector_contour(self.r0, self.r1, self.t0, self.t1)

    @property
    def center(self):
        return 0.5 * (self.r0 + self.r1) * complex(math.cos(0.5 * (self.t0 + self.t1)), math.sin(0.5 * (self.t0 + self.t1)))

    @property
    def diameter(self):
        return math.hypot(self.r1 - self.r0, self.r1 * (self.t1 - self.t0))

    def contains(self, z, margin=0.0):
        r = abs(z)
        if not (self.r0 - margin <= r <= self.r1 + margin):
            return False
        t = math.atan2(z.imag, z.real)
        slack = margin / max(r, 1e-300)
        for shift in (0.0, TWO_PI, -TWO_PI):
            if self.t0 - slack <= t + shift <= self.t1 + slack:
                return True
        return False

    def split(self, frac):
        lr = self.r1 - self.r0
        lt = 0.5 * (self.r0 + self.r1) * (self.t1 - self.t0)
        rs = [self.r0, self.r0 + frac * lr, self.r1] if lr >= 0.5 * lt else [self.r0, self.r1]
        ts = [self.t0, self.t0 + frac * (self.t1 - self.t0), self.t1] if lt >= 0.5 * lr else [self.t0, self.t1]
        return [_Sector(ra, rb, ta, tb) for ra, rb in zip(rs[:-1], rs[1:]) for ta, tb in zip(ts[:-1], ts[1:])]


def _newton(fn, z0, multiplicity, tol, max_iter):
    """Newton with central-difference derivative; returns (z, |f(z)|, iterations, converged)."""
    z = complex(z0)
    for it in range(max_iter + 1):
        h = 1e-6 * (1.0 + abs(z))
        try:
            vals = _evaluate(fn, np.array([z, z + h, z - h, z + 1j * h, z - 1j * h]))
        except ContourError:
            return z, math.inf, it, False
        f = vals[0]
        res = abs(f)
        if res <= tol or it == max_iter:
            return z, res, it, res <= tol
        deriv = 0.5 * ((vals[1] - vals[2]) / (2 * h) + (vals[3] - vals[4]) / (2j * h))
        if not np.isfinite(deriv) or abs(deriv) <= 1e-300 * max(abs(f), 1.0):
            return z, res, it, False
        step = multiplicity * f / deriv
        if not np.isfinite(step):
            return z, res, it, False
        z_new = z - step
        if abs(step) <= 4 * np.finfo(float).eps * (1.0 + abs(z)):
            try:
                res_new = abs(_evaluate(fn, np.array([z_new]))[0])
            except ContourError:
                return z, res, it, False
            return z_new, res_new, it + 1, res_new <= tol
        z = z_new
    return z, res, max_iter, False


class _ZeroSearch:
    def __init__(self, fn, tol, min_diameter, cluster_diameter, threshold, max_refine,
                 max_retries, newton_max_iter, early_newton, multiplicity_radius):
        self.fn = fn
        self.tol = tol
        self.min_diameter = min_diameter
        self.cluster_diameter = cluster_diameter
        self.threshold = threshold
        self.max_refine = max_refine
        self.max_retries = max_retries
        self.newton_max_iter = newton_max_iter
        self.early_newton = early_newton
        self.multiplicity_radius = multiplicity_radius

    def wind(self, cell):
        return winding_number(self.fn, cell.contour(), max_refine=self.max_refine, threshold=self.threshold)

    def children(self, cell, parent_winding):
        for attempt in range(self.max_retries + 1):
            # shift the cut to move the new edges off any zero they hit
            frac = 0.5 + (0.07 * ((attempt + 1) // 2) * (-1) ** attempt if attempt else 0.0)
            kids = cell.split(frac)
            try:
                windings = [self.wind(k) for k in kids]
            except ContourError:
                continue
            if sum(windings) == parent_winding:
                return list(zip(kids, windings))
        raise UnresolvableContourError(f"could not subdivide cell around {cell.center}")

    def multiplicity(self, z, expected):
        radius = self.multiplicity_radius
        for _ in range(self.max_retries + 1):
            try:
                return winding_number(self.fn, circle(z, radius), max_refine=self.max_refine, threshold=self.threshold * 1e-3)
            except ContourError:
                radius *= 1.1
        return expected

    def polish(self, cell, w, force):
        z, res, its, ok = _newton(self.fn, cell.center, w, self.tol, self.newton_max_iter)
        inside = cell.contains(z, margin=1e-9 * (1.0 + abs(z)))
        if ok and inside:
            mult = self.multiplicity(z, w)
            return LocatedZero(z, max(mult, 1), res, its, True)
        if force:
            z = cell.center
            res = float(abs(_evaluate(self.fn, np.array([z]))[0]))
            return LocatedZero(z, w, res, its, False)
        return None

    def run(self, roots):
        found = []
        stack = [(c, w) for c, w in roots if w != 0]
        for c, w in stack:
            if w < 0:
                raise ContourError(f"negative winding {w}: poles inside the search region")
        while stack:
            cell, w = stack.pop()
            diam = cell.diameter
            if w == 1 and (self.early_newton or diam < self.min_diameter):
                z = self.polish(cell, 1, force=diam < self.cluster_diameter)
                if z is not None:
                    found.append(z)
                    continue
            elif w > 1 and diam < self.cluster_diameter:
                found.append(self.polish(cell, w, force=True))
                continue
            for kid, kw in self.children(cell, w):
                if kw < 0:
                    raise ContourError("negative winding: poles inside the search region")
                if kw:
                    stack.append((kid, kw))
        found.sort(key=lambda lz: (abs(lz.position), math.atan2(lz.position.imag, lz.position.real)))
        return found


def _root_cells(region, search, max_retries):
    """Initial partition of the region plus windings, retrying on contour hits."""
    if isinstance(region, Box):
        cell = _Rect(region.x_min, region.x_max, region.y_min, region.y_max)
        for attempt in range(max_retries + 1):
            try:
                return [(cell, search.wind(cell))], cell
            except ContourError:
                cell = cell.dilate(1.1)
        raise UnresolvableContourError("box boundary passes through a zero")
    if isinstance(region, AnnulusRegion):
        r0, r1 = region.r_min, region.r_max
        n_ang = max(4, int(math.ceil(math.pi * (r0 + r1) / (r1 - r0) / 2)))
        for attempt in range(max_retries + 1):
            # generic cut angles keep sector edges off the real axis
            offset = 0.1234567 + 0.37 * attempt
            edges = -math.pi + offset + np.linspace(0.0, TWO_PI, n_ang + 1)
            cells = [_Sector(r0, r1, float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
            try:
                return [(c, search.wind(c)) for c in cells], AnnulusRegion(r0, r1)
            except ContourError:
                r1 *= 1.1  # dilate; also rotates the cut
        raise UnresolvableContourError("annulus boundary passes through a zero")
    raise TypeError(f"unsupported region {region!r}")


def locate_zeros(fn, region, tol=1e-10, min_diameter=1e-2, cluster_diameter=1e-4,
                 threshold=1e-13, max_refine=24, max_retries=8, newton_max_iter=60,
                 early_newton=True, multiplicity_radius=1e-4):
    """Zeros of an analytic ``fn`` in an :class:`AnnulusRegion` or :class:`Box`.

    Cells with nonzero winding are split until Newton's method, started at
    the cell centre, converges inside a cell holding exactly one zero (or the
    cell is smaller than ``min_diameter``). Cells still holding several zeros
    below ``cluster_diameter`` are reported as one multiple zero.
    """
    search = _ZeroSearch(fn, tol, min_diameter, cluster_diameter, threshold, max_refine,
                         max_retries, newton_max_iter, early_newton, multiplicity_radius)
    roots, _ = _root_cells(region, search, max_retries)
    return search.run(roots)


def locate_zeros_with_winding(fn, region, **kwargs):
    """Like :func:`locate_zeros` but also returns the total winding of the region."""
    search = _ZeroSearch(fn, kwargs.pop("tol", 1e-10), kwargs.pop("min_diameter", 1e-2),
                         kwargs.pop("cluster_diameter", 1e-4), kwargs.pop("threshold", 1e-13),
                         kwargs.pop("max_refine", 24), kwargs.pop("max_retries", 8),
                         kwargs.pop("newton_max_iter", 60), kwargs.pop("early_newton", True),
                         kwargs.pop("multiplicity_radius", 1e-4))
    if kwargs:
        raise TypeError(f"unexpected arguments {sorted(kwargs)}")
    roots, used_region = _root_cells(region, search, search.max_retries)
    return search.run(roots), sum(w for _, w in roots), used_region


def exterior_zero_count(fn, r_min, threshold=1e-13, max_retries=8):
    """Zeros of ``fn`` in {|z| > r_min} for fn -> 1 at infinity with all poles inside r_min.

    Equals minus the winding number of ``fn`` around the circle of radius r_min.
    """
    r = r_min
    for _ in range(max_retries + 1):
        try:
            return -winding_number(fn, circle(0j, r, pieces=8), threshold=threshold), r
        except ContourError:
            r *= 1.0 + 1e-3
    raise UnresolvableContourError(f"circle of radius {r_min} passes through a zero")


def exterior_zeros(fn, r_min, r_max, max_growth=8, **kwargs):
    """All zeros in {|z| >= r_min}, growing r_max until the count is complete.

    Returns ``(zeros, total, region)`` with ``total`` the certified count.
    """
    total, r_min = exterior_zero_count(fn, r_min, threshold=kwargs.get("threshold", 1e-13))
    r_max = max(r_max, r_min * 1.5)
    if total == 0:
        return [], 0, AnnulusRegion(r_min, r_max)
    for _ in range(max_growth):
        zeros, wind, region = locate_zeros_with_winding(fn, AnnulusRegion(r_min, r_max), **kwargs)
        if wind == total:
            found = sum(z.multiplicity for z in zeros)
            if found != total:
                raise UnresolvableContourError(f"located multiplicities sum to {found}, expected {total}")
            return zeros, total, region
        r_max = region.r_max * 2.0
    raise UnresolvableContourError(f"could not enclose all {total} exterior zeros")


# --------------------------------------------------------------------------
# the low-rank determinant


def weinstein_det(model: PerturbedModel, z) -> complex:
    """det(I_k + B (X/sqrt(n) - z)^{-1} A) through a dense LU of the shifted base."""
    if model.k == 0:
        return 1.0 + 0j
    n = model.n
    shifted = model.base - complex(z) * np.eye(n)
    fact = linalg.lu_factor(shifted)
    diag = np.abs(np.diag(fact.lu))
    if fact.singular or diag.min() <= n * np.finfo(float).eps * max(diag.max(), 1.0):
        raise ResolventSingularError(z)
    Y = linalg.solve(fact, model.A)
    return linalg.det(np.eye(model.k) + model.B @ Y)


class WeinsteinDeterminant:
    """Reusable evaluator of f(z) for one model.

    The base X/sqrt(n) is reduced once to Hessenberg form ``Q H Q^*``; each
    evaluation is then an O(k n^2) Hessenberg solve with the transformed
    factors ``Q^* A`` and ``B Q``. Accepts scalars or arrays of points.
    """

    def __init__(self, model: PerturbedModel):
        self.model = model
        self.k = model.k
        if self.k:
            self._hess = linalg.HessenbergForm(model.base)
            self._A_hat = self._hess.to_hessenberg_basis(model.A)
            self._B_hat = self._hess.to_hessenberg_basis(model.B.conj().T).conj().T
        self.evaluations = 0

    def _one(self, z):
        self.evaluations += 1
        Y, _, _ = self._hess.shifted_solve(z, self._A_hat)
        S = self._B_hat @ Y
        if self.k == 1:
            return 1.0 + S[0, 0]
        return linalg.det(np.eye(self.k) + S)

    def __call__(self, z):
        z_arr = np.asarray(z, dtype=np.complex128)
        if self.k == 0:
            return np.ones_like(z_arr) if z_arr.ndim else 1.0 + 0j
        if z_arr.ndim == 0:
            return complex(self._one(complex(z_arr)))
        out = np.empty(z_arr.shape, dtype=np.complex128)
        flat = z_arr.ravel()
        res = out.ravel()
        for i in range(flat.size):
            res[i] = self._one(complex(flat[i]))
        return out


def comparator_rational(eigs_of_C, z) -> complex:
    """g(z) = prod_i (1 - lambda_i / z)."""
    z = complex(z)
    if z == 0:
        raise PoleError("comparator has a pole at z = 0")
    eigs = np.asarray(list(eigs_of_C) if not isinstance(eigs_of_C, np.ndarray) else eigs_of_C, dtype=np.complex128)
    return complex(np.prod(1.0 - eigs / z))


ORACLE_MAX_N = 512


def char_poly_ratio_oracle(model: PerturbedModel, z) -> complex:
    """det(X/sqrt(n) + A B - z) / det(X/sqrt(n) - z) from two dense LU factorizations."""
    if model.n > ORACLE_MAX_N:
        raise InvalidDimensionError(f"oracle limited to n <= {ORACLE_MAX_N}")
    if model.k == 0:
        return 1.0 + 0j
    n = model.n
    shift = complex(z) * np.eye(n)
    try:
        return linalg.det_ratio(assemble_dense(model) - shift, model.base - shift)
    except SingularMatrixError as exc:
        raise OracleSingularError(f"denominator singular at z={z!r}") from exc


# --------------------------------------------------------------------------
# detection


def guard_order(epsilon) -> int:
    """Smallest m with m + 1 < (1 + epsilon)^m."""
    if epsilon <= 0:
        raise InvalidParameterError("epsilon must be positive")
    m = 1
    while m + 1 >= (1.0 + epsilon) ** m:
        m += 1
    return m


def spectral_radius_guard(base, epsilon, tol=1e-6):
    """(||M^{m0}||^{1/m0}, m0), an upper bound on the spectral radius of M."""
    m0 = guard_order(epsilon)
    norm = linalg.power_operator_norm(base, m0, tol=tol)
    return norm ** (1.0 / m0), m0


@dataclass
class OutlierReport:
    zeros: list
    spectral_radius_guard: float
    region: AnnulusRegion
    total_winding: int
    guard_passed: bool = True
    guard_order: int = 0
    evaluations: int = 0
    notes: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(z.multiplicity for z in self.zeros)

    @property
    def positions(self):
        return np.array([z.position for z in self.zeros for _ in range(z.multiplicity)], dtype=np.complex128)


def default_r_max(model: PerturbedModel) -> float:
    eigs = model.perturbation_eigenvalues()
    scale = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    return 2.0 + 2.0 * scale


def detect_outliers(model: PerturbedModel, epsilon=0.1, tol=1e-10, r_max=None, r_min=None,
                    evaluator=None, **search):
    """Eigenvalues of X/sqrt(n) + A B in {|z| >= r_min}, r_min = 1 + 2 epsilon by default.

    The search only runs when the power-norm guard certifies that the
    spectrum of X/sqrt(n) lies inside r_min; otherwise the report comes back
    empty with ``guard_passed=False``.
    """
    if epsilon <= 0:
        raise InvalidParameterError("epsilon must be positive")
    if r_min is None:
        r_min = 1.0 + 2.0 * epsilon
    if r_max is None:
        r_max = default_r_max(model)
    r_max = max(r_max, 1.5 * r_min)
    rho, m0 = spectral_radius_guard(model.base, epsilon)
    region = AnnulusRegion(r_min, r_max)
    if rho >= r_min:
        return OutlierReport([], rho, region, 0, guard_passed=False, guard_order=m0,
                             notes=["spectral radius guard failed"])
    if model.k == 0:
        return OutlierReport([], rho, region, 0, guard_order=m0)
    fn = evaluator if evaluator is not None else WeinsteinDeterminant(model)
    zeros, total, region = exterior_zeros(fn, r_min, r_max, tol=tol, **search)
    return OutlierReport(zeros, rho, region, total, guard_order=m0,
                         evaluations=getattr(fn, "evaluations", 0))


@dataclass
class MatchResult:
    pairs: list
    max_distance: float
    count_mismatch: bool = False


def match_outliers(found, predicted) -> MatchResult:
    """Pairing of found and predicted outliers minimizing the largest distance."""
    found = np.asarray(list(found), dtype=np.complex128)
    predicted = np.asarray(list(predicted), dtype=np.complex128)
    if found.size != predicted.size:
        return MatchResult([], math.inf, count_mismatch=True)
    if found.size == 0:
        return MatchResult([], 0.0)
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(found[:, None] - predicted[None, :])
    best = None
    for t in np.unique(cost):
        rows, cols = linear_sum_assignment(cost > t)
        if not (cost[rows, cols] > t).any():
            # among bottleneck-optimal pairings prefer the least total distance
            capped = np.where(cost > t, np.inf, cost)
            rows, cols = linear_sum_assignment(np.where(np.isinf(capped), 1e300, capped))
            best = (rows, cols, float(t))
            break
    rows, cols, t = best
    pairs = [(complex(found[i]), complex(predicted[j])) for i, j in zip(rows, cols)]
    return MatchResult(pairs, t)


def outlier_eigenvector(X, z_hat):
    """Unit vector along (I - X/(z sqrt(n)))^{-1} phi."""
    z_hat = complex(z_hat)
    if z_hat == 0:
        raise PoleError("z_hat must be nonzero")
    X = np.asarray(X)
    phi = unit_ones_vector(X.shape[0])
    v = -z_hat * linalg.resolvent_solve(X, z_hat, phi)
    return v / np.linalg.norm(v)


JENSEN_CAP = math.log(1e15)


def log_plus_reciprocal(value):
    """log+(1/|value|), capped at log(1e15) for zero or non-finite input."""
    a = np.abs(np.asarray(value, dtype=np.complex128))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.maximum(-np.log(a), 0.0)
    out = np.where(np.isfinite(out), out, JENSEN_CAP)
    return np.minimum(out, JENSEN_CAP)


def jensen_log_integral(fn, epsilon, grid_resolution=64):
    """Midpoint-rule integral of log+(1/|fn|) over {1+2eps <= |z| <= 1+3eps}."""
    r0, r1 = 1.0 + 2.0 * epsilon, 1.0 + 3.0 * epsilon
    nr = max(1, grid_resolution // 8)
    nt = grid_resolution
    dr = (r1 - r0) / nr
    dt = TWO_PI / nt
    r = r0 + dr * (np.arange(nr) + 0.5)
    t = -math.pi + dt * (np.arange(nt) + 0.5)
    R, T = np.meshgrid(r, t, indexing="ij")
    Z = R * np.exp(1j * T)
    try:
        vals = np.asarray(fn(Z), dtype=np.complex128)
    except Exception:
        vals = np.empty(Z.shape, dtype=np.complex128)
        for idx in np.ndindex(Z.shape):
            try:
                vals[idx] = fn(complex(Z[idx]))
            except Exception:
                vals[idx] = 0.0
    return float(np.sum(log_plus_reciprocal(vals) * R) * dr * dt)
