"""Dense complex linear algebra written for this package.

Matrices and vectors are plain numpy arrays. The factorizations and
eigen/singular value iterations live in :mod:`outlab._kernels`; this module
wraps them with validation and the error conventions of the package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _kernels
from .errors import (
    ConvergenceError,
    InvalidDimensionError,
    ResolventSingularError,
    SingularMatrixError,
)

_EPS = np.finfo(np.float64).eps


def _as_square(M, name="M"):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidDimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def _as_vector(v):
    v = np.asarray(v)
    if v.ndim != 1:
        raise InvalidDimensionError(f"expected a vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class LUFactorization:
    """Packed partial-pivoting LU: ``M[perm] = L @ U``."""

    lu: np.ndarray
    perm: np.ndarray
    sign: int
    singular: bool

    @property
    def n(self):
        return self.lu.shape[0]

    def factors(self):
        """Return explicit (P, L, U) with ``M = P @ L @ U``."""
        n = self.n
        L = np.tril(self.lu, -1) + np.eye(n)
        U = np.triu(self.lu)
        P = np.zeros((n, n))
        P[self.perm, np.arange(n)] = 1.0
        return P, L, U


def lu_factor(M) -> LUFactorization:
    M = _as_square(M)
    a = np.array(M, dtype=np.complex128, order="C", copy=True)
    perm, sign, singular = _kernels.lu_inplace(a)
    return LUFactorization(lu=a, perm=perm, sign=int(sign), singular=bool(singular))


def solve(fact: LUFactorization, rhs):
    """Solve ``M x = rhs`` for a vector or a matrix of right-hand sides."""
    if fact.singular:
        raise SingularMatrixError("matrix is singular")
    rhs = np.asarray(rhs)
    vec = rhs.ndim == 1
    b = np.ascontiguousarray(rhs.reshape(fact.n, -1), dtype=np.complex128)
    x = _kernels.lu_solve(fact.lu, fact.perm, b)
    return x[:, 0] if vec else x


def determinant(fact: LUFactorization) -> complex:
    if fact.singular:
        return 0j
    return complex(fact.sign * np.prod(np.diag(fact.lu)))


def det(M) -> complex:
    return determinant(lu_factor(M))


def det_ratio(num, den) -> complex:
    """``det(num) / det(den)`` accumulated factor by factor to avoid overflow."""
    fn, fd = lu_factor(num), lu_factor(den)
    if fd.singular:
        raise SingularMatrixError("denominator is singular")
    if fn.singular:
        return 0j
    ratio = np.prod(np.diag(fn.lu) / np.diag(fd.lu))
    return complex(fn.sign * fd.sign * ratio)


def eigenvalues(M, tol=None, max_sweeps=None, balance=True, stagnation=10):
    """All eigenvalues of a square matrix, with multiplicity.

    Balancing, Householder reduction to Hessenberg form, then single-shift
    complex QR with Wilkinson shifts and an exceptional shift every
    ``stagnation`` sweeps without deflation. Subdiagonal entries are deflated
    at the usual ``eps * (|h_{k-1,k-1}| + |h_kk|)`` level; ``tol`` adds an
    absolute floor ``tol * ||M||_F`` when given.
    """
    M = _as_square(M)
    n = M.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.complex128)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    real = not np.iscomplexobj(M)
    a = np.array(M, dtype=np.float64 if real else np.complex128, order="C", copy=True)
    if balance:
        _kernels.balance_inplace(a)
    _kernels.hessenberg_inplace(a)
    h = np.ascontiguousarray(np.triu(a, -1), dtype=np.complex128)
    if tol is not None:
        floor = tol * np.linalg.norm(M)
        sub = np.abs(np.diag(h, -1)) <= floor
        idx = np.nonzero(sub)[0]
        h[idx + 1, idx] = 0.0
    if max_sweeps is None:
        max_sweeps = 30 * n
    w, converged, n_deflated = _kernels.hessenberg_qr_eigvals(h, max_sweeps, stagnation)
    if not converged:
        raise ConvergenceError(
            f"QR iteration did not converge in {max_sweeps} sweeps "
            f"({n_deflated} of {n} eigenvalues deflated)",
            partial=w[n - n_deflated:].copy(),
        )
    return w


def singular_values(M, tol=None, max_sweeps=60):
    """Singular values in descending order via one-sided Jacobi."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise InvalidDimensionError("expected a matrix")
    rows, cols = M.shape
    if min(rows, cols) == 0:
        return np.zeros(0)
    # rows of `at` are the columns being orthogonalized
    if rows >= cols:
        at = np.array(M.T, dtype=np.complex128, order="C", copy=True)
    else:
        at = np.array(M.conj(), dtype=np.complex128, order="C", copy=True)
    if tol is None:
        tol = max(rows, cols) * _EPS
    sv, _, converged = _kernels.jacobi_singular_values(at, tol, max_sweeps)
    if not converged:
        raise ConvergenceError("Jacobi SVD did not converge", partial=np.sort(sv)[::-1])
    return np.sort(sv)[::-1]


def _power_norm(apply, apply_adj, n, tol, max_iter, dtype):
    # power iteration on H = M^* M; stops once ||H x - lam x|| <= tol * lam,
    # which bounds the error of lam = ||M x||^2 by tol * lam
    rng = np.random.default_rng(20240611)
    x = rng.standard_normal(n)
    if np.dtype(dtype).kind == "c":
        x = x + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = apply(x)
        lam = float(np.vdot(y, y).real)
        if lam == 0.0:
            return 0.0
        hx = apply_adj(y)
        if np.linalg.norm(hx - lam * x) <= tol * lam:
            break
        x = hx / np.linalg.norm(hx)
    return float(np.sqrt(lam))


def operator_norm(M, tol=1e-10, max_iter=100_000):
    """Largest singular value by power iteration on ``M^* M``."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    MH = M.conj().T
    return _power_norm(lambda x: M @ x, lambda y: MH @ y, M.shape[1], tol, max_iter, M.dtype)


def power_operator_norm(M, m, tol=1e-8, max_iter=20_000):
    """``||M^m||_op`` without forming the power."""
    M = _as_square(M)
    MH = M.conj().T

    def fwd(x):
        for _ in range(m):
            x = M @ x
        return x

    def adj(y):
        for _ in range(m):
            y = MH @ y
        return y

    return _power_norm(fwd, adj, M.shape[0], tol, max_iter, M.dtype)


def resolvent_solve(X, z, rhs):
    """``(X/sqrt(n) - z I)^{-1} rhs`` through a dense LU factorization."""
    X = _as_square(X, "X")
    n = X.shape[0]
    shifted = X / np.sqrt(n) - z * np.eye(n)
    fact = lu_factor(shifted)
    diag = np.abs(np.diag(fact.lu))
    if fact.singular or diag.min() <= n * _EPS * max(diag.max(), 1.0):
        raise ResolventSingularError(z)
    return solve(fact, rhs)


def bilinear_power(X, m, u, v):
    """``<(X/sqrt(n))^m u, v> = v^* (X/sqrt(n))^m u`` by repeated matvecs."""
    X = _as_square(X, "X")
    u, v = _as_vector(u), _as_vector(v)
    n = X.shape[0]
    if u.shape[0] != n or v.shape[0] != n:
        raise InvalidDimensionError("vector length does not match X")
    if m < 0:
        raise ValueError("m must be nonnegative")
    y = u
    scale = 1.0 / np.sqrt(n)
    for _ in range(m):
        y = (X @ y) * scale
    return complex(np.vdot(v, y))


class HessenbergForm:
    """``M = Q H Q^*`` with shifted solves ``(H - z)`` in O(n^2) per shift.

    Used where one matrix is probed at many spectral parameters.
    """

    def __init__(self, M):
        M = _as_square(M)
        real = not np.iscomplexobj(M)
        a = np.array(M, dtype=np.float64 if real else np.complex128, order="C", copy=True)
        tau = _kernels.hessenberg_inplace(a)
        self.n = M.shape[0]
        self._packed = np.ascontiguousarray(a, dtype=np.complex128)
        self._tau = np.ascontiguousarray(tau, dtype=np.complex128)
        self.H = np.ascontiguousarray(np.triu(a, -1), dtype=np.complex128)

    def to_hessenberg_basis(self, x):
        """``Q^* x`` for a vector or column block."""
        x = np.asarray(x)
        vec = x.ndim == 1
        b = np.array(x.reshape(self.n, -1), dtype=np.complex128, order="C", copy=True)
        _kernels.apply_q(self._packed, self._tau, b, True)
        return b[:, 0] if vec else b

    def from_hessenberg_basis(self, y):
        """``Q y`` for a vector or column block."""
        y = np.asarray(y)
        vec = y.ndim == 1
        b = np.array(y.reshape(self.n, -1), dtype=np.complex128, order="C", copy=True)
        _kernels.apply_q(self._packed, self._tau, b, False)
        return b[:, 0] if vec else b

    def shifted_solve(self, z, rhs_hat):
        """Solve ``(H - z) y = rhs_hat`` in the Hessenberg basis.

        Returns ``(y, log|det(H - z)|, det / |det|)``.
        """
        b = np.ascontiguousarray(np.asarray(rhs_hat).reshape(self.n, -1), dtype=np.complex128)
        y, singular, logdet, phase = _kernels.hessenberg_shift_solve(self.H, complex(z), b)
        if singular:
            raise ResolventSingularError(z)
        return y, logdet, phase


def match_multisets(a, b):
    """Min-cost bipartite matching of two equal-size multisets of complex numbers.

    Returns ``(pairs, max_distance)`` where ``pairs`` lists index pairs into
    ``a`` and ``b``.
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    if a.size != b.size:
        raise ValueError(f"multisets differ in size: {a.size} vs {b.size}")
    if a.size == 0:
        return [], 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return list(zip(rows.tolist(), cols.tolist())), float(cost[rows, cols].max())


def matching_distance(a, b) -> float:
    return match_multisets(a, b)[1]
