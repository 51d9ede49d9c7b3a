"""Compiled dense kernels backing :mod:`outlab.linalg`.

Everything here works on C-ordered ``complex128`` arrays and mutates its
input in place unless stated otherwise. Callers are expected to copy.
"""
import numpy as np
from numba import njit

_ULP = np.finfo(np.float64).eps
_SAFMIN = np.finfo(np.float64).tiny


@njit(cache=True)
def _abs1(z):
    return abs(z.real) + abs(z.imag)


@njit(cache=True)
def lu_inplace(a):
    """Partial-pivoting LU. Returns (perm, sign, singular)."""
    n = a.shape[0]
    perm = np.arange(n)
    sign = 1
    singular = False
    for k in range(n):
        p = k
        best = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > best:
                best = v
                p = i
        if best == 0.0:
            singular = True
            continue
        if p != k:
            for j in range(n):
                t = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = t
            t2 = perm[k]
            perm[k] = perm[p]
            perm[p] = t2
            sign = -sign
        piv = a[k, k]
        for i in range(k + 1, n):
            l = a[i, k] / piv
            a[i, k] = l
            if l != 0:
                for j in range(k + 1, n):
                    a[i, j] -= l * a[k, j]
    return perm, sign, singular


@njit(cache=True)
def lu_solve(lu, perm, b):
    """Solve with packed LU factors; ``b`` is (n, r) and is not modified."""
    n = lu.shape[0]
    r = b.shape[1]
    x = np.empty((n, r), dtype=np.complex128)
    for i in range(n):
        for c in range(r):
            x[i, c] = b[perm[i], c]
    for i in range(n):
        for j in range(i):
            l = lu[i, j]
            if l != 0:
                for c in range(r):
                    x[i, c] -= l * x[j, c]
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n):
            u = lu[i, j]
            for c in range(r):
                x[i, c] -= u * x[j, c]
        for c in range(r):
            x[i, c] /= lu[i, i]
    return x


@njit(cache=True)
def balance_inplace(a):
    """Diagonal similarity scaling by powers of two (no permutations).

    Returns the scaling vector ``d`` with ``a <- D^{-1} a D``.
    """
    n = a.shape[0]
    d = np.ones(n)
    radix = 2.0
    converged = False
    while not converged:
        converged = True
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += _abs1(a[j, i])
                    r += _abs1(a[i, j])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= radix * radix
            g = r * radix
            while c > g:
                f /= radix
                c /= radix * radix
            if (c + r) / f < 0.95 * s:
                converged = False
                d[i] *= f
                for j in range(n):
                    a[i, j] /= f
                for j in range(n):
                    a[j, i] *= f
    return d


@njit(cache=True)
def hessenberg_inplace(a):
    """Householder reduction to upper Hessenberg form.

    On exit the upper Hessenberg part of ``a`` holds H and the entries below
    the first subdiagonal hold the reflector tails (reflector k has unit
    leading entry at row k+1). Returns the ``tau`` array so that
    ``Q = prod_k (I - tau_k v_k v_k^*)`` and ``A = Q H Q^*``.
    """
    n = a.shape[0]
    tau = np.zeros(max(n - 2, 0), dtype=a.dtype)
    w = np.empty(n, dtype=a.dtype)
    v = np.empty(n, dtype=a.dtype)
    zero = a[0, 0] * 0
    for k in range(n - 2):
        m = n - k - 1
        xnorm2 = 0.0
        for i in range(k + 2, n):
            xnorm2 += np.real(a[i, k]) ** 2 + np.imag(a[i, k]) ** 2
        alpha = a[k + 1, k]
        if xnorm2 == 0.0 and np.imag(alpha) == 0.0:
            tau[k] = zero
            continue
        beta = np.sqrt(np.real(alpha) ** 2 + np.imag(alpha) ** 2 + xnorm2)
        if np.real(alpha) >= 0:
            beta = -beta
        t = (beta - alpha) / beta
        scale = 1.0 / (alpha - beta)
        v[0] = 1.0
        for i in range(1, m):
            v[i] = a[k + 1 + i, k] * scale
        # tau = (beta - alpha)/beta; H = I - tau v v^*, H^* x = beta e1
        tau[k] = t
        a[k + 1, k] = beta
        for i in range(1, m):
            a[k + 1 + i, k] = v[i]
        # left: A[k+1:, k+1:] <- (I - conj(tau) v v^*) A[k+1:, k+1:]
        tc = np.conj(t)
        for j in range(k + 1, n):
            w[j] = 0.0
        for i in range(m):
            vi = np.conj(v[i])
            row = k + 1 + i
            for j in range(k + 1, n):
                w[j] += vi * a[row, j]
        for i in range(m):
            f = tc * v[i]
            row = k + 1 + i
            for j in range(k + 1, n):
                a[row, j] -= f * w[j]
        # right: A[:, k+1:] <- A[:, k+1:] (I - tau v v^*)
        for i in range(n):
            s = zero
            for j in range(m):
                s += a[i, k + 1 + j] * v[j]
            s *= t
            for j in range(m):
                a[i, k + 1 + j] -= s * np.conj(v[j])
    return tau


@njit(cache=True)
def apply_q(packed, tau, x, conjugate_transpose):
    """Apply Q (or Q^*) from :func:`hessenberg_inplace` to the columns of x."""
    n = packed.shape[0]
    r = x.shape[1]
    nref = tau.shape[0]
    v = np.empty(n, dtype=np.complex128)
    for step in range(nref):
        k = nref - 1 - step if not conjugate_transpose else step
        t = tau[k]
        if t == 0:
            continue
        m = n - k - 1
        v[0] = 1.0
        for i in range(1, m):
            v[i] = packed[k + 1 + i, k]
        tt = np.conj(t) if conjugate_transpose else t
        for c in range(r):
            s = 0.0j
            for i in range(m):
                s += np.conj(v[i]) * x[k + 1 + i, c]
            s *= tt
            for i in range(m):
                x[k + 1 + i, c] -= s * v[i]
    return x


@njit(cache=True)
def hessenberg_shift_solve(h, z, b):
    """Solve (H - z I) x = b for upper Hessenberg H; b is (n, r).

    Returns (x, singular, log_abs_det, det_phase) where the determinant is
    that of H - z I.
    """
    n = h.shape[0]
    r = b.shape[1]
    u = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            u[i, j] = h[i, j]
        u[i, i] -= z
    x = b.copy()
    singular = False
    logdet = 0.0
    phase = 1.0 + 0.0j
    for k in range(n - 1):
        # only rows k and k+1 can hold the pivot
        if abs(u[k + 1, k]) > abs(u[k, k]):
            for j in range(k, n):
                t = u[k, j]
                u[k, j] = u[k + 1, j]
                u[k + 1, j] = t
            for c in range(r):
                t = x[k, c]
                x[k, c] = x[k + 1, c]
                x[k + 1, c] = t
            phase = -phase
        piv = u[k, k]
        if piv == 0:
            singular = True
            break
        l = u[k + 1, k] / piv
        if l != 0:
            for j in range(k + 1, n):
                u[k + 1, j] -= l * u[k, j]
            for c in range(r):
                x[k + 1, c] -= l * x[k, c]
    if not singular:
        for i in range(n):
            d = u[i, i]
            ad = abs(d)
            if ad == 0.0:
                singular = True
                break
            logdet += np.log(ad)
            phase *= d / ad
    if singular:
        return x, True, -np.inf, 0.0j
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n):
            uij = u[i, j]
            for c in range(r):
                x[i, c] -= uij * x[j, c]
        for c in range(r):
            x[i, c] /= u[i, i]
    return x, False, logdet, phase


@njit(cache=True)
def _wilkinson(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closest to d
    tr2 = 0.5 * (a + d)
    det = a * d - b * c
    disc = np.sqrt(tr2 * tr2 - det)
    l1 = tr2 + disc
    l2 = tr2 - disc
    if abs(l1 - d) <= abs(l2 - d):
        return l1
    return l2


@njit(cache=True)
def hessenberg_qr_eigvals(h, max_sweeps, stagnation):
    """Single-shift complex QR on an upper Hessenberg matrix (in place).

    Returns (eigenvalues, converged, n_deflated). On failure the first
    ``n - n_deflated`` eigenvalue slots are undefined.
    """
    n = h.shape[0]
    w = np.zeros(n, dtype=np.complex128)
    if n == 0:
        return w, True, 0
    cs = np.empty(n, dtype=np.float64)
    sn = np.empty(n, dtype=np.complex128)
    hnorm = 0.0
    for i in range(n):
        for j in range(max(0, i - 1), n):
            hnorm = max(hnorm, _abs1(h[i, j]))
    smallnum = _SAFMIN * (n / _ULP)
    hi = n - 1
    its = 0
    sweeps = 0
    while hi >= 0:
        l = hi
        while l > 0:
            s = _abs1(h[l - 1, l - 1]) + _abs1(h[l, l])
            if s == 0.0:
                s = hnorm
            sub = _abs1(h[l, l - 1])
            if sub <= _ULP * s or sub <= smallnum:
                h[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            w[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        if sweeps >= max_sweeps:
            return w, False, n - 1 - hi
        if its > 0 and its % stagnation == 0:
            # exceptional shift
            sigma = h[hi, hi] + 0.75 * abs(h[hi, hi - 1].real) + 0.75j * abs(h[hi, hi - 1].imag)
            if hi - 1 > l:
                sigma += 0.4375 * abs(h[hi - 1, hi - 2])
        else:
            sigma = _wilkinson(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        for j in range(l, hi + 1):
            h[j, j] -= sigma
        for k in range(l, hi):
            a = h[k, k]
            b = h[k + 1, k]
            aa = abs(a)
            nrm = np.sqrt(aa * aa + b.real * b.real + b.imag * b.imag)
            if nrm == 0.0:
                c = 1.0
                s_ = 0.0j
            elif aa == 0.0:
                c = 0.0
                s_ = np.conj(b) / abs(b)
            else:
                c = aa / nrm
                s_ = (a / aa) * np.conj(b) / nrm
            cs[k] = c
            sn[k] = s_
            sc = np.conj(s_)
            for j in range(k, hi + 1):
                x = h[k, j]
                y = h[k + 1, j]
                h[k, j] = c * x + s_ * y
                h[k + 1, j] = -sc * x + c * y
        for k in range(l, hi):
            c = cs[k]
            s_ = sn[k]
            sc = np.conj(s_)
            top = min(k + 2, hi)
            for i in range(l, top + 1):
                x = h[i, k]
                y = h[i, k + 1]
                h[i, k] = c * x + sc * y
                h[i, k + 1] = -s_ * x + c * y
        for j in range(l, hi + 1):
            h[j, j] += sigma
        its += 1
        sweeps += 1
    return w, True, n


@njit(cache=True)
def jacobi_singular_values(at, tol, max_sweeps):
    """One-sided Jacobi on the rows of ``at`` (rows are the columns of A).

    Returns (unsorted singular values, sweeps used, converged).
    """
    m = at.shape[0]
    n = at.shape[1]
    norms = np.empty(m)
    for p in range(m):
        s = 0.0
        for i in range(n):
            s += at[p, i].real ** 2 + at[p, i].imag ** 2
        norms[p] = s
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        rotated = False
        for p in range(m - 1):
            for q in range(p + 1, m):
                alpha = norms[p]
                beta = norms[q]
                g = 0.0j
                for i in range(n):
                    g += np.conj(at[p, i]) * at[q, i]
                ag = abs(g)
                if ag == 0.0 or ag <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                ph = g / ag
                zeta = (beta - alpha) / (2.0 * ag)
                if zeta >= 0:
                    t = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                phc = np.conj(ph)
                for i in range(n):
                    x = at[p, i]
                    y = at[q, i] * phc
                    at[p, i] = c * x - s * y
                    at[q, i] = (s * x + c * y) * ph
                norms[p] = alpha - t * ag
                norms[q] = beta + t * ag
        # refresh norms to shed accumulated drift
        for p in range(m):
            s2 = 0.0
            for i in range(n):
                s2 += at[p, i].real ** 2 + at[p, i].imag ** 2
            norms[p] = s2
        if not rotated:
            converged = True
            break
    out = np.empty(m)
    for p in range(m):
        out[p] = np.sqrt(max(norms[p], 0.0))
    return out, sweeps, converged
