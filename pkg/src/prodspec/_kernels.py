"""Compiled dense eigenvalue kernels.

All kernels work in place on contiguous ``complex128`` / ``float64`` arrays
and return only eigenvalues.
"""

import numpy as np
from numba import njit

EPS = np.finfo(np.float64).eps
# no nnan/ninf: deflation tests compare against exact zeros
_FM = {"contract", "reassoc", "arcp"}


@njit(cache=True, fastmath=_FM)
def hessenberg_reduce(a):
    """Reduce ``a`` (n x n, complex) to upper Hessenberg form in place.

    Unitary similarity by Householder reflectors; entries below the first
    subdiagonal are set to exact zeros.
    """
    n = a.shape[0]
    v = np.empty(n, dtype=np.complex128)
    u = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        norm2 = 0.0
        for i in range(k + 1, n):
            norm2 += a[i, k].real ** 2 + a[i, k].imag ** 2
        xnorm = np.sqrt(norm2)
        if xnorm == 0.0:
            continue
        x0 = a[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * xnorm
        for i in range(k + 1, n):
            v[i] = a[i, k]
        v[k + 1] -= alpha
        vnorm2 = 0.0
        for i in range(k + 1, n):
            vnorm2 += v[i].real ** 2 + v[i].imag ** 2
        if vnorm2 == 0.0:
            continue
        scale = 2.0 / vnorm2
        # left: A[k+1:, k:] -= scale * v (v^H A)
        for j in range(k, n):
            u[j] = 0.0j
        for i in range(k + 1, n):
            vc = v[i].conjugate()
            for j in range(k, n):
                u[j] += vc * a[i, j]
        for i in range(k + 1, n):
            vi = v[i] * scale
            for j in range(k, n):
                a[i, j] -= vi * u[j]
        # right: A[:, k+1:] -= scale * (A v) v^H
        for i in range(n):
            s = 0.0j
            for j in range(k + 1, n):
                s += a[i, j] * v[j]
            s *= scale
            for j in range(k + 1, n):
                a[i, j] -= s * v[j].conjugate()
        a[k + 1, k] = alpha
        for i in range(k + 2, n):
            a[i, k] = 0.0j


@njit(cache=True, fastmath=_FM)
def _wilkinson_shift(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closer to d
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mu1 = 0.5 * (a + d) + disc
    mu2 = 0.5 * (a + d) - disc
    if abs(mu1 - d) <= abs(mu2 - d):
        return mu1
    return mu2


@njit(cache=True, fastmath=_FM)
def hessenberg_qr_eigvals(h, max_sweeps):
    """Eigenvalues of an upper Hessenberg matrix by implicit single-shift QR.

    ``h`` is overwritten. Returns ``(eigs, sweeps)``; ``sweeps`` is -1 when
    the sweep budget ran out before every eigenvalue deflated.
    """
    n = h.shape[0]
    eigs = np.zeros(n, dtype=np.complex128)
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm = max(anorm, abs(h[i, j]))
    hi = n - 1
    sweeps = 0
    its = 0
    while hi >= 0:
        if hi == 0:
            eigs[0] = h[0, 0]
            break
        l = hi
        while l > 0:
            tst = abs(h[l - 1, l - 1]) + abs(h[l, l])
            if tst == 0.0:
                tst = anorm
            if abs(h[l, l - 1]) <= EPS * tst:
                h[l, l - 1] = 0.0j
                break
            l -= 1
        if l == hi:
            eigs[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        if sweeps >= max_sweeps:
            return eigs, -1
        if its == 10 or its == 20:
            mu = h[hi, hi] + abs(h[hi, hi - 1].real) + abs(h[hi, hi - 1].imag)
        else:
            mu = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi],
                                  h[hi, hi - 1], h[hi, hi])
        x = h[l, l] - mu
        y = h[l + 1, l]
        for k in range(l, hi):
            ax = abs(x)
            r = np.sqrt(ax * ax + y.real * y.real + y.imag * y.imag)
            if r == 0.0:
                c = 1.0
                s = 0.0j
            elif ax == 0.0:
                c = 0.0
                s = y.conjugate() / r
            else:
                c = ax / r
                s = (x / ax) * y.conjugate() / r
            # rows k, k+1 <- G rows
            jstart = k - 1 if k > l else l
            for j in range(jstart, hi + 1):
                t1 = h[k, j]
                t2 = h[k + 1, j]
                h[k, j] = c * t1 + s * t2
                h[k + 1, j] = -s.conjugate() * t1 + c * t2
            # columns k, k+1 <- cols G^H
            iend = min(k + 2, hi)
            for i in range(l, iend + 1):
                t1 = h[i, k]
                t2 = h[i, k + 1]
                h[i, k] = c * t1 + s.conjugate() * t2
                h[i, k + 1] = -s * t1 + c * t2
            if k > l:
                h[k + 1, k - 1] = 0.0j
            if k < hi - 1:
                x = h[k + 1, k]
                y = h[k + 2, k]
        sweeps += 1
        its += 1
    return eigs, sweeps


@njit(cache=True, fastmath=_FM)
def hermitian_tridiagonalize(a):
    """Householder reduction of a Hermitian matrix to real tridiagonal form.

    ``a`` is overwritten. Returns the diagonal and the moduli of the
    off-diagonal; the phases of a Hermitian tridiagonal matrix can be
    removed by a diagonal unitary similarity, so eigenvalues are unchanged.
    """
    n = a.shape[0]
    v = np.empty(n, dtype=np.complex128)
    w = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        norm2 = 0.0
        for i in range(k + 1, n):
            norm2 += a[i, k].real ** 2 + a[i, k].imag ** 2
        xnorm = np.sqrt(norm2)
        if xnorm == 0.0:
            continue
        x0 = a[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * xnorm
        for i in range(k + 1, n):
            v[i] = a[i, k]
        v[k + 1] -= alpha
        vnorm2 = 0.0
        for i in range(k + 1, n):
            vnorm2 += v[i].real ** 2 + v[i].imag ** 2
        if vnorm2 == 0.0:
            continue
        vn = np.sqrt(vnorm2)
        for i in range(k + 1, n):
            v[i] /= vn
        # p = A22 v, K = v^H p, w = p - K v; A22 -= 2 (v w^H + w v^H)
        kk = 0.0j
        for i in range(k + 1, n):
            s = 0.0j
            for j in range(k + 1, n):
                s += a[i, j] * v[j]
            w[i] = s
            kk += v[i].conjugate() * s
        for i in range(k + 1, n):
            w[i] -= kk.real * v[i]
        for i in range(k + 1, n):
            vi = v[i]
            wi = w[i]
            for j in range(k + 1, n):
                a[i, j] -= 2.0 * (vi * w[j].conjugate() + wi * v[j].conjugate())
        a[k + 1, k] = alpha
        a[k, k + 1] = alpha.conjugate()
        for i in range(k + 2, n):
            a[i, k] = 0.0j
            a[k, i] = 0.0j
    d = np.empty(n, dtype=np.float64)
    e = np.zeros(n, dtype=np.float64)
    for i in range(n):
        d[i] = a[i, i].real
    for i in range(n - 1):
        e[i] = abs(a[i + 1, i])
    return d, e


@njit(cache=True, fastmath=_FM)
def tridiagonal_ql_eigvals(d, e, max_iter):
    """Eigenvalues of a real symmetric tridiagonal matrix, implicit QL.

    ``d`` (diagonal) and ``e`` (subdiagonal in ``e[:n-1]``) are overwritten.
    Returns ``(d, ok)``; eigenvalues are left unsorted in ``d``.
    """
    n = d.shape[0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if it >= max_iter:
                return d, False
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, True
