# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled profile-likelihood kernels.

Mirrors :mod:`gpdnorm._pykernels` operation for operation. Every loop runs
without the GIL so replicate-level threading can overlap kernel calls.
"""

import numpy as np

from libc.math cimport log, exp, sqrt, floor, fabs, NAN, INFINITY
from libc.stdlib cimport malloc, free

cdef int ML_GRID = 200
cdef int ML_MAX_EXTEND = 4
cdef double ML_T_TOP = 1.0 - 1e-12
cdef double SERIES_EPS = 1e-8


cdef extern from "_simd.h" nogil:
    double gpd_sumlog(const double* x, Py_ssize_t n, double b)
    double gpd_sumlog_ratio(const double* x, Py_ssize_t n, double b, double* ds)


cdef inline double _neg_mean_log(const double* x, Py_ssize_t n, double b) noexcept nogil:
    return -gpd_sumlog(x, n, b) / n


cdef inline double _loglik(const double* x, Py_ssize_t n, double b, double xbar) noexcept nogil:
    cdef double k, r
    if b == 0.0:
        return n * (-log(xbar) - 1.0)
    k = _neg_mean_log(x, n, b)
    r = b / k
    if not r > 0.0:
        return NAN
    return n * (log(r) + k - 1.0)


cdef inline double _score(const double* y, Py_ssize_t n, double t, double ybar, double y2bar) noexcept nogil:
    # derivative of the per-observation profile log-likelihood in t
    cdef double s, d = 0.0, k, kp
    if fabs(t) < SERIES_EPS:
        return ybar - y2bar / (2.0 * ybar)
    s = gpd_sumlog_ratio(y, n, t, &d)
    k = -s / n
    kp = d / n
    return 1.0 / t - kp / k + kp


def loglik_grid(const double[::1] x, const double[::1] bs):
    """Profile log-likelihood of ``x`` at every ``b`` in ``bs``."""
    cdef Py_ssize_t n = x.shape[0], g = bs.shape[0], j, i
    cdef double xbar = 0.0
    out = np.empty(g, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            xbar += x[i]
        xbar /= n
        for j in range(g):
            o[j] = _loglik(&x[0], n, bs[j], xbar)
    return out


cdef void _zs_row(const double* x, Py_ssize_t n, double xmax, double xq,
                  double* bgrid, double* lgrid,
                  double* b_out, double* xi_out, double* sig_out) noexcept nogil:
    cdef int mg = 20 + <int>floor(sqrt(<double>n))
    cdef int j
    cdef double xbar = 0.0, lmax = -INFINITY, wsum = 0.0, bhat = 0.0, w, k
    cdef Py_ssize_t i
    if not (xmax > 0.0 and xq > 0.0):
        b_out[0] = NAN
        xi_out[0] = NAN
        sig_out[0] = NAN
        return
    for i in range(n):
        xbar += x[i]
    xbar /= n
    for j in range(mg):
        bgrid[j] = 1.0 / xmax + (1.0 - sqrt(mg / (j + 0.5))) / (3.0 * xq)
        lgrid[j] = _loglik(x, n, bgrid[j], xbar)
        if lgrid[j] > lmax:
            lmax = lgrid[j]
    if not lmax > -INFINITY:
        b_out[0] = NAN
        xi_out[0] = NAN
        sig_out[0] = NAN
        return
    for j in range(mg):
        w = exp(lgrid[j] - lmax)
        wsum += w
        bhat += w * bgrid[j]
    bhat /= wsum
    b_out[0] = bhat
    if bhat == 0.0:
        xi_out[0] = 0.0
        sig_out[0] = xbar
        return
    k = _neg_mean_log(x, n, bhat)
    xi_out[0] = -k
    sig_out[0] = k / bhat


def zs_batch(const double[:, ::1] X, const double[::1] xmax, const double[::1] xq):
    """Zhang-Stephens fit of every row of ``X``.

    ``xmax`` and ``xq`` carry each row's maximum and first-quartile order
    statistic. Rows with a nonpositive max or quartile come back as NaN.
    """
    cdef Py_ssize_t rows = X.shape[0], n = X.shape[1], r
    cdef int mg = 20 + <int>floor(sqrt(<double>n))
    b = np.empty(rows, dtype=np.float64)
    xi = np.empty(rows, dtype=np.float64)
    sig = np.empty(rows, dtype=np.float64)
    cdef double[::1] bv = b, xv = xi, sv = sig
    cdef double* bgrid
    cdef double* lgrid
    if rows == 0:
        return b, xi, sig
    bgrid = <double*>malloc(mg * sizeof(double))
    lgrid = <double*>malloc(mg * sizeof(double))
    if bgrid == NULL or lgrid == NULL:
        free(bgrid)
        free(lgrid)
        raise MemoryError()
    try:
        with nogil:
            for r in range(rows):
                _zs_row(&X[r, 0], n, xmax[r], xq[r], bgrid, lgrid, &bv[r], &xv[r], &sv[r])
    finally:
        free(bgrid)
        free(lgrid)
    return b, xi, sig


cdef int _ml_row(const double* x, Py_ssize_t n, double* y, double* tg, double* lg,
                 double* b_out, double* xi_out, double* sig_out) noexcept nogil:
    """Status: 0 ok, 1 stuck at the lower search bound, 2 at the xi = -1 cap,
    3 degenerate sample, 4 golden-section fallback used."""
    cdef Py_ssize_t i
    cdef int j, best, ext, it, status = 0
    cdef double xmax = -INFINITY, xmin = INFINITY, ybar = 0.0, y2bar = 0.0
    cdef double t_lo, v_lo, v_hi, lbest, a, c, m, sa, sc, sm, k, t_hat
    cdef double g1, g2, f1, f2, invphi = 0.6180339887498949
    for i in range(n):
        if x[i] > xmax:
            xmax = x[i]
        if x[i] < xmin:
            xmin = x[i]
    if not (xmax > 0.0) or xmin < 0.0 or xmax == xmin:
        b_out[0] = NAN
        xi_out[0] = NAN
        sig_out[0] = NAN
        return 3
    for i in range(n):
        y[i] = x[i] / xmax
        ybar += y[i]
        y2bar += y[i] * y[i]
    ybar /= n
    y2bar /= n

    t_lo = -20.0 / ybar
    ext = 0
    while True:
        # grid uniform in log(1 - t), ascending in t
        v_lo = log(1.0 - t_lo)
        v_hi = log(1.0 - ML_T_TOP)
        best = -1
        lbest = -INFINITY
        for j in range(ML_GRID):
            tg[j] = 1.0 - exp(v_lo + (v_hi - v_lo) * j / (ML_GRID - 1.0))
            k = _neg_mean_log(y, n, tg[j]) if tg[j] != 0.0 else 0.0
            if k > 1.0:
                lg[j] = NAN
                continue
            lg[j] = _loglik(y, n, tg[j], ybar)
            if lg[j] > lbest:
                lbest = lg[j]
                best = j
        if best == 0 and ext < ML_MAX_EXTEND:
            t_lo *= 10.0
            ext += 1
            continue
        break

    if best < 0:
        b_out[0] = NAN
        xi_out[0] = NAN
        sig_out[0] = NAN
        return 3
    if best == 0:
        status = 1
        t_hat = tg[0]
    elif best == ML_GRID - 1 or not (lg[best + 1] == lg[best + 1]):
        status = 2
        t_hat = tg[best]
    else:
        a = tg[best - 1]
        c = tg[best + 1]
        sm = _score(y, n, tg[best], ybar, y2bar)
        if sm > 0.0:
            a = tg[best]
        else:
            c = tg[best]
        sa = _score(y, n, a, ybar, y2bar)
        sc = _score(y, n, c, ybar, y2bar)
        if sa > 0.0 and sc < 0.0:
            for it in range(200):
                m = 0.5 * (a + c)
                if m <= a or m >= c:
                    break
                sm = _score(y, n, m, ybar, y2bar)
                if sm > 0.0:
                    a = m
                elif sm < 0.0:
                    c = m
                else:
                    a = m
                    c = m
                    break
            t_hat = 0.5 * (a + c)
        else:
            status = 4
            a = tg[best - 1]
            c = tg[best + 1]
            g1 = c - invphi * (c - a)
            g2 = a + invphi * (c - a)
            f1 = _loglik(y, n, g1, ybar)
            f2 = _loglik(y, n, g2, ybar)
            for it in range(200):
                if c - a <= 1e-13 * (1.0 + fabs(a)):
                    break
                if f1 >= f2:
                    c = g2
                    g2 = g1
                    f2 = f1
                    g1 = c - invphi * (c - a)
                    f1 = _loglik(y, n, g1, ybar)
                else:
                    a = g1
                    g1 = g2
                    f1 = f2
                    g2 = a + invphi * (c - a)
                    f2 = _loglik(y, n, g2, ybar)
            t_hat = 0.5 * (a + c)

    b_out[0] = t_hat / xmax
    if t_hat == 0.0:
        xi_out[0] = 0.0
        sig_out[0] = ybar * xmax
    else:
        k = _neg_mean_log(y, n, t_hat)
        xi_out[0] = -k
        sig_out[0] = k / t_hat * xmax
    return status


def ml_batch(const double[:, ::1] X):
    """Profile maximum-likelihood fit of every row of ``X``.

    Returns ``(b, xi, sigma, status)``; see ``_ml_row`` for status codes.
    """
    cdef Py_ssize_t rows = X.shape[0], n = X.shape[1], r
    b = np.empty(rows, dtype=np.float64)
    xi = np.empty(rows, dtype=np.float64)
    sig = np.empty(rows, dtype=np.float64)
    status = np.empty(rows, dtype=np.int32)
    cdef double[::1] bv = b, xv = xi, sv = sig
    cdef int[::1] st = status
    cdef double* y
    cdef double* tg
    cdef double* lg
    if rows == 0:
        return b, xi, sig, status
    y = <double*>malloc(n * sizeof(double))
    tg = <double*>malloc(ML_GRID * sizeof(double))
    lg = <double*>malloc(ML_GRID * sizeof(double))
    if y == NULL or tg == NULL or lg == NULL:
        free(y)
        free(tg)
        free(lg)
        raise MemoryError()
    try:
        with nogil:
            for r in range(rows):
                st[r] = _ml_row(&X[r, 0], n, y, tg, lg, &bv[r], &xv[r], &sv[r])
    finally:
        free(y)
        free(tg)
        free(lg)
    return b, xi, sig, status
