# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fringe-fit kernel: same damped Gauss-Newton iteration as the
numpy fallback, with the model, Jacobian and 4x4 linear algebra in C loops."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, isfinite, sin, sqrt

cnp.import_array()

BACKEND_NAME = "cython"

cdef double TWO_PI = 6.283185307179586


def fringe_curve(x, params, knowns, double lambda0):
    """Expected counts at stage delays ``x``; see the numpy backend."""
    cdef double gamma_eff = params[0]
    cdef double delta = params[1]
    cdef double s = params[2]
    cdef double i_in = params[3]
    cdef double r = knowns[0]
    cdef double t = knowns[1]
    cdef double g1p = knowns[2]
    cdef double g2p = knowns[3]
    cdef double gt1 = knowns[4]
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xa.shape[0]
    cdef Py_ssize_t i
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double mid = r * exp(-g1p) + t * exp(-(gt1 + g2p))
    cdef double amp = 2.0 * sqrt(r * t) * exp(-0.5 * (g1p + g2p + gt1) - gamma_eff)
    for i in range(n):
        out[i] = i_in * (mid + amp * cos(TWO_PI * s * xa[i] / lambda0 - delta))
    return out


cdef double _cost(double[::1] x, double[::1] y, double[::1] sqrt_w,
                  double* p, double* kn, double lambda0) nogil:
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double mid = kn[0] * exp(-kn[2]) + kn[1] * exp(-(kn[4] + kn[3]))
    cdef double amp = 2.0 * sqrt(kn[0] * kn[1]) * exp(
        -0.5 * (kn[2] + kn[3] + kn[4]) - p[0])
    cdef double acc = 0.0
    cdef double mu, resid
    for i in range(n):
        mu = p[3] * (mid + amp * cos(TWO_PI * p[2] * x[i] / lambda0 - p[1]))
        resid = sqrt_w[i] * (y[i] - mu)
        acc += resid * resid
    return acc


cdef void _normal_system(double[::1] x, double[::1] y, double[::1] sqrt_w,
                         double* p, double* kn, double lambda0,
                         bint fix_gamma, double* a, double* g) nogil:
    """Accumulate A = J^T W J (row-major 4x4) and g = J^T W r."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double mid = kn[0] * exp(-kn[2]) + kn[1] * exp(-(kn[4] + kn[3]))
    cdef double amp = 2.0 * sqrt(kn[0] * kn[1]) * exp(
        -0.5 * (kn[2] + kn[3] + kn[4]) - p[0])
    cdef double phase, cosp, sinp, shape, resid, sw
    cdef double row[4]
    for j in range(16):
        a[j] = 0.0
    for j in range(4):
        g[j] = 0.0
    for i in range(n):
        phase = TWO_PI * p[2] * x[i] / lambda0 - p[1]
        cosp = cos(phase)
        sinp = sin(phase)
        shape = mid + amp * cosp
        sw = sqrt_w[i]
        row[0] = -p[3] * amp * cosp * sw
        row[1] = p[3] * amp * sinp * sw
        row[2] = -p[3] * amp * sinp * (TWO_PI * x[i] / lambda0) * sw
        row[3] = shape * sw
        resid = sw * (y[i] - p[3] * shape)
        for j in range(4):
            g[j] += row[j] * resid
            for k in range(4):
                a[4 * j + k] += row[j] * row[k]
    if fix_gamma:
        for j in range(4):
            a[4 * 0 + j] = 0.0
            a[4 * j + 0] = 0.0
        a[0] = 1.0
        g[0] = 0.0


cdef int _solve4(double* a_in, double* b_in, double* out) nogil:
    """Gaussian elimination with partial pivoting; returns 0, or -1 if singular."""
    cdef double a[16]
    cdef double b[4]
    cdef Py_ssize_t i, j, k, piv
    cdef double best, tmp, factor
    for i in range(16):
        a[i] = a_in[i]
    for i in range(4):
        b[i] = b_in[i]
    for k in range(4):
        piv = k
        best = a[4 * k + k]
        if best < 0.0:
            best = -best
        for i in range(k + 1, 4):
            tmp = a[4 * i + k]
            if tmp < 0.0:
                tmp = -tmp
            if tmp > best:
                best = tmp
                piv = i
        if best < 1e-300:
            return -1
        if piv != k:
            for j in range(4):
                tmp = a[4 * k + j]
                a[4 * k + j] = a[4 * piv + j]
                a[4 * piv + j] = tmp
            tmp = b[k]
            b[k] = b[piv]
            b[piv] = tmp
        for i in range(k + 1, 4):
            factor = a[4 * i + k] / a[4 * k + k]
            for j in range(k, 4):
                a[4 * i + j] -= factor * a[4 * k + j]
            b[i] -= factor * b[k]
    for k in range(3, -1, -1):
        tmp = b[k]
        for j in range(k + 1, 4):
            tmp -= a[4 * k + j] * out[j]
        out[k] = tmp / a[4 * k + k]
    return 0


cdef int _inv4(double* a_in, double* out) nogil:
    cdef double e[4]
    cdef double col[4]
    cdef Py_ssize_t i, j
    for j in range(4):
        for i in range(4):
            e[i] = 1.0 if i == j else 0.0
        if _solve4(a_in, e, col) != 0:
            return -1
        for i in range(4):
            out[4 * i + j] = col[i]
    return 0


def lm_fit_fringe(x, y, w, p0, knowns, double lambda0,
                  bint fix_gamma=False, int max_iter=200,
                  double step_tol=1e-10):
    """Weighted Levenberg-Marquardt fit; same contract as the numpy backend."""
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ya = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] swa = np.sqrt(
        np.ascontiguousarray(w, dtype=np.float64))
    cdef double[::1] xv = xa
    cdef double[::1] yv = ya
    cdef double[::1] swv = swa
    cdef double p[4]
    cdef double p_try[4]
    cdef double kn[5]
    cdef double a[16]
    cdef double adamp[16]
    cdef double g[4]
    cdef double step[4]
    cdef double diag[4]
    cdef double cov_c[16]
    cdef Py_ssize_t i, j
    cdef double cost, cost_try, lam, rel_step, pnorm, snorm
    cdef int n_iter = 0
    cdef int inner
    cdef bint converged = False
    cdef bint accepted
    cdef bint have_step

    for i in range(4):
        p[i] = p0[i]
    for i in range(5):
        kn[i] = knowns[i]

    cost = _cost(xv, yv, swv, p, kn, lambda0)
    lam = 1e-3
    for n_iter in range(1, max_iter + 1):
        _normal_system(xv, yv, swv, p, kn, lambda0, fix_gamma, a, g)
        for i in range(4):
            diag[i] = a[4 * i + i]
            if diag[i] <= 0.0:
                diag[i] = 1.0
        accepted = False
        have_step = False
        for inner in range(30):
            for i in range(16):
                adamp[i] = a[i]
            for i in range(4):
                adamp[4 * i + i] += lam * diag[i]
            if _solve4(adamp, g, step) != 0:
                lam = min(lam * 10.0, 1e12)
                continue
            have_step = True
            for i in range(4):
                p_try[i] = p[i] + step[i]
            cost_try = _cost(xv, yv, swv, p_try, kn, lambda0)
            if isfinite(cost_try) and cost_try <= cost:
                accepted = True
                break
            lam = min(lam * 10.0, 1e12)
        if not accepted:
            converged = True
            break
        snorm = 0.0
        pnorm = 0.0
        for i in range(4):
            snorm += step[i] * step[i]
            pnorm += p[i] * p[i]
        rel_step = sqrt(snorm) / (sqrt(pnorm) + 1e-300)
        for i in range(4):
            p[i] = p_try[i]
        cost = cost_try
        lam = max(lam * 0.3, 1e-12)
        if rel_step < step_tol:
            converged = True
            break

    _normal_system(xv, yv, swv, p, kn, lambda0, fix_gamma, a, g)
    cdef cnp.ndarray[double, ndim=2] cov = np.empty((4, 4))
    if _inv4(a, cov_c) == 0:
        for i in range(4):
            for j in range(4):
                cov[i, j] = cov_c[4 * i + j]
    else:
        cov.fill(np.nan)
    if fix_gamma:
        for i in range(4):
            cov[0, i] = 0.0
            cov[i, 0] = 0.0
    params = np.empty(4)
    for i in range(4):
        params[i] = p[i]
    return params, cov, cost, n_iter, converged
