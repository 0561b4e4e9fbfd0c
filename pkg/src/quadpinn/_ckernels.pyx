# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot numerical kernels.

Signatures and family codes match ``_pykernels``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow, exp, lgamma, M_PI, INFINITY

cnp.import_array()

BACKEND_NAME = "cython"

cdef enum:
    JACOBI = 0
    LAGUERRE = 1
    HERMITE = 2


cdef double _jacobi(int n, double a, double b, double x) nogil:
    cdef double p_prev = 1.0, p, nxt, c, a1, a2, a3
    cdef int k
    if n == 0:
        return 1.0
    p = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x
    for k in range(2, n + 1):
        c = 2.0 * k + a + b
        a1 = 2.0 * k * (k + a + b) * (c - 2.0)
        a2 = (c - 1.0) * (c * (c - 2.0) * x + a * a - b * b)
        a3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c
        nxt = (a2 * p - a3 * p_prev) / a1
        p_prev = p
        p = nxt
    return p


cdef void _laguerre_scaled(int n, double a, double x, double *value, double *deriv) nogil:
    cdef double p_prev = 0.0, p, nxt
    cdef int k
    p = exp(-0.5 * x - 0.5 * lgamma(a + 1.0))
    for k in range(1, n + 1):
        nxt = ((2.0 * k - 1.0 + a - x) * p - sqrt((k - 1.0) * (k - 1.0 + a)) * p_prev) / sqrt(k * (k + a))
        p_prev = p
        p = nxt
    value[0] = p
    deriv[0] = (n * p - sqrt(n * (n + a)) * p_prev) / x


cdef void _eval(int family, int n, double a, double b, double x,
                double *value, double *deriv) nogil:
    cdef double p_prev, p, nxt
    cdef int k
    if family == JACOBI:
        value[0] = _jacobi(n, a, b, x)
        if n == 0:
            deriv[0] = 0.0
        else:
            deriv[0] = 0.5 * (n + a + b + 1.0) * _jacobi(n - 1, a + 1.0, b + 1.0, x)
    elif family == LAGUERRE:
        _laguerre_scaled(n, a, x, value, deriv)
    else:
        p_prev = 0.0
        p = pow(M_PI, -0.25)
        for k in range(1, n + 1):
            nxt = x * sqrt(2.0 / k) * p - sqrt((k - 1.0) / k) * p_prev
            p_prev = p
            p = nxt
        value[0] = p
        deriv[0] = sqrt(2.0 * n) * p_prev


def poly_and_derivative(int family, int n, double a, double b, x):
    if family < 0 or family > 2:
        raise ValueError(f"unknown family code {family}")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t m = xs.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] val = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] der = np.empty(m)
    cdef double v, d
    for i in range(m):
        _eval(family, n, a, b, xs[i], &v, &d)
        val[i] = v
        der[i] = d
    shape = np.shape(x)
    return val.reshape(shape), der.reshape(shape)


def polish_roots(int family, int n, double a, double b, x0,
                 int max_sweeps=100, double tol=1e-15):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.array(x0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] step = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dp = np.empty(n)
    cdef Py_ssize_t i, j
    cdef int sweep, sweeps_done = -max_sweeps, worst = -1
    cdef double v, d, ratio, rep, rel, worst_rel, scale
    cdef bint settled = False
    for sweep in range(1, max_sweeps + 1):
        for i in range(n):
            _eval(family, n, a, b, x[i], &v, &d)
            ratio = v / d
            rep = 0.0
            for j in range(n):
                if j != i:
                    rep += 1.0 / (x[i] - x[j])
            step[i] = ratio / (1.0 - ratio * rep)
        worst_rel = -1.0
        for i in range(n):
            x[i] = x[i] - step[i]
            scale = fabs(x[i])
            if scale < 1.0:
                scale = 1.0
            rel = fabs(step[i]) / scale
            if rel > worst_rel:
                worst_rel = rel
                worst = i
        if settled:
            sweeps_done = sweep
            break
        if worst_rel <= tol * 64.0:
            settled = True
    for i in range(n):
        _eval(family, n, a, b, x[i], &v, &d)
        dp[i] = d
    return x, dp, sweeps_done, worst


def caputo_l1_matrix(grid, double alpha):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g = np.ascontiguousarray(grid, dtype=np.float64)
    cdef Py_ssize_t n = g.shape[0], i, k
    cdef cnp.ndarray[cnp.float64_t, ndim=2] m = np.zeros((n, n))
    cdef double inv_gamma = exp(-lgamma(2.0 - alpha))
    cdef double one_minus = 1.0 - alpha
    cdef double mu_prev, mu, p_left, p_right
    for i in range(1, n):
        mu_prev = 0.0
        p_left = pow(g[i] - g[0], one_minus)
        for k in range(i):
            # each power is shared by two neighbouring intervals
            p_right = pow(g[i] - g[k + 1], one_minus)
            mu = (p_left - p_right) / (g[k + 1] - g[k])
            m[i, k] = (mu_prev - mu) * inv_gamma
            mu_prev = mu
            p_left = p_right
        m[i, i] = mu_prev * inv_gamma
    return m
