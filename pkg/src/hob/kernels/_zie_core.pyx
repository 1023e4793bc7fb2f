# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled elementwise kernels for the zero-inflated exponential landscape.

Mirrors kernels/fallback.py; keep the arithmetic expressions identical so the
two implementations agree to rounding error.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

cdef double INV_PHI = 2.0 / (1.0 + sqrt(5.0))


def zie_cdf(const double[::1] pi, const double[::1] lam, const double[::1] x):
    cdef Py_ssize_t n = pi.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = 1.0 - (1.0 - pi[i]) * exp(-lam[i] * x[i])
    return out_arr


def zie_surplus(const double[::1] pi, const double[::1] lam,
                const double[::1] value, const double[::1] x):
    cdef Py_ssize_t n = pi.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = (value[i] - x[i]) * (1.0 - (1.0 - pi[i]) * exp(-lam[i] * x[i]))
    return out_arr


cdef inline double _surplus(double q, double lam, double value, double x) nogil:
    return (value - x) * (1.0 - q * exp(-lam * x))


def golden_bids(const double[::1] pi, const double[::1] lam,
                const double[::1] value, int n_iter):
    cdef Py_ssize_t n = pi.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef int k
    cdef double q, v, a, b, c, d, span
    with nogil:
        for i in range(n):
            q = 1.0 - pi[i]
            v = value[i]
            if v <= 0.0 or q * (1.0 + lam[i] * v) <= 1.0:
                out[i] = 0.0
                continue
            a = 0.0
            b = v
            span = b - a
            c = b - span * INV_PHI
            d = a + span * INV_PHI
            for k in range(n_iter):
                if _surplus(q, lam[i], v, c) < _surplus(q, lam[i], v, d):
                    a = c
                else:
                    b = d
                span = b - a
                c = b - span * INV_PHI
                d = a + span * INV_PHI
            out[i] = 0.5 * (a + b)
    return out_arr
