# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport erf, erfc, exp, expm1, sqrt, M_PI

cnp.import_array()

cdef double SQRT_PI = sqrt(M_PI)
cdef double D_SINGULAR = 1e-9


cdef inline double _g(double t, double d, double D, double mu, double r0) noexcept nogil:
    cdef double s = sqrt(D * t)
    cdef double c = 2.0 * s
    cdef double val, a
    if d < D_SINGULAR:
        val = erf(r0 / c) - r0 / (SQRT_PI * s) * exp(-(r0 / c) * (r0 / c))
    else:
        if d > r0:
            val = 0.5 * (erfc((d - r0) / c) - erfc((d + r0) / c))
        else:
            val = 0.5 * (erf((r0 - d) / c) + erf((r0 + d) / c))
        a = (d - r0) / c
        val -= s / (SQRT_PI * d) * exp(-a * a) * -expm1(-4.0 * r0 * d / (c * c))
    if val < 0.0:
        val = 0.0
    return val * exp(-mu * t)


def observation_probability_1d(double t, const double[::1] d, double D, double mu, double r0):
    cdef Py_ssize_t n = d.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _g(t, d[i], D, mu, r0)
    return out


def accumulate_interference(const double[::1] d, const cnp.int64_t[::1] slot,
                            const double[::1] weight, const double[::1] t_slot,
                            const cnp.int64_t[::1] group, Py_ssize_t n_groups,
                            double D, double mu, double r0):
    cdef Py_ssize_t n = d.shape[0], i
    out = np.zeros(n_groups, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[group[i]] += weight[i] * _g(t_slot[slot[i]], d[i], D, mu, r0)
    return out
