# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``cvqbm._kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, lgamma, fabs, M_PI

cnp.import_array()

cdef int BETACF_MAX_ITER = 300
cdef double BETACF_EPS = 1e-16
cdef double TINY = 1e-300


def hermite_table(int nmax, q):
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64).ravel()
    cdef Py_ssize_t npts = qv.shape[0]
    out = np.empty((nmax, npts))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i
    cdef int n
    cdef double x, p0, p1, p2, c0 = M_PI ** -0.25, s2 = sqrt(2.0)
    cdef double[::1] f1 = np.empty(nmax)
    cdef double[::1] f2 = np.empty(nmax)
    for n in range(2, nmax):
        f1[n] = sqrt(2.0 / n)
        f2[n] = sqrt((n - 1.0) / n)
    for i in range(npts):
        x = qv[i]
        p0 = c0 * exp(-0.5 * x * x)
        o[0, i] = p0
        if nmax > 1:
            p1 = s2 * x * p0
            o[1, i] = p1
            for n in range(2, nmax):
                p2 = f1[n] * x * p1 - f2[n] * p0
                o[n, i] = p2
                p0 = p1
                p1 = p2
    return out


cdef double _betacf(double x, double a, double b) nogil:
    cdef double qab = a + b, qap = a + 1.0, qam = a - 1.0
    cdef double c = 1.0, d = 1.0 - qab * x / qap, h, aa, delta
    cdef int m, m2
    if fabs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < BETACF_EPS:
            break
    return h


def betainc(z, double a, double b):
    zarr = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[::1] zv = zarr.ravel()
    out = np.empty(zv.shape[0])
    cdef double[::1] o = out
    cdef double lbeta = lgamma(a) + lgamma(b) - lgamma(a + b)
    cdef double x, front
    cdef Py_ssize_t i
    with nogil:
        for i in range(zv.shape[0]):
            x = zv[i]
            if x <= 0.0:
                o[i] = 0.0
            elif x >= 1.0:
                o[i] = 1.0
            else:
                front = exp(a * log(x) + b * log1p(-x) - lbeta)
                if x < (a + 1.0) / (a + b + 2.0):
                    o[i] = front * _betacf(x, a, b) / a
                else:
                    o[i] = 1.0 - front * _betacf(1.0 - x, b, a) / b
    return out.reshape(zarr.shape)


def loss_tensor(rho, coeffs):
    cdef const double complex[:, :, :, ::1] r = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef const double[:, ::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t d = r.shape[0], h = r.shape[1]
    out = np.zeros((d, h, d, h), dtype=np.complex128)
    cdef double complex[:, :, :, ::1] o = out
    cdef Py_ssize_t k, m, n, i, j
    cdef double w
    with nogil:
        for m in range(d):
            for n in range(d):
                for k in range(d - (m if m > n else n)):
                    w = c[k, m] * c[k, n]
                    if w == 0.0:
                        continue
                    for i in range(h):
                        for j in range(h):
                            o[m, i, n, j] += w * r[m + k, i, n + k, j]
    return out
