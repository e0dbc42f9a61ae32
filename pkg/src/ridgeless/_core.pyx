# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: alias folding and wrapped kernel-matrix assembly."""
import numpy as np

from libc.math cimport exp, fabs, fmod, sin, sqrt, M_PI

cdef enum:
    GAUSSIAN = 0
    LAPLACE = 1
    DIRICHLET = 2


def fold_axis(const double[::1] coeffs, Py_ssize_t first_k, Py_ssize_t N):
    cdef Py_ssize_t i, c, n = coeffs.shape[0]
    signed = np.zeros(N)
    absval = np.zeros(N)
    sq = np.zeros(N)
    cdef double[::1] s = signed, a = absval, q = sq
    cdef double v
    c = first_k % N
    if c < 0:
        c += N
    for i in range(n):
        v = coeffs[i]
        s[c] += v
        a[c] += fabs(v)
        q[c] += v * v
        c += 1
        if c == N:
            c = 0
    return signed, absval, sq


def fold_classes(const double[::1] values, const Py_ssize_t[::1] classes, Py_ssize_t n_classes):
    cdef Py_ssize_t i, c, n = values.shape[0]
    signed = np.zeros(n_classes)
    absval = np.zeros(n_classes)
    sq = np.zeros(n_classes)
    cdef double[::1] s = signed, a = absval, q = sq
    cdef double v
    for i in range(n):
        c = classes[i]
        v = values[i]
        s[c] += v
        a[c] += fabs(v)
        q[c] += v * v
    return signed, absval, sq


cdef inline double _wrap(double t) nogil:
    t = fmod(t + M_PI, 2.0 * M_PI)
    if t < 0:
        t += 2.0 * M_PI
    return t - M_PI


cdef inline double _dirichlet(double t, double order) nogil:
    cdef double s = sin(0.5 * t)
    if fabs(s) < 1e-12:
        return 2.0 * order + 1.0
    return sin((order + 0.5) * t) / s


def kernel_matrix(int family, double M, const double[:, ::1] points):
    cdef Py_ssize_t n = points.shape[0], d = points.shape[1]
    cdef Py_ssize_t p, q, i
    cdef double acc, t, val
    if family not in (GAUSSIAN, LAPLACE, DIRICHLET):
        raise ValueError(f"unknown family code {family}")
    out = np.empty((n, n))
    cdef double[:, ::1] K = out
    with nogil:
        for p in range(n):
            for q in range(p, n):
                if family == DIRICHLET:
                    acc = 1.0
                    for i in range(d):
                        acc *= _dirichlet(_wrap(points[p, i] - points[q, i]), M)
                    val = acc
                else:
                    acc = 0.0
                    for i in range(d):
                        t = _wrap(points[p, i] - points[q, i])
                        acc += t * t
                    if family == GAUSSIAN:
                        val = exp(-M * M * acc)
                    else:
                        val = exp(-M * sqrt(acc))
                K[p, q] = val
                K[q, p] = val
    return out
