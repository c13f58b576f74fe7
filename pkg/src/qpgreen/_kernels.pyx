# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: image sums and dual sums with compensated reduction."""

from libc.math cimport sqrt, exp, cos, sin, fabs, erfc, M_PI
from scipy.special.cython_special cimport hankel1, k0, exp1

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


cdef inline void _neumaier(double x, double* s, double* c) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


cdef inline void _acc(cplx v, double* sr, double* cr, double* si, double* ci) noexcept nogil:
    _neumaier(v.real, sr, cr)
    _neumaier(v.imag, si, ci)


cdef inline cplx _cexp(cplx z) noexcept nogil:
    cdef double m = exp(z.real)
    return m * cos(z.imag) + 1j * (m * sin(z.imag))


def compensated_sum(cplx[::1] values):
    """Neumaier-compensated sum of a complex array, in index order."""
    cdef Py_ssize_t i, n = values.shape[0]
    cdef double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0
    with nogil:
        for i in range(n):
            _acc(values[i], &sr, &cr, &si, &ci)
    return complex(sr + cr, si + ci)


def direct_image_sum(double[::1] dists, cplx[::1] phases, cplx sigma, int dimension):
    """``sum_n phase_n * G0(sigma d_n)`` without the ``-i/4`` or ``-1/(4 pi)`` prefactor.

    2D terms are ``H_0^(1)(sigma d)``; 3D terms are ``e^{i sigma d}/d``.
    """
    cdef Py_ssize_t i, n = dists.shape[0]
    cdef double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0
    cdef cplx term
    cdef double d
    if phases.shape[0] != n:
        raise ValueError("dists and phases differ in length")
    if dimension == 2:
        for i in range(n):
            term = phases[i] * hankel1(0.0, sigma * dists[i])
            _acc(term, &sr, &cr, &si, &ci)
    elif dimension == 3:
        with nogil:
            for i in range(n):
                d = dists[i]
                term = phases[i] * _cexp(1j * sigma * d) / d
                _acc(term, &sr, &cr, &si, &ci)
    else:
        raise ValueError("dimension must be 2 or 3")
    return complex(sr + cr, si + ci)


def dual_sum(double[::1] qr, cplx[::1] kperp, double rperp, int mode):
    """Reciprocal-space series without prefactor.

    ``mode`` 0: ``sum e^{i q.R} e^{i K r}/K`` (codimension one);
    ``mode`` 1: ``sum e^{i q.R} H_0^(1)(K r)``, evanescent terms via ``K_0``.
    """
    cdef Py_ssize_t i, n = qr.shape[0]
    cdef double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0
    cdef cplx term, ph, K
    if kperp.shape[0] != n:
        raise ValueError("qr and kperp differ in length")
    for i in range(n):
        ph = cos(qr[i]) + 1j * sin(qr[i])
        K = kperp[i]
        if mode == 0:
            term = ph * _cexp(1j * K * rperp) / K
        elif K.imag > 0.0 and K.real == 0.0:
            term = ph * (-2.0j / M_PI) * k0(K.imag * rperp)
        else:
            term = ph * hankel1(0.0, K * rperp)
        _acc(term, &sr, &cr, &si, &ci)
    return complex(sr + cr, si + ci)


def laplace_image_sum(double[::1] dists, cplx[::1] phases, double eta, int dimension):
    """Direct-space Laplace series without prefactor.

    3D terms are ``erfc(d/sqrt(2 eta))/d``; 2D terms are ``E1(d^2/(2 eta))``.
    """
    cdef Py_ssize_t i, n = dists.shape[0]
    cdef double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0
    cdef double d, s = sqrt(2.0 * eta)
    if phases.shape[0] != n:
        raise ValueError("dists and phases differ in length")
    if dimension == 3:
        with nogil:
            for i in range(n):
                d = dists[i]
                _acc(phases[i] * (erfc(d / s) / d), &sr, &cr, &si, &ci)
    elif dimension == 2:
        for i in range(n):
            d = dists[i]
            _acc(phases[i] * exp1(d * d / (2.0 * eta)), &sr, &cr, &si, &ci)
    else:
        raise ValueError("dimension must be 2 or 3")
    return complex(sr + cr, si + ci)
