"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp


def compensated_sum(values) -> complex:
    """Correctly rounded sums of the real and imaginary parts (``math.fsum``)."""
    v = np.asarray(values, dtype=complex)
    return complex(math.fsum(v.real), math.fsum(v.imag))


def direct_image_sum(dists, phases, sigma: complex, dimension: int) -> complex:
    d = np.asarray(dists, dtype=float)
    ph = np.asarray(phases, dtype=complex)
    if d.shape != ph.shape:
        raise ValueError("dists and phases differ in length")
    if dimension == 2:
        terms = ph * _sp.hankel1(0, complex(sigma) * d)
    elif dimension == 3:
        terms = ph * np.exp(1j * complex(sigma) * d) / d
    else:
        raise ValueError("dimension must be 2 or 3")
    return compensated_sum(terms)


def dual_sum(qr, kperp, rperp: float, mode: int) -> complex:
    q = np.asarray(qr, dtype=float)
    K = np.asarray(kperp, dtype=complex)
    if q.shape != K.shape:
        raise ValueError("qr and kperp differ in length")
    ph = np.exp(1j * q)
    if mode == 0:
        terms = ph * np.exp(1j * K * rperp) / K
    else:
        evan = (K.real == 0.0) & (K.imag > 0.0)
        terms = np.empty(K.shape, dtype=complex)
        terms[evan] = -2j / math.pi * _sp.k0(K.imag[evan] * rperp)
        terms[~evan] = _sp.hankel1(0, K[~evan] * rperp)
        terms *= ph
    return compensated_sum(terms)


def laplace_image_sum(dists, phases, eta: float, dimension: int) -> complex:
    d = np.asarray(dists, dtype=float)
    ph = np.asarray(phases, dtype=complex)
    if d.shape != ph.shape:
        raise ValueError("dists and phases differ in length")
    if dimension == 3:
        terms = ph * _sp.erfc(d / math.sqrt(2.0 * eta)) / d
    elif dimension == 2:
        terms = ph * _sp.exp1(d * d / (2.0 * eta))
    else:
        raise ValueError("dimension must be 2 or 3")
    return compensated_sum(terms)
