"""Slow brute-force references for the fast paths.

Nothing here shares code with the fast formulas: the Schlömilch sums use
their own spherical Hankel and harmonic evaluations, and the scalar oracles
run in mpmath at ``DPS`` digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import mpmath as mp
import numpy as np
from scipy import special as _sp

from qpgreen.errors import DomainError
from qpgreen.lattice import QuasiLattice, direct_points
from qpgreen.specfun import AngularIndex, Phase, PhasedArgument

DPS = 34
DEFAULT_EPS = (0.05, 0.025, 0.0125)
# Damped terms are dropped once exp(-eps sigma r) falls below exp(-REACH).
REACH = 40.0
CHUNK = 1 << 18

__all__ = [
    "OracleReport",
    "d3_limit_quadrature",
    "inc_gamma_ray_quadrature",
    "schloemilch_direct",
    "schloemilch_extrapolated",
    "schloemilch_sums",
    "theta_identity_residual",
]


@dataclass(frozen=True)
class OracleReport:
    """A reference value with the method and parameters that produced it."""

    value: complex
    method: str
    params: dict = field(default_factory=dict)
    est_error: float = 0.0

    def to_json(self) -> dict:
        return {
            "re": float(complex(self.value).real),
            "im": float(complex(self.value).imag),
            "method": self.method,
            "params": self.params,
            "est_error": float(self.est_error),
        }


# ---------------------------------------------------------------------------
# Schlömilch series with complex wavenumber
# ---------------------------------------------------------------------------


def _sph_hankel(l: int, z: np.ndarray) -> np.ndarray:
    """``h_l^(1)`` from the finite sum, evaluated term by term."""
    s = np.zeros_like(z)
    for k in range(l + 1):
        s = s + (math.factorial(l + k) / (math.factorial(k) * math.factorial(l - k))) * (0.5j / z) ** k
    return (-1j) ** (l + 1) * np.exp(1j * z) / z * s


def _constants(sigma: complex, dimension: int) -> tuple[complex, complex]:
    """``(C A^{1/2}, A C)`` with complex ``sigma`` carried through."""
    if dimension == 2:
        return math.sqrt(2.0 * math.pi) / 4.0, math.pi / 2.0
    return sigma / math.sqrt(4.0 * math.pi), sigma


def schloemilch_sums(
    lat: QuasiLattice, sigma: complex, k_par, indices: Sequence[AngularIndex], radius: float
) -> dict[AngularIndex, complex]:
    """``-i C A^{1/2} delta_L0 - i A C sum' H_l(sigma r_n) conj(Y_L(r_hat_n)) e^{ik.r_n}``.

    Summation: numpy pairwise sums inside blocks of ``CHUNK`` points and
    ``math.fsum`` across blocks, so the rounding error is bounded by
    ``(log2(CHUNK) + 2) u sum |terms|``.
    """
    sigma = complex(sigma)
    if not sigma.imag > 0.0:
        raise DomainError("the direct Schlömilch sum needs Im(sigma) > 0")
    k_par = np.atleast_1d(np.asarray(k_par, dtype=float))
    dim = lat.dimension
    pts = direct_points(lat, radius)
    lmax = max(abs(i.l) for i in indices)
    parts: dict[AngularIndex, list[complex]] = {i: [] for i in indices}
    for start in range(0, pts.shape[0], CHUNK):
        p = pts[start : start + CHUNK]
        r = np.linalg.norm(p, axis=1)
        phi = np.arctan2(p[:, 1], p[:, 0]) if p.shape[1] == 2 else np.where(p[:, 0] > 0.0, 0.0, math.pi)
        bloch = np.exp(1j * (p @ k_par))
        z = sigma * r
        if dim == 2:
            hank = {L: _sp.hankel1(L, z) for L in range(lmax + 1)}
        else:
            hank = {L: _sph_hankel(L, z) for L in range(lmax + 1)}
        rot = np.exp(-1j * phi)
        rot_pow = {0: np.ones_like(rot)}
        for m in range(1, lmax + 1):
            rot_pow[m] = rot_pow[m - 1] * rot
        for idx in indices:
            if dim == 2:
                y = (rot_pow[abs(idx.l)] if idx.l >= 0 else np.conj(rot_pow[-idx.l])) / math.sqrt(2.0 * math.pi)
                terms = hank[abs(idx.l)] * y * bloch
            else:
                # conj(Y_lm(pi/2, phi)) = conj(Y_lm(pi/2, 0)) e^{-im phi}
                c = complex(np.conj(_sp.sph_harm_y(idx.l, idx.m, math.pi / 2.0, 0.0)))
                y = c * (rot_pow[idx.m] if idx.m >= 0 else np.conj(rot_pow[-idx.m]))
                terms = hank[idx.l] * y * bloch
            parts[idx].append(complex(np.sum(terms)))
    ca, ac = _constants(sigma, dim)
    out = {}
    for idx in indices:
        s = complex(math.fsum(v.real for v in parts[idx]), math.fsum(v.imag for v in parts[idx]))
        val = -1j * ac * s
        if idx.l == 0:
            val += -1j * ca
        out[idx] = val
    return out


def schloemilch_direct(lat: QuasiLattice, sigma: complex, k_par, L: AngularIndex, radius: float) -> OracleReport:
    """Truncated damped Schlömilch sum for one index."""
    val = schloemilch_sums(lat, sigma, k_par, [L], radius)[L]
    s = complex(sigma)
    return OracleReport(
        val,
        "schloemilch-direct",
        {"sigma": [s.real, s.imag], "k_par": list(map(float, np.atleast_1d(k_par))), "L": str(L), "radius": radius},
        est_error=math.exp(-s.imag * radius),
    )


def schloemilch_extrapolated(
    lat: QuasiLattice,
    sigma: float,
    k_par,
    indices: Iterable[AngularIndex],
    eps: Sequence[float] = DEFAULT_EPS,
    reach: float = REACH,
) -> dict[AngularIndex, OracleReport]:
    """Damped sums at ``sigma (1 + i eps)`` extrapolated to ``eps = 0``.

    Each value is multiplied by ``(1 + i eps)^|l|`` before the polynomial
    fit, which removes the ``sigma^{-|l|}`` prefactor that ``D_L`` carries
    relative to the regular waves.  In 2D the ``l = 0`` sum also carries the
    exact term ``-ln(sigma)/sqrt(2 pi)`` inherited from the ``Y_0`` part of the
    principal value; ``ln(1 + i eps)/sqrt(2 pi)`` is added back before the fit
    so only branch points at grazing orders limit the extrapolation.
    """
    indices = list(indices)
    eps = tuple(float(e) for e in eps)
    if len(eps) < 2 or min(eps) <= 0.0:
        raise DomainError("need at least two positive damping values")
    table = {i: [] for i in indices}
    for e in eps:
        s = sigma * (1.0 + 1j * e)
        radius = reach / (e * sigma)
        vals = schloemilch_sums(lat, s, k_par, indices, radius)
        for i in indices:
            v = vals[i] * (1.0 + 1j * e) ** abs(i.l)
            if lat.dimension == 2 and i.l == 0:
                v += np.log(1.0 + 1j * e) / math.sqrt(2.0 * math.pi)
            table[i].append(v)
    x = np.array(eps)
    out = {}
    for i in indices:
        y = np.array(table[i])
        coef = np.polyfit(x, y, len(eps) - 1)
        v0 = complex(coef[-1])
        # Drop the smallest damping to gauge the extrapolation error.
        coef2 = np.polyfit(x[:-1], y[:-1], len(eps) - 2)
        out[i] = OracleReport(
            v0,
            "schloemilch-extrapolated",
            {"sigma": sigma, "k_par": list(map(float, np.atleast_1d(k_par))), "L": str(i), "eps": list(eps), "reach": reach},
            est_error=abs(v0 - complex(coef2[-1])),
        )
    return out


# ---------------------------------------------------------------------------
# Incomplete gamma by contour quadrature
# ---------------------------------------------------------------------------


def inc_gamma_ray_quadrature(order: float, z: PhasedArgument) -> OracleReport:
    """``Gamma(order, z) = int_z^inf t^{order-1} e^{-t} dt`` in extended precision.

    Phase zero: the positive real ray from ``x``.  Phase ``-pi``: the circular
    arc ``t = x e^{i theta}``, ``theta`` from ``-pi`` to ``0``, followed by the
    ray, which fixes the branch as the continuation through the lower half plane.
    """
    with mp.workdps(DPS):
        b = mp.mpf(order)
        x = mp.mpf(z.magnitude)
        # t = x + u, with e^{-x} taken outside
        f = lambda u: (x + u) ** (b - 1) * mp.exp(-u)
        ray = mp.exp(-x) * mp.quad(f, [0, 1, 5, 20, 60, mp.inf])
        if z.phase is Phase.ZERO:
            return OracleReport(complex(ray), "ray", {"order": order, "x": z.magnitude, "phase": "zero", "dps": DPS})
        g = lambda th: (x ** b) * mp.exp(1j * b * th) * mp.exp(-x * mp.expj(th)) * 1j
        arc = mp.quad(g, mp.linspace(-mp.pi, 0, 9))
        val = arc + ray
        return OracleReport(complex(val), "arc+ray", {"order": order, "x": z.magnitude, "phase": "minus-pi", "dps": DPS})


# ---------------------------------------------------------------------------
# Jacobi theta identity
# ---------------------------------------------------------------------------


def theta_identity_residual(t: float, theta: float, N: int) -> float:
    """``|sum_n e^{-pi n^2 t - 2 pi i n theta} - t^{-1/2} sum_l e^{-pi (l + theta)^2/t}|``."""
    if not t > 0.0:
        raise DomainError("t must be positive")
    with mp.workdps(DPS):
        t_, th = mp.mpf(t), mp.mpf(theta)
        lhs = mp.fsum(mp.exp(-mp.pi * n * n * t_ - 2j * mp.pi * n * th) for n in range(-N, N + 1))
        rhs = mp.fsum(mp.exp(-mp.pi * (l + th) ** 2 / t_) for l in range(-N, N + 1)) / mp.sqrt(t_)
        return float(abs(lhs - rhs))


# ---------------------------------------------------------------------------
# D3 from its limit definition
# ---------------------------------------------------------------------------


def _d3_limit_at(sigma: mp.mpf, eta: mp.mpf, R: mp.mpf, dimension: int) -> mp.mpf:
    """``[G2_0(R) - G0p(R)] / (J_0(sigma R) Y_0)`` with ``G2_0`` the origin term of the direct part."""
    if dimension == 3:
        f = lambda z: z ** mp.mpf(-1.5) * mp.exp(sigma**2 * z / 2 - R**2 / (2 * z))
        g2 = -mp.quad(f, [0, R**2, eta]) / (4 * mp.pi * mp.sqrt(2 * mp.pi))
        g0p = -mp.cos(sigma * R) / (4 * mp.pi * R)
        jy = (mp.sin(sigma * R) / (sigma * R)) / mp.sqrt(4 * mp.pi)
    else:
        f = lambda z: mp.exp(sigma**2 * z / 2 - R**2 / (2 * z)) / z
        g2 = -mp.quad(f, [0, R**2, eta]) / (4 * mp.pi)
        g0p = mp.bessely(0, sigma * R) / 4
        jy = mp.besselj(0, sigma * R) / mp.sqrt(2 * mp.pi)
    return (g2 - g0p) / jy


def d3_limit_quadrature(sigma: float, eta: float, R_small: float, dimension: int) -> OracleReport:
    """``D3`` from the small-``R`` limit of the regularized origin term.

    Evaluates at ``R``, ``R/2`` and ``R/4``; the remainder is ``O(R^2)`` so
    successive differences must shrink by about 4.

    Raises:
        DomainError: the halving test shows a non-quadratic remainder.
    """
    if not (sigma > 0.0 and eta > 0.0 and R_small > 0.0):
        raise DomainError("sigma, eta and R_small must be positive")
    if dimension not in (2, 3):
        raise DomainError("dimension must be 2 or 3")
    with mp.workdps(DPS):
        s, e, R = mp.mpf(sigma), mp.mpf(eta), mp.mpf(R_small)
        v = [_d3_limit_at(s, e, R / 2**j, dimension) for j in range(3)]
        d1, d2 = abs(v[0] - v[1]), abs(v[1] - v[2])
        noise = mp.mpf(10) ** (-DPS + 6) * max(1, abs(v[0]))
        if d1 > noise and d2 > noise:
            ratio = d1 / d2
            if not (2.5 < ratio < 6.0):
                raise DomainError(f"R_small = {R_small} too large: halving ratio {float(ratio):.3f}, expected 4")
        est = float(d1 * 4 / 3)
        return OracleReport(
            complex(v[0]),
            "d3-limit-quadrature",
            {"sigma": sigma, "eta": eta, "R_small": R_small, "dimension": dimension, "dps": DPS},
            est_error=est,
        )
