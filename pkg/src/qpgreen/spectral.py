"""Spectrum of a periodic array of point interactions on a chain in 3D.

A level ``z`` at Bloch momentum ``k`` satisfies ``D00(i sqrt(-z), k) = alpha_tilde``,
with ``D00`` the ``l = 0`` lattice sum of the chain, here in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from qpgreen.errors import DomainError, ToleranceError
from qpgreen.latsums import SQRT_4PI, closed_d00_1in3

__all__ = [
    "SpectralQuery",
    "bracket_for",
    "d00_real",
    "invert_closed",
    "karpeshina_gamma",
    "sigma_of_z",
    "solve_point_interaction",
]


@dataclass(frozen=True)
class SpectralQuery:
    """Bloch momentum ``k``, coupling ``alpha_tilde`` and a bracket for ``z`` below ``k^2``."""

    k: float
    alpha_tilde: float
    bracket: tuple[float, float]

    def __post_init__(self) -> None:
        lo, hi = (float(v) for v in self.bracket)
        object.__setattr__(self, "bracket", (lo, hi))
        if not lo < hi:
            raise DomainError("bracket must satisfy lo < hi")
        if not hi < self.k * self.k:
            raise DomainError("bracket must lie strictly below k^2")


def sigma_of_z(z: float) -> complex:
    """``sqrt(z)`` for ``z >= 0`` and ``i sqrt(-z)`` below."""
    return complex(math.sqrt(z), 0.0) if z >= 0.0 else complex(0.0, math.sqrt(-z))


def d00_real(z: float, k: float, a: float = 1.0) -> float:
    """``D00(sigma(z), k)`` on ``z < k^2``, where it is real."""
    if not z < k * k:
        raise DomainError("D00 is real only for z < k^2")
    return closed_d00_1in3(sigma_of_z(z), k, a).real


def karpeshina_gamma(z: float, k: float, a: float = 1.0) -> float:
    """``-sqrt(4 pi) a D00 = -ln{2[cosh(sqrt(-z) a) - cos(k a)]}``, increasing in ``z``."""
    return -SQRT_4PI * a * d00_real(z, k, a)


def invert_closed(k: float, alpha_tilde: float, a: float = 1.0) -> float:
    """Closed-form root from ``cos(sigma a) = cos(k a) + e^{sqrt(4 pi) a alpha}/2``.

    Raises:
        DomainError: the right side exceeds the range reachable below ``k^2``.
    """
    rhs = math.cos(k * a) + 0.5 * math.exp(SQRT_4PI * a * alpha_tilde)
    if rhs >= 1.0:
        return -(math.acosh(rhs) / a) ** 2
    if rhs <= -1.0:
        raise DomainError("no root: the right side is below -1")
    z = (math.acos(rhs) / a) ** 2
    if not z < k * k:
        raise DomainError("closed-form root lies above k^2")
    return z


def bracket_for(k: float, alpha_tilde: float, a: float = 1.0) -> tuple[float, float]:
    """Expand a bracket downward from just below ``k^2`` until ``D00 - alpha`` changes sign."""
    hi = k * k - max(1e-9, 1e-9 * k * k)
    f_hi = d00_real(hi, k, a) - alpha_tilde
    lo = min(hi - 1.0, -1.0)
    for _ in range(200):
        if (d00_real(lo, k, a) - alpha_tilde) * f_hi <= 0.0:
            return lo, hi
        lo *= 2.0
    raise DomainError("no sign change found below k^2")


def solve_point_interaction(query: SpectralQuery, a: float = 1.0, tol: float = 1e-12) -> float:
    """Root of ``D00(sigma(z), k) - alpha_tilde`` on the bracket.

    Uses Brent's bracketed bisection/secant/inverse-quadratic method and
    checks the residual at the returned point.

    Raises:
        DomainError: no sign change on the bracket.
        ToleranceError: the residual at the root exceeds ``tol``.
    """
    if not a > 0.0:
        raise DomainError("period must be positive")
    k, alpha = query.k, query.alpha_tilde
    f = lambda z: d00_real(z, k, a) - alpha
    lo, hi = query.bracket
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise DomainError("D00 - alpha_tilde has no sign change on the bracket")
    z = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=500)
    r = abs(f(z))
    if r > tol:
        raise ToleranceError(f"spectral residual {r:.3e} exceeds {tol:.1e}")
    return z
