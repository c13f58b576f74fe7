"""Quasi-periodic Green's functions by several independent routes.

``G(R) = sum_n G0(R - r_n) e^{i k.r_n}`` with
``G0 = -(i/4) H_0^(1)(sigma R)`` in 2D and ``-e^{i sigma R}/(4 pi R)`` in 3D.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special as _sp

from qpgreen import kernels
from qpgreen.errors import DomainError, SingularInputError
from qpgreen.lattice import BlochContext, Case, Cutoffs, QuasiLattice, direct_points, recip_within
from qpgreen.latsums import SQRT_2PI, lattice_sum, all_indices
from qpgreen.specfun import AngularIndex, normalized_legendre

__all__ = [
    "EvalPoint",
    "GreenValue",
    "Representation",
    "g0_free",
    "g0_principal",
    "green_direct_damped",
    "green_dual",
    "green_ewald",
    "green_laplace_closed_1in2",
    "green_laplace_ewald",
    "laplace_reciprocal_integral",
]

LMAX_CAP = 80
# Expansion terms below this fraction of |G| end the angular-momentum series.
SHELL_RTOL = 1e-17
LAPLACE_QUAD_RTOL = 1e-13


class Representation(enum.Enum):
    DIRECT = "direct"
    DUAL = "dual"
    EWALD = "ewald"
    LAPLACE_EWALD = "laplace-ewald"
    CLOSED = "closed"


@dataclass(frozen=True)
class GreenValue:
    """A Green's function value with the route that produced it."""

    value: complex
    representation: Representation
    est_error: float
    terms_used: int
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not self.est_error >= 0.0:
            raise ValueError("est_error must be nonnegative")


@dataclass(frozen=True)
class EvalPoint:
    """Observation point split into in-lattice ``par`` and perpendicular ``perp`` parts."""

    R: np.ndarray
    par: np.ndarray
    perp: np.ndarray

    @classmethod
    def of(cls, lat: QuasiLattice, point) -> "EvalPoint":
        par, perp = lat.split(point)
        return cls(np.asarray(point, dtype=float).reshape(-1), par, perp)

    @property
    def rperp(self) -> float:
        return float(np.linalg.norm(self.perp))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.R))


def _check_rd(R: float, dimension: int) -> None:
    if dimension not in (2, 3):
        raise DomainError("dimension must be 2 or 3")
    if not R > 0.0:
        raise SingularInputError("free-space Green's function is singular at R = 0")


def g0_free(sigma: complex, R: float, dimension: int) -> complex:
    """Outgoing free-space Green's function ``G0(sigma, R)``."""
    _check_rd(R, dimension)
    s = complex(sigma)
    if dimension == 2:
        if s == 0:
            raise DomainError("the 2D Helmholtz kernel has no sigma = 0 limit")
        return complex(-0.25j * _sp.hankel1(0, s * R))
    return complex(-np.exp(1j * s * R) / (4.0 * math.pi * R))


def g0_principal(sigma: float, R: float, dimension: int) -> float:
    """Principal-value part: ``Y_0(sigma R)/4`` in 2D, ``-cos(sigma R)/(4 pi R)`` in 3D."""
    _check_rd(R, dimension)
    if dimension == 2:
        if not sigma > 0.0:
            raise DomainError("the 2D principal part needs sigma > 0")
        return float(_sp.y0(sigma * R)) / 4.0
    return -math.cos(sigma * R) / (4.0 * math.pi * R)


def _on_lattice(lat: QuasiLattice, ep: EvalPoint, rtol: float = 1e-13) -> bool:
    if ep.rperp > rtol * max(1.0, ep.norm):
        return False
    n = np.linalg.solve(lat.basis.T, ep.par)
    return bool(np.max(np.abs(n - np.round(n))) <= rtol * max(1.0, float(np.max(np.abs(n)))))


def _image_geometry(lat: QuasiLattice, ep: EvalPoint, radius: float):
    """Distances ``|R - r_n|`` for all lattice points within ``radius`` of the origin."""
    pts = direct_points(lat, radius, include_origin=True)
    full = lat.embed(pts)
    d = np.linalg.norm(ep.R[None, :] - full, axis=1)
    return pts, d


# ---------------------------------------------------------------------------
# Direct damped image sum
# ---------------------------------------------------------------------------


def green_direct_damped(
    lat: QuasiLattice, ctx: BlochContext, point, radius: Optional[float] = None
) -> GreenValue:
    """Truncated image sum at complex ``sigma`` with ``Im sigma > 0``.

    Args:
        lat: the lattice.
        ctx: context whose ``sigma`` carries the damping.
        point: observation point.
        radius: lattice points with ``|r_n| <= radius`` are summed; by
            default the damping ``e^{-Im(sigma) r}`` reaches the inner tolerance.

    Returns:
        The sum, the damped magnitude of the outermost shell as ``est_error``
        and the number of lattice points used.
    """
    ctx.check(lat)
    s = complex(ctx.sigma)
    if not s.imag > 0.0:
        raise DomainError("the direct image sum needs Im(sigma) > 0")
    ep = EvalPoint.of(lat, point)
    if _on_lattice(lat, ep):
        raise SingularInputError("observation point lies on the lattice")
    if radius is None:
        radius = ctx.cutoffs.log_tol / s.imag + ep.norm
    pts, d = _image_geometry(lat, ep, radius)
    if np.any(d == 0.0):
        raise SingularInputError("observation point lies on the lattice")
    phases = np.exp(1j * (pts @ ctx.k_par))
    raw = kernels.direct_image_sum(d, phases, s, lat.dimension)
    pref = -0.25j if lat.dimension == 2 else -1.0 / (4.0 * math.pi)
    tail = math.exp(-s.imag * radius)
    return GreenValue(complex(pref * raw), Representation.DIRECT, tail, int(d.size))


# ---------------------------------------------------------------------------
# Dual (reciprocal-space) series
# ---------------------------------------------------------------------------


def _dual_gmax(sigma: float, rperp: float, log_tol: float) -> float:
    kappa = (log_tol + 5.0) / rperp
    return math.sqrt(sigma * sigma + kappa * kappa)


def green_dual(lat: QuasiLattice, ctx: BlochContext, point) -> GreenValue:
    """Spectral-domain series; converges exponentially for ``R_perp != 0``.

    Codimension one: ``-(i/(2 v0)) sum e^{i q.R_par} e^{i K |R_perp|}/K``.
    Chain in 3D: ``-(i/(4 v0)) sum e^{i q x} H_0^(1)(K rho)``, evanescent
    orders through ``K_0``.
    """
    ctx.check(lat)
    sigma = ctx.sigma_real
    ep = EvalPoint.of(lat, point)
    rho = ep.rperp
    if rho == 0.0:
        raise SingularInputError("the dual series does not converge for R_perp = 0")
    gmax = _dual_gmax(sigma, rho, ctx.cutoffs.log_tol)
    if ctx.cutoffs.recip_radius is not None:
        gmax = ctx.cutoffs.recip_radius
    rp = recip_within(lat, ctx.k_par, sigma, gmax)
    rp.require_nongrazing()
    qr = rp.q @ ep.par
    if lat.case is Case.ONE_IN_THREE:
        raw = kernels.dual_sum(qr, rp.kperp, rho, 1)
        val = -0.25j / lat.v0 * raw
        kz = abs(rp.kperp[-1])
        tail = math.exp(-kz * rho) / math.sqrt(max(kz * rho, 1e-300)) / lat.v0
    else:
        raw = kernels.dual_sum(qr, rp.kperp, rho, 0)
        val = -0.5j / lat.v0 * raw
        kz = abs(rp.kperp[-1])
        tail = math.exp(-kz * rho) / (kz * lat.v0)
    return GreenValue(complex(val), Representation.DUAL, float(tail), len(rp))


# ---------------------------------------------------------------------------
# Ewald route through the lattice sums
# ---------------------------------------------------------------------------


def _harmonic_table_3d(lmax: int, direction: np.ndarray) -> dict[tuple[int, int], complex]:
    n = float(np.linalg.norm(direction))
    v = direction / n
    theta = math.acos(max(-1.0, min(1.0, float(v[2]))))
    phi = math.atan2(float(v[1]), float(v[0]))
    p = normalized_legendre(lmax, math.cos(theta), math.sin(theta))
    out = {}
    for l in range(lmax + 1):
        for m in range(l + 1):
            y = p[l, m] * complex(math.cos(m * phi), math.sin(m * phi))
            out[(l, m)] = y
            if m:
                out[(l, -m)] = (-1) ** m * y.conjugate()
    return out


def _expansion(lat: QuasiLattice, sums, lmax: int, ep: EvalPoint, sigma: float, drop_d1: bool):
    """Regular-wave expansion terms grouped by shell ``|l|``."""
    x = sigma * ep.norm
    shells = np.zeros(lmax + 1, dtype=complex)
    shell_abs = np.zeros(lmax + 1)
    if lat.dimension == 2:
        phi = math.atan2(ep.R[1], ep.R[0])
        jl = _sp.jv(np.arange(lmax + 1), x)
        for idx, comp in sums.items():
            L = abs(idx.l)
            if L > lmax:
                continue
            d = comp.total - comp.d1 if drop_d1 else comp.total
            t = d * jl[L] * complex(math.cos(idx.l * phi), math.sin(idx.l * phi)) / SQRT_2PI
            shells[L] += t
            shell_abs[L] += abs(t)
    else:
        ytab = _harmonic_table_3d(lmax, ep.R)
        jl = _sp.spherical_jn(np.arange(lmax + 1), x)
        for idx, comp in sums.items():
            if idx.l > lmax:
                continue
            d = comp.total - comp.d1 if drop_d1 else comp.total
            t = d * jl[idx.l] * ytab[(idx.l, idx.m)]
            shells[idx.l] += t
            shell_abs[idx.l] += abs(t)
    return shells, shell_abs


def green_ewald(
    lat: QuasiLattice,
    ctx: BlochContext,
    point,
    l_max: Optional[int] = None,
    incomplete: bool = False,
) -> GreenValue:
    """``G = G0p(sigma, R) + sum_L D_L J_l(sigma R) Y_L(R_hat)`` from the lattice sums.

    Valid inside the ball ``|R| < min |r_n|``, including the lattice plane or
    line itself.  Without ``l_max`` the series starts at
    ``2 ceil(sigma |R|) + 8`` and is extended until two consecutive shells
    fall below ``SHELL_RTOL |G|``.

    Args:
        incomplete: drop the reciprocal part ``D1`` (incomplete Ewald
            summation); meaningful only for large ``eta``.
    """
    ctx.check(lat)
    sigma = ctx.sigma_real
    if not sigma > 0.0:
        raise DomainError("Helmholtz route needs sigma > 0")
    ep = EvalPoint.of(lat, point)
    R = ep.norm
    if R == 0.0 or _on_lattice(lat, ep):
        raise SingularInputError("observation point lies on the lattice")
    rball = lat.nearest_distance()
    if R >= rball:
        raise DomainError(f"|R| = {R} lies outside the expansion ball of radius {rball}")
    fixed = l_max is not None
    lmax = int(l_max) if fixed else min(LMAX_CAP, 2 * math.ceil(sigma * R) + 8)
    if lmax < 0 or lmax > LMAX_CAP:
        raise DomainError(f"l_max must lie in [0, {LMAX_CAP}]")
    g0p = g0_principal(sigma, R, lat.dimension)
    flags: list[str] = ["incomplete-ewald"] if incomplete else []
    while True:
        sums = lattice_sum(lat, ctx, all_indices(lat.case, lmax))
        shells, shell_abs = _expansion(lat, sums, lmax, ep, sigma, incomplete)
        total = g0p + complex(np.sum(shells))
        scale = max(abs(total), 1e-300)
        converged = lmax >= 1 and shell_abs[-1] <= SHELL_RTOL * scale and shell_abs[-2] <= SHELL_RTOL * scale
        if fixed or converged or lmax >= LMAX_CAP:
            break
        lmax = min(LMAX_CAP, lmax + 8)
    if not (fixed or converged):
        flags.append("lmax-cap")
    for comp in sums.values():
        if comp.unstable and "eta-instability" not in flags:
            flags.append("eta-instability")
    any_comp = next(iter(sums.values()))
    diag = any_comp.diagnostics
    terms = diag.recip_terms + diag.direct_terms + diag.d3_terms + len(sums)
    est = float(shell_abs[-1]) + 1e-16 * float(np.sum(shell_abs))
    return GreenValue(complex(total), Representation.EWALD, est, int(terms), tuple(flags))


# ---------------------------------------------------------------------------
# Laplace limit
# ---------------------------------------------------------------------------


def _finite_part_remainder(rho: float, b: float, c: float) -> float:
    """``int_eta^inf zeta^{-c} (e^{-rho^2/(2 zeta)} - 1) d zeta`` with ``b = rho^2/(2 eta)``.

    With ``u = rho^2/(2 zeta)`` this is ``(rho^2/2)^{1-c} int_0^b u^{c-2}(e^{-u} - 1) du``.
    """
    if rho == 0.0:
        return 0.0
    if c == 0.5:
        rb = math.sqrt(b)
        inner = -2.0 * math.expm1(-b) / rb - 2.0 * math.sqrt(math.pi) * math.erf(rb)
        return rho / math.sqrt(2.0) * inner
    # -Ein(b), Ein(b) = sum_{n>=1} (-1)^{n+1} b^n/(n n!) = gamma + ln b + E1(b)
    if b < 1.0:
        term, s, n = 1.0, 0.0, 0
        while True:
            n += 1
            term *= -b / n
            s -= term / n
            if abs(term) < 1e-18:
                break
        return -s
    return -(np.euler_gamma + math.log(b) + float(_sp.exp1(b)))


def laplace_reciprocal_integral(g: float, rho: float, eta: float, c: float) -> float:
    """``int_eta^inf zeta^{-c} exp(-(g^2 zeta + rho^2/zeta)/2) d zeta``.

    For ``g = 0`` the integral diverges; the finite part is returned
    (``-2 sqrt(eta)`` for ``c = 1/2`` and ``-ln eta`` for ``c = 1``, plus the
    convergent remainder), which shifts the Green's function by a constant.
    """
    if not eta > 0.0:
        raise DomainError("eta must be positive")
    if c not in (0.5, 1.0):
        raise DomainError("c must be 1/2 or 1")
    a = 0.5 * g * g * eta
    b = 0.5 * rho * rho / eta
    # zeta = eta e^t
    if g == 0.0:
        fp = -2.0 * math.sqrt(eta) if c == 0.5 else -math.log(eta)
        return fp + _finite_part_remainder(rho, b, c)

    def expo(t: float) -> float:
        return (1.0 - c) * t - a * math.exp(t) - b * math.exp(-t)

    # Peak of the exponent, then integrate the rescaled integrand.
    tpk = 0.0
    if (1.0 - c) - a + b > 0.0:
        lo, hi = 0.0, 1.0
        while (1.0 - c) - a * math.exp(hi) + b * math.exp(-hi) > 0.0:
            hi *= 2.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if (1.0 - c) - a * math.exp(mid) + b * math.exp(-mid) > 0.0:
                lo = mid
            else:
                hi = mid
        tpk = 0.5 * (lo + hi)
    fmax = expo(tpk)
    t_end = tpk + 1.0
    while expo(t_end) - fmax > -80.0:
        t_end += max(1.0, 0.5 * t_end)
    pts = [tpk] if tpk > 0.0 else None
    val, _ = integrate.quad(lambda t: math.exp(expo(t) - fmax), 0.0, t_end, points=pts,
                            epsabs=0.0, epsrel=LAPLACE_QUAD_RTOL, limit=400)
    return eta ** (1.0 - c) * math.exp(fmax) * val


def green_laplace_ewald(
    lat: QuasiLattice, k_par, point, eta: float = 0.1, cutoffs: Optional[Cutoffs] = None
) -> GreenValue:
    """Ewald split of the quasi-periodic Laplace Green's function.

    3D: ``-(1/4 pi)[sum e^{ik.r_n} erfc(d_n/sqrt(2 eta))/d_n
    + (2 pi)^{d_lat/2}/(sqrt(2 pi) v0) sum e^{iq.R_par} I_c(g, |R_perp|)]``.
    2D: ``-(1/4 pi)[sum e^{ik r_n} E1(d_n^2/(2 eta))
    + sqrt(2 pi)/v0 sum e^{iqx} I_{1/2}(g, |y|)]``, with ``I_c`` from
    ``laplace_reciprocal_integral``.
    """
    cutoffs = cutoffs or Cutoffs()
    ctx = BlochContext(0.0, k_par, eta, cutoffs)
    ctx.check(lat)
    ep = EvalPoint.of(lat, point)
    if _on_lattice(lat, ep):
        raise SingularInputError("observation point lies on the lattice")
    T = cutoffs.log_tol
    # Direct part: erfc and E1 both decay like exp(-d^2/(2 eta)).
    rdir = cutoffs.direct_radius or (ep.norm + math.sqrt(2.0 * eta * (T + 5.0)) + lat.nearest_distance())
    pts, d = _image_geometry(lat, ep, rdir)
    if np.any(d == 0.0):
        raise SingularInputError("observation point lies on the lattice")
    phases = np.exp(1j * (pts @ ctx.k_par))
    direct = kernels.laplace_image_sum(d, phases, eta, lat.dimension)
    # Reciprocal part: I_c decays like exp(-g^2 eta/2).
    gmax = cutoffs.recip_radius or math.sqrt(2.0 * (T + 5.0) / eta)
    rp = recip_within(lat, ctx.k_par, 0.0, gmax)
    rho = ep.rperp
    c = lat.case.c
    ints = np.array([laplace_reciprocal_integral(float(g), rho, eta, c) for g in rp.g])
    rec_terms = np.exp(1j * (rp.q @ ep.par)) * ints
    recip = kernels.compensated_sum(rec_terms)
    if lat.dimension == 3:
        rpref = (2.0 * math.pi) ** (lat.lattice_dim / 2.0) / (SQRT_2PI * lat.v0)
    else:
        rpref = SQRT_2PI / lat.v0
    val = -(direct + rpref * recip) / (4.0 * math.pi)
    flags = ("finite-part",) if np.any(rp.g == 0.0) else ()
    est = float(abs(ints[-1])) * rpref / (4.0 * math.pi) if ints.size else 0.0
    return GreenValue(complex(val), Representation.LAPLACE_EWALD, est, int(d.size + len(rp)), flags)


def green_laplace_closed_1in2(point, a: float = 1.0) -> float:
    """``(1/(2 pi)) ln|2 sin(pi (x + i y)/a)|``, the periodic (``k = 0``) Laplace kernel of a chain in 2D."""
    x, y = (float(v) for v in np.asarray(point, dtype=float).reshape(-1)[:2])
    if not a > 0.0:
        raise DomainError("period must be positive")
    z = complex(x, y) * math.pi / a
    # |sin(u + iv)|^2 = sin^2 u + sinh^2 v
    s2 = math.sin(z.real) ** 2 + math.sinh(z.imag) ** 2
    if s2 == 0.0:
        raise SingularInputError("point lies on the lattice")
    return (math.log(4.0 * s2) / 2.0) / (2.0 * math.pi)
