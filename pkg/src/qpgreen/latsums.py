"""Ewald-Kambe lattice sums ``D_L = D1 + D2 + D3`` for the three geometries.

Conventions:

* 2D (chain in the plane): ``D_Lambda(R) = sum_l D_l J_|l|(sigma R) e^{il phi}/sqrt(2 pi)``.
* 3D: ``D_Lambda(R) = sum_lm D_lm j_l(sigma R) Y_lm(R_hat)`` with Condon-Shortley harmonics.

``D_Lambda`` is the quasi-periodic Green's function minus the principal part
of the free-space one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, special as _sp

from qpgreen.errors import DomainError, SingularInputError
from qpgreen.lattice import BlochContext, Case, QuasiLattice, direct_points, recip_points
from qpgreen.specfun import AngularIndex, equator_harmonic, inc_gamma_ladders

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_4PI = math.sqrt(4.0 * math.pi)

# |d1| and |d2| above this multiple of |total| flag an unbalanced eta.
INSTABILITY_RATIO = 1e4

# The U-chain recurrence is abandoned for quadrature when a step loses more digits than this.
MONITOR_DIGITS = 3.0

U_QUAD_RTOL = 1e-13

__all__ = [
    "AngularIndex",
    "Diagnostics",
    "SumComponents",
    "all_indices",
    "closed_d00_1in3",
    "d1",
    "d2",
    "d3",
    "diagonal_offset",
    "lattice_sum",
    "lattice_sums_upto",
    "to_script_d",
    "u_chain",
    "u_integral",
]


@dataclass(frozen=True)
class Diagnostics:
    """Truncation bookkeeping for one lattice sum."""

    eta: float
    recip_terms: int = 0
    direct_terms: int = 0
    d3_terms: int = 0
    recip_trunc: float = 0.0
    direct_trunc: float = 0.0
    flags: tuple[str, ...] = ()

    @property
    def terms(self) -> int:
        return self.recip_terms + self.direct_terms + self.d3_terms


@dataclass(frozen=True)
class SumComponents:
    """The three Ewald parts of one lattice sum and their total."""

    index: AngularIndex
    d1: complex
    d2: complex
    d3: complex
    total: complex
    diagnostics: Diagnostics = field(compare=False)

    @property
    def unstable(self) -> bool:
        return "eta-instability" in self.diagnostics.flags

    @property
    def selection_zero(self) -> bool:
        return "selection-rule" in self.diagnostics.flags


def all_indices(case: Case, lmax: int) -> list[AngularIndex]:
    """Every index with ``|l| <= lmax`` (2D) or ``l <= lmax`` (3D)."""
    if case.dimension == 2:
        return [AngularIndex.d2(l) for l in range(-lmax, lmax + 1)]
    return [AngularIndex.d3(l, m) for l in range(lmax + 1) for m in range(-l, l + 1)]


def _selection_zero(lat: QuasiLattice, index: AngularIndex) -> bool:
    return lat.dimension == 3 and (index.l + index.m) % 2 == 1


def _fact(n: int) -> float:
    return float(math.factorial(n))


# ---------------------------------------------------------------------------
# Direct-space integrals U_l
# ---------------------------------------------------------------------------


def _log_w_quadrature(l: int, c: float, alpha: float, sr: float) -> tuple[float, float]:
    """``log |W_l|`` with ``W_l = (sigma r)^l U_l`` and ``U_l = int_0^alpha u^{c-l-2} e^{u - sr^2/(4u)} du``.

    Substituting ``u = alpha e^{-t}`` gives a positive integrand on
    ``t in [0, inf)`` that vanishes double-exponentially; it is rescaled by
    its maximum before adaptive quadrature.
    """
    nu = l + 1.0 - c
    beta = sr * sr / (4.0 * alpha)

    def phi(t: float) -> float:
        return nu * t + alpha * math.exp(-t) - beta * math.exp(t)

    cands = [0.0]
    disc = nu * nu - 4.0 * alpha * beta
    if disc >= 0.0:
        for sgn in (1.0, -1.0):
            et = (nu + sgn * math.sqrt(disc)) / (2.0 * beta)
            if et > 1.0:
                cands.append(math.log(et))
    tpk = max(cands, key=phi)
    fmax = phi(tpk)
    t_end = tpk + 1.0
    while phi(t_end) - fmax > -80.0:
        t_end += max(1.0, 0.5 * t_end)
    f = lambda t: math.exp(phi(t) - fmax)
    pts = [tpk] if 0.0 < tpk < t_end else None
    val, _ = integrate.quad(f, 0.0, t_end, points=pts, epsabs=0.0, epsrel=U_QUAD_RTOL, limit=400)
    logw = l * math.log(sr) + (c - l - 1.0) * math.log(alpha) + fmax + math.log(val)
    return logw, val


def u_integral(l: int, c: float, alpha: float, sr: float) -> float:
    """``U_l = int_0^alpha u^{c-l-2} exp(u - (sigma r)^2/(4u)) du`` by quadrature."""
    logw, _ = _log_w_quadrature(l, c, alpha, sr)
    return math.exp(logw - l * math.log(sr))


def _w_quad(l: int, c: float, alpha: float, sr: float) -> float:
    logw, _ = _log_w_quadrature(l, c, alpha, sr)
    return math.exp(logw) if logw < 709.0 else math.inf


def u_chain(lmax: int, c: float, alpha: float, sr: float) -> tuple[np.ndarray, int]:
    """Scaled direct-space integrals ``W_l = (sigma r)^l U_l`` for ``l = 0..lmax``.

    ``U_0`` and ``U_1`` come from quadrature; higher orders from the upward
    recurrence
    ``(sr/2)^2 U_{l+1} = (l+1-c) U_l - U_{l-1} + alpha^{c-l-1} e^{alpha - sr^2/(4 alpha)}``,
    written for ``W``.  A step that cancels more than ``MONITOR_DIGITS``
    digits is replaced by direct quadrature.

    Returns:
        ``(W, n_quad)`` where ``n_quad`` counts quadrature evaluations.
    """
    w = np.empty(lmax + 1)
    w[0] = _w_quad(0, c, alpha, sr)
    nq = 1
    if lmax >= 1:
        w[1] = _w_quad(1, c, alpha, sr)
        nq += 1
    beta = sr * sr / (4.0 * alpha)
    log_sr, log_a = math.log(sr), math.log(alpha)
    for l in range(1, lmax):
        a = 4.0 * (l + 1.0 - c) * w[l] / sr
        b = 4.0 * w[l - 1]
        expo = (l - 1.0) * log_sr + (c - l - 1.0) * log_a + alpha - beta
        t = 4.0 * math.exp(expo) if expo > -745.0 else 0.0
        nxt = a - b + t
        scale = max(abs(a), abs(b), abs(t))
        if not math.isfinite(nxt) or scale == 0.0 or abs(nxt) < 10.0 ** (-MONITOR_DIGITS) * scale:
            nxt = _w_quad(l + 1, c, alpha, sr)
            nq += 1
        w[l + 1] = nxt
    return w, nq


# ---------------------------------------------------------------------------
# Engine: shared reciprocal/direct data for all indices up to lmax
# ---------------------------------------------------------------------------


class _Engine:
    """Precomputed ingredients of ``D1``/``D2`` for one lattice, context and ``lmax``."""

    def __init__(self, lat: QuasiLattice, ctx: BlochContext, lmax: int):
        ctx.check(lat)
        sigma = ctx.sigma_real
        if not sigma > 0.0:
            raise DomainError("Helmholtz lattice sums need sigma > 0")
        if lmax < 0 or lmax > 80:
            raise DomainError("lmax must lie in [0, 80]")
        self.lat, self.ctx, self.lmax, self.sigma = lat, ctx, lmax, sigma
        self.alpha = 0.5 * sigma * sigma * ctx.eta
        self.flags: list[str] = []
        self._recip()
        self._direct()

    # -- reciprocal part ----------------------------------------------------

    def _recip(self) -> None:
        lat, ctx, s = self.lat, self.ctx, self.sigma
        rp = recip_points(lat, ctx, power=self.lmax)
        rp.require_nongrazing()
        self.rp = rp
        kp2 = s * s - rp.g**2
        mag = 0.5 * np.abs(kp2) * ctx.eta
        minus_pi = kp2 > 0.0
        c = lat.case.c
        base = 0.5 if c == 0.5 else 0.0
        nmax = self.lmax // 2
        # gam[n, s] = Gamma(base - n, e^{-i pi} K^2 eta/2)
        self.gam = inc_gamma_ladders(base, nmax, mag, minus_pi)
        kr = rp.kperp / s
        if lat.lattice_dim == 1:
            x = rp.q[:, 0] / s
        else:
            x = rp.g / s
            self.phi_q = np.where(rp.g > 0.0, np.arctan2(rp.q[:, 1], rp.q[:, 0]), 0.0)
        self.qpow = np.power(x[None, :], np.arange(self.lmax + 1)[:, None])
        off = 1 if c == 0.5 else 0
        self.kpow = np.power(kr[None, :], (2 * np.arange(nmax + 1) - off)[:, None])
        vals = np.abs(self.gam[0])
        self.recip_trunc = float(vals[-1]) if vals.size else 0.0
        self._d1_cache: dict[int, complex] = {}

    def _inner_chain(self, L: int) -> complex:
        """``sum_s sum_n Gamma_n (q/sigma)^{L-2n} (K/sigma)^{2n-off} / (4^n n! (L-2n)!)``."""
        if L in self._d1_cache:
            return self._d1_cache[L]
        acc = np.zeros(len(self.rp), dtype=complex)
        for n in range(L // 2 + 1):
            coef = 1.0 / (4.0**n * _fact(n) * _fact(L - 2 * n))
            acc += coef * self.gam[n] * self.qpow[L - 2 * n] * self.kpow[n]
        val = complex(np.sum(acc))
        self._d1_cache[L] = val
        return val

    def d1(self, index: AngularIndex) -> complex:
        lat, s = self.lat, self.sigma
        case = lat.case
        if case is Case.ONE_IN_TWO:
            L = abs(index.l)
            pref = -(1j ** ((L + 1) % 4)) * _fact(L) / (math.sqrt(2.0) * s * lat.v0)
            return pref * self._inner_chain(L)
        if _selection_zero(lat, index):
            return 0j
        l, m = index.l, index.m
        if case is Case.ONE_IN_THREE:
            pref = -(_fact(l) / lat.v0) * (1j ** (l % 4)) * equator_harmonic(l, m)
            return pref * self._inner_chain(l)
        am = abs(m)
        half_minus, half_plus = (l - am) // 2, (l + am) // 2
        acc = np.zeros(len(self.rp), dtype=complex)
        for n in range(half_minus + 1):
            coef = 1.0 / (_fact(n) * _fact(half_minus - n) * _fact(half_plus - n))
            acc += coef * self.gam[n] * self.qpow[l - 2 * n] * self.kpow[n]
        phase = np.exp(-1j * m * self.phi_q)
        inner = complex(np.sum(phase * acc))
        pref = -(1.0 / (s * lat.v0)) * (1j ** ((1 - m) % 4)) / 2.0**l
        pref *= math.sqrt((2 * l + 1) * math.factorial(l + am) * math.factorial(l - am))
        return pref * inner

    # -- direct part -------------------------------------------------------

    def _direct(self) -> None:
        lat, ctx, s = self.lat, self.ctx, self.sigma
        c = 1.0 if lat.dimension == 2 else 0.5
        eta, tol = ctx.eta, ctx.cutoffs.tol
        rnear = lat.nearest_distance()
        r_peak = math.sqrt(max(self.lmax, 1) * eta)
        # Gaussian envelope exp(-r^2/(2 eta)) below tol relative to the nearest shell.
        r_gauss = math.sqrt(rnear**2 + 2.0 * eta * ctx.cutoffs.log_tol)
        if ctx.cutoffs.direct_radius is not None:
            radius = ctx.cutoffs.direct_radius
            adaptive = False
        else:
            radius = max(r_gauss, r_peak + rnear) * 1.25
            adaptive = True
        while True:
            pts = direct_points(lat, radius)
            norms = np.linalg.norm(pts, axis=1)
            w = np.empty((pts.shape[0], self.lmax + 1))
            nq = 0
            cache: dict[float, np.ndarray] = {}
            for i, r in enumerate(norms):
                key = float(r)
                if key not in cache:
                    cache[key], q = u_chain(self.lmax, c, self.alpha, s * r)
                    nq += q
                w[i] = cache[key]
            if not adaptive:
                break
            # Relative size of the outermost shell for each l.
            outer = norms >= norms.max() * (1.0 - 1e-12) - 0.75 * rnear
            peak = np.max(np.abs(w), axis=0)
            tail = np.max(np.abs(w[outer]), axis=0)
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(peak > 0.0, tail / peak, 0.0)
            if np.all(rel <= tol) or radius > 200.0 * rnear + 50.0 * math.sqrt(eta):
                break
            radius *= 1.3
        self.pts, self.norms, self.w, self.n_quad = pts, norms, w, nq
        k = ctx.k_par
        self.bloch = np.exp(-1j * (pts @ k))
        if lat.lattice_dim == 1:
            self.sign = np.sign(pts[:, 0])
        else:
            self.phi_r = np.arctan2(pts[:, 1], pts[:, 0])
        self.direct_trunc = float(np.max(np.abs(w[-1]))) if w.size else 0.0

    def d2(self, index: AngularIndex) -> complex:
        lat, s = self.lat, self.sigma
        case = lat.case
        if case is Case.ONE_IN_TWO:
            l = index.l
            L = abs(l)
            weights = self.bloch * self.sign**L * self.w[:, L]
            pref = -((-1) ** L) / (2.0 ** (L + 1) * SQRT_2PI)
            return pref * complex(np.sum(weights))
        if _selection_zero(lat, index):
            return 0j
        l, m = index.l, index.m
        am = abs(m)
        if case is Case.ONE_IN_THREE:
            ph = self.sign ** (m % 2)
        else:
            ph = np.exp(-1j * m * self.phi_r)
        total = complex(np.sum(self.bloch * ph * self.w[:, l]))
        f = math.sqrt((2 * l + 1) * math.factorial(l - am) * math.factorial(l + am)) / (
            math.factorial((l - am) // 2) * math.factorial((l + am) // 2)
        )
        pref = -(s / (4.0 * math.pi)) * ((-1) ** l * (-1) ** ((l + m) // 2) / 4.0**l) * f
        return pref * total

    def d3(self, index: AngularIndex) -> tuple[complex, int]:
        if index.l != 0 or (index.m not in (None, 0)):
            return 0j, 0
        return d3_value(self.sigma, self.ctx.eta, self.lat.dimension)

    def components(self, index: AngularIndex) -> SumComponents:
        index.validate(self.lat.dimension)
        if self.lat.dimension == 2:
            if abs(index.l) > self.lmax:
                raise DomainError("index beyond engine lmax")
        elif index.l > self.lmax:
            raise DomainError("index beyond engine lmax")
        diag = dict(
            eta=self.ctx.eta,
            recip_terms=len(self.rp),
            direct_terms=int(self.pts.shape[0]),
            recip_trunc=self.recip_trunc,
            direct_trunc=self.direct_trunc,
        )
        if _selection_zero(self.lat, index):
            return SumComponents(index, 0j, 0j, 0j, 0j, Diagnostics(flags=("selection-rule",), **diag))
        v1 = self.d1(index)
        v2 = self.d2(index)
        v3, n3 = self.d3(index)
        total = v1 + v2 + v3
        flags = []
        if abs(v1) > INSTABILITY_RATIO * abs(total) and abs(v2) > INSTABILITY_RATIO * abs(total):
            flags.append("eta-instability")
        return SumComponents(index, v1, v2, v3, total, Diagnostics(d3_terms=n3, flags=tuple(flags), **diag))


def d3_value(sigma: float, eta: float, dimension: int) -> tuple[complex, int]:
    """``D3`` for the ``L = 0`` sum and the number of series terms used."""
    if not (sigma > 0.0 and eta > 0.0):
        raise DomainError("d3 needs sigma > 0 and eta > 0")
    a = 0.5 * sigma * sigma * eta
    if dimension == 2:
        # The bracket gamma + ln(a) + sum a^n/(n n!) is Ei(a).
        return complex(-_sp.expi(a) / (2.0 * SQRT_2PI)), 1
    if dimension != 3:
        raise DomainError("dimension must be 2 or 3")
    total = 0.0
    term = a**-0.5  # a^{n-1/2}/n!
    n = 0
    while True:
        contrib = term / (n - 0.5)
        total += contrib
        n += 1
        term *= a / n
        if n > a and abs(term / (n - 0.5)) <= 1e-18 * abs(total):
            break
        if n > 2000:
            break
    return complex(-(sigma / (4.0 * math.pi)) * total), n


@lru_cache(maxsize=32)
def _engine_cached(key) -> _Engine:
    lat, ctx, lmax = key[0]._obj, key[1]._obj, key[2]
    return _Engine(lat, ctx, lmax)


class _Key:
    """Hashable wrapper keyed on the numeric content of a lattice or context."""

    def __init__(self, obj, fields):
        self._obj = obj
        self._fields = fields

    def __hash__(self):
        return hash(self._fields)

    def __eq__(self, other):
        return isinstance(other, _Key) and self._fields == other._fields


def _engine(lat: QuasiLattice, ctx: BlochContext, lmax: int) -> _Engine:
    lk = _Key(lat, (lat.case, tuple(lat.basis.ravel())))
    ck = _Key(ctx, (complex(ctx.sigma), tuple(ctx.k_par), ctx.eta, ctx.cutoffs))
    return _engine_cached((lk, ck, int(lmax)))


def _as_index(lat: QuasiLattice, L) -> AngularIndex:
    if isinstance(L, AngularIndex):
        L.validate(lat.dimension)
        return L
    if lat.dimension == 2:
        return AngularIndex.d2(int(L))
    l, m = L
    return AngularIndex.d3(int(l), int(m))


def d1(lat: QuasiLattice, ctx: BlochContext, L) -> complex:
    """Reciprocal-space part ``D1_L``."""
    idx = _as_index(lat, L)
    if _selection_zero(lat, idx):
        return 0j
    return _engine(lat, ctx, abs(idx.l)).d1(idx)


def d2(lat: QuasiLattice, ctx: BlochContext, L) -> complex:
    """Direct-space part ``D2_L``."""
    idx = _as_index(lat, L)
    if _selection_zero(lat, idx):
        return 0j
    return _engine(lat, ctx, abs(idx.l)).d2(idx)


def d3(ctx: BlochContext, dimension: int, L=None) -> complex:
    """Correction term ``D3``; nonzero only for ``L = 0``."""
    if L is not None:
        l = L.l if isinstance(L, AngularIndex) else (L if np.ndim(L) == 0 else L[0])
        m = L.m if isinstance(L, AngularIndex) else (None if np.ndim(L) == 0 else L[1])
        if l != 0 or (m not in (None, 0)):
            return 0j
    return d3_value(ctx.sigma_real, ctx.eta, dimension)[0]


def lattice_sum(lat: QuasiLattice, ctx: BlochContext, indices: Iterable) -> dict[AngularIndex, SumComponents]:
    """``D_L`` with its components for every requested index."""
    idx = [_as_index(lat, L) for L in indices]
    if not idx:
        return {}
    lmax = max(abs(i.l) for i in idx)
    eng = _engine(lat, ctx, lmax)
    return {i: eng.components(i) for i in idx}


def lattice_sums_upto(lat: QuasiLattice, ctx: BlochContext, lmax: int) -> dict[AngularIndex, SumComponents]:
    return lattice_sum(lat, ctx, all_indices(lat.case, lmax))


def closed_d00_1in3(sigma: complex, k: float, a: float) -> complex:
    """Closed form ``D00 = ln{2[cos(sigma a) - cos(k a)]} / (sqrt(4 pi) a)`` for the chain in 3D.

    ``sigma`` may be imaginary (``i*sqrt(-z)``), where ``cos`` becomes ``cosh``.
    The principal logarithm is used.
    """
    import cmath

    if not a > 0.0:
        raise DomainError("period must be positive")
    cs = cmath.cos(complex(sigma) * a)
    ck = math.cos(k * a)
    arg = 2.0 * (cs - ck)
    if abs(arg) <= 4.0 * np.finfo(float).eps * max(1.0, abs(cs)):
        raise SingularInputError("closed-form D00 is singular: cos(sigma a) = cos(k a)")
    return cmath.log(arg) / (SQRT_4PI * a)


def _ac_constants(sigma: float, dimension: int) -> tuple[float, float]:
    if dimension == 2:
        return 2.0 * math.pi, 0.25
    if dimension == 3:
        return 4.0 * math.pi, sigma / (4.0 * math.pi)
    raise DomainError("dimension must be 2 or 3")


def to_script_d(value: complex, L, sigma: float, dimension: int) -> complex:
    """Convert ``D_L`` to the alternative normalization ``D_L + i C A^{1/2} delta_{L0}``."""
    if not sigma > 0.0:
        raise DomainError("conversion needs sigma > 0")
    l = L.l if isinstance(L, AngularIndex) else (L if np.ndim(L) == 0 else L[0])
    m = L.m if isinstance(L, AngularIndex) else (None if np.ndim(L) == 0 else L[1])
    if l != 0 or m not in (None, 0):
        return complex(value)
    A, C = _ac_constants(sigma, dimension)
    return complex(value) + 1j * C * math.sqrt(A)


def diagonal_offset(sigma: float, dimension: int) -> complex:
    """Diagonal structure-constant offset ``g0 = -i A C``."""
    A, C = _ac_constants(sigma, dimension)
    return -1j * A * C


def selection_indices(lat: QuasiLattice, lmax: int) -> list[AngularIndex]:
    """Indices forced to zero by the frozen orientation (3D only)."""
    if lat.dimension == 2:
        return []
    return [i for i in all_indices(lat.case, lmax) if _selection_zero(lat, i)]


def sorted_indices(indices: Sequence[AngularIndex]) -> list[AngularIndex]:
    return sorted(indices, key=lambda i: (abs(i.l), i.l, i.m if i.m is not None else 0))
