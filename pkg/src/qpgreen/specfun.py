"""Special functions used by the lattice-sum and Green's-function formulas.

Bessel, error-function and exponential-integral primitives are delegated to
``scipy.special``.  The phased incomplete gamma function, the spherical Hankel
closed form and the spherical harmonics are implemented here.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special as _sp

from qpgreen.errors import DomainError, OverflowReport

SQRT_PI = math.sqrt(math.pi)

# Largest argument of exp() that stays finite in double precision.
EXP_LIMIT = math.log(np.finfo(float).max)


class Phase(enum.Enum):
    """Phase of a ``PhasedArgument``: the argument is ``magnitude * exp(i*phase)``."""

    ZERO = 0.0
    MINUS_PI = -math.pi


@dataclass(frozen=True)
class PhasedArgument:
    """A positive magnitude together with a phase marker in ``{0, -pi}``.

    The phase is kept symbolically so that branch-dependent quantities such as
    ``z**b`` are evaluated on the intended sheet.
    """

    magnitude: float
    phase: Phase = Phase.ZERO

    def __post_init__(self) -> None:
        if not (self.magnitude > 0.0) or not math.isfinite(self.magnitude):
            raise DomainError(f"phased argument needs a finite positive magnitude, got {self.magnitude!r}")

    @classmethod
    def from_kperp_squared(cls, kperp2: float, eta: float) -> "PhasedArgument":
        """Return ``exp(-i*pi) * kperp2 * eta / 2`` with the phase made explicit."""
        if kperp2 > 0.0:
            return cls(0.5 * kperp2 * eta, Phase.MINUS_PI)
        return cls(-0.5 * kperp2 * eta, Phase.ZERO)

    @property
    def value(self) -> complex:
        if self.phase is Phase.ZERO:
            return complex(self.magnitude, 0.0)
        return complex(-self.magnitude, -0.0)

    def power_exp(self, b: float) -> complex:
        """``z**b * exp(-z)`` on the recorded branch."""
        x = self.magnitude
        if self.phase is Phase.ZERO:
            expo = b * math.log(x) - x
            if expo < -745.0:
                return 0j
            if expo > EXP_LIMIT:
                raise OverflowReport(f"z^b e^-z overflows for b={b}, |z|={x}", threshold=EXP_LIMIT)
            return complex(math.exp(expo), 0.0)
        expo = b * math.log(x) + x
        if expo > EXP_LIMIT:
            raise OverflowReport(f"z^b e^-z overflows for b={b}, |z|={x} on phase -pi", threshold=EXP_LIMIT)
        return math.exp(expo) * _phase_factor(b)


def _phase_factor(b: float) -> complex:
    """``exp(-i*pi*b)`` for integer or half-integer ``b``, exact."""
    twice = round(2.0 * b)
    quarter = twice % 4
    return (1.0 + 0j, -1j, -1.0 + 0j, 1j)[quarter]


def _order_family(order: float) -> tuple[float, int]:
    """Split ``order`` into its base (1/2 or 0) and the number of downward steps."""
    twice = 2.0 * order
    k = round(twice)
    if abs(twice - k) > 1e-12:
        raise DomainError(f"unsupported incomplete-gamma order {order!r}")
    if k % 2 != 0:
        if k > 1:
            raise DomainError(f"half-integer order must be <= 1/2, got {order!r}")
        return 0.5, (1 - k) // 2
    if k > 0:
        raise DomainError(f"integer order must be <= 0, got {order!r}")
    return 0.0, -k // 2


def inc_gamma_ladder(order: float, z: PhasedArgument) -> np.ndarray:
    """Values ``Gamma(b, z)`` for ``b = base, base-1, ..., order``.

    ``base`` is 1/2 for half-integer orders and 0 for integer orders.  See
    ``inc_gamma_ladders`` for the evaluation strategy.
    """
    base, steps = _order_family(order)
    return inc_gamma_ladders(base, steps, [z.magnitude], [z.phase is Phase.MINUS_PI])[:, 0]


def inc_gamma_upper(order: float, z: PhasedArgument) -> complex:
    """Upper incomplete gamma ``Gamma(order, z)`` for orders ``1/2 - n`` or ``-n``.

    Args:
        order: half-integer not above 1/2, or a non-positive integer.
        z: argument with its phase (0 or -pi).

    Returns:
        Complex value on the sheet selected by ``z.phase``.  For phase -pi the
        base values are ``sqrt(pi) + 2i*int_0^sqrt(x) exp(t^2) dt`` and
        ``-Ei(x) + i*pi``.
    """
    return complex(inc_gamma_ladder(order, z)[-1])


def recurrence_residual(b: float, z: PhasedArgument) -> tuple[float, float]:
    """Residual of one recurrence step and the scale it is measured against."""
    g_b = inc_gamma_upper(b, z)
    g_b1 = inc_gamma_upper(b + 1.0, z)
    pe = z.power_exp(b)
    return abs(b * g_b - g_b1 + pe), abs(g_b) * abs(b) + abs(pe)


# Largest x for which exp(x^2) is finite.
ERFI_LIMIT = math.sqrt(EXP_LIMIT)


def erfi_integral(x: float) -> float:
    """``int_0^x exp(t^2) dt`` computed as ``dawsn(x) * exp(x^2)``."""
    if x < 0.0:
        raise DomainError("erfi_integral needs x >= 0")
    if x > ERFI_LIMIT:
        raise OverflowReport(f"int_0^x exp(t^2) dt overflows for x={x}", threshold=ERFI_LIMIT)
    if x == 0.0:
        return 0.0
    return float(_sp.dawsn(x) * math.exp(x * x))


def error_family(x: float) -> tuple[float, float]:
    """Return ``(erfc(x), int_0^x exp(t^2) dt)`` for ``x >= 0``."""
    if x < 0.0:
        raise DomainError("error_family needs x >= 0")
    return float(_sp.erfc(x)), erfi_integral(x)


def exp_integrals(x: float) -> tuple[float, float]:
    """Return ``(E1(x), Ei(x))`` for ``x > 0``."""
    if not x > 0.0:
        raise DomainError("exp_integrals needs x > 0")
    return float(_sp.exp1(x)), float(_sp.expi(x))


def bessel_cyl(l: int, x: float) -> tuple[float, float, complex]:
    """Cylindrical Bessel ``J_l``, ``Y_l`` and ``H_l^(1) = J_l + i Y_l`` at real ``x > 0``."""
    if l < 0:
        raise DomainError("bessel_cyl takes a nonnegative order")
    if not x > 0.0:
        raise DomainError("bessel_cyl needs x > 0")
    j = float(_sp.jv(l, x))
    y = float(_sp.yv(l, x))
    return j, y, complex(j, y)


def bessel_mod_k(nu: float, x: float) -> float:
    """Modified Bessel function ``K_nu(x)``; ``nu = 1/2`` uses the closed form."""
    if not x > 0.0:
        raise DomainError("bessel_mod_k needs x > 0")
    if nu == 0.5:
        return math.sqrt(math.pi / (2.0 * x)) * math.exp(-x)
    return float(_sp.kv(nu, x))


def hankel0_imag(kappa_r: float) -> complex:
    """``H_0^(1)(i*x) = (2/(pi*i)) K_0(x)`` for ``x > 0``."""
    return complex(0.0, -2.0 / math.pi * bessel_mod_k(0, kappa_r))


def _sph_h1_coeffs(l: int) -> list[float]:
    return [math.factorial(l + k) / (math.factorial(k) * math.factorial(l - k)) for k in range(l + 1)]


def sph_hankel1(l: int, z):
    """Spherical Hankel ``h_l^(1)(z)`` from the terminating finite sum.

    ``h_l(z) = (-i)^(l+1) e^{iz}/z * sum_k (l+k)!/(k!(l-k)!) (i/(2z))^k``.
    Works elementwise on arrays; ``z`` may be complex.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("spherical Hankel function is singular at z = 0")
    w = 0.5j / z
    acc = np.zeros_like(z)
    for c in reversed(_sph_h1_coeffs(l)):
        acc = acc * w + c
    out = (-1j) ** (l + 1) * np.exp(1j * z) / z * acc
    return out if out.ndim else complex(out)


def bessel_sph(l: int, z: complex) -> tuple[complex, Optional[complex]]:
    """Spherical Bessel ``j_l(z)`` and Hankel ``h_l^(1)(z)``.

    ``h_0^(1)(z) = e^{iz}/(iz)``; the Hankel part is ``None`` at ``z = 0``.
    """
    if l < 0:
        raise DomainError("bessel_sph takes a nonnegative order")
    zc = complex(z)
    if zc.imag == 0.0:
        j = complex(float(_sp.spherical_jn(l, zc.real)), 0.0)
    else:
        j = complex(_sp.spherical_jn(l, zc))
    if zc == 0:
        return j, None
    if l == 0:
        h = cmath.exp(1j * zc) / (1j * zc)
    else:
        h = complex(sph_hankel1(l, zc))
    return j, h


def sph_j(l: int, x):
    """Spherical Bessel ``j_l`` at real arguments (array friendly)."""
    return _sp.spherical_jn(l, x)


@dataclass(frozen=True)
class AngularIndex:
    """Angular-momentum label: signed ``l`` in 2D, ``(l, m)`` with ``|m| <= l`` in 3D."""

    l: int
    m: Optional[int] = None

    def __post_init__(self) -> None:
        if self.m is not None:
            if self.l < 0 or abs(self.m) > self.l:
                raise DomainError(f"invalid 3D index (l={self.l}, m={self.m})")

    @property
    def dimension(self) -> int:
        return 2 if self.m is None else 3

    def validate(self, dimension: int) -> None:
        if dimension != self.dimension:
            raise DomainError(f"index {self} is not a {dimension}D index")

    @classmethod
    def d2(cls, l: int) -> "AngularIndex":
        return cls(int(l), None)

    @classmethod
    def d3(cls, l: int, m: int) -> "AngularIndex":
        return cls(int(l), int(m))

    def __str__(self) -> str:
        return f"({self.l})" if self.m is None else f"({self.l},{self.m})"


def normalized_legendre(lmax: int, x: float, sine: Optional[float] = None) -> np.ndarray:
    """Table ``P[l, m]`` for ``0 <= m <= l <= lmax`` so that ``Y_lm = P[l, m] e^{im phi}``.

    Condon-Shortley phase included; standard three-term recursion in ``l``.
    Pass ``sine = sin(theta)`` near the poles, where ``sqrt(1 - x^2)`` loses it.
    """
    p = np.zeros((lmax + 1, lmax + 1))
    s = math.sqrt(max(0.0, 1.0 - x * x)) if sine is None else abs(float(sine))
    pmm = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(lmax + 1):
        if m > 0:
            pmm *= -s * math.sqrt((2.0 * m + 1.0) / (2.0 * m))
        p[m, m] = pmm
        if m + 1 <= lmax:
            p[m + 1, m] = x * math.sqrt(2.0 * m + 3.0) * pmm
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            p[l, m] = a * (x * p[l - 1, m] - b * p[l - 2, m])
    return p


def _direction_angles(direction) -> tuple[float, float]:
    v = np.asarray(direction, dtype=float)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise DomainError("direction must be nonzero")
    v = v / n
    theta = math.acos(max(-1.0, min(1.0, float(v[2]))))
    phi = math.atan2(float(v[1]), float(v[0]))
    return theta, phi


def sph_harm_lm(l: int, m: int, theta: float, phi: float) -> complex:
    """Condon-Shortley ``Y_lm(theta, phi)``."""
    if abs(m) > l:
        raise DomainError(f"|m| > l for (l={l}, m={m})")
    p = normalized_legendre(l, math.cos(theta), math.sin(theta))[l, abs(m)]
    y = p * cmath.exp(1j * abs(m) * phi)
    if m < 0:
        y = (-1) ** m * y.conjugate()
    return complex(y)


def harmonic(index: AngularIndex, direction, dimension: int) -> complex:
    """Angular basis function for ``dimension`` 2 or 3.

    In 2D ``direction`` may be an angle or a 2-vector and the result is
    ``e^{il phi}/sqrt(2 pi)``; in 3D it is the Condon-Shortley ``Y_lm``.
    """
    if dimension == 2:
        if index.m is not None:
            raise DomainError("2D harmonics take a scalar index")
        if np.ndim(direction) == 0:
            phi = float(direction)
        else:
            v = np.asarray(direction, dtype=float)
            phi = math.atan2(float(v[1]), float(v[0]))
        return cmath.exp(1j * index.l * phi) / math.sqrt(2.0 * math.pi)
    if dimension == 3:
        if index.m is None:
            raise DomainError("3D harmonics need (l, m)")
        theta, phi = _direction_angles(direction)
        return sph_harm_lm(index.l, index.m, theta, phi)
    raise DomainError(f"unsupported dimension {dimension}")


def equator_harmonic(l: int, m: int) -> float:
    """Coefficient of ``e^{-im phi}`` in ``conj(Y_lm(pi/2, phi))``; zero for ``l+m`` odd."""
    am = abs(m)
    if am > l:
        raise DomainError(f"|m| > l for (l={l}, m={m})")
    if (l + m) % 2:
        return 0.0
    sign = (-1) ** ((m - am) // 2) * (-1) ** ((l + am) // 2)
    num = math.sqrt((2 * l + 1) * math.factorial(l - am) * math.factorial(l + am))
    den = math.factorial((l - am) // 2) * math.factorial((l + am) // 2)
    return sign * num / (den * 2.0**l * math.sqrt(4.0 * math.pi))


# Magnitudes at or above this evaluate each order directly instead of recurring down.
GAMMA_SWITCH = 2.0
_EPS = np.finfo(float).eps


def _half_gamma(b: float) -> float:
    """``Gamma(1/2 - m)`` exactly as ``(-4)^m m!/(2m)! sqrt(pi)``."""
    m = round(0.5 - b)
    return (-4.0) ** m * math.factorial(m) / math.factorial(2 * m) * SQRT_PI


def _cf_zero(b: float, x: np.ndarray) -> np.ndarray:
    """``Gamma(b, x)`` for real ``x >= GAMMA_SWITCH`` by Legendre's continued fraction (modified Lentz)."""
    tiny = 1e-300
    bb = x + 1.0 - b
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / bb
    h = d.copy()
    for i in range(1, 2000):
        an = -i * (i - b)
        bb = bb + 2.0
        d = an * d + bb
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = bb + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= _EPS):
            break
    expo = b * np.log(x) - x
    return np.where(expo < -745.0, 0.0, np.exp(np.maximum(expo, -745.0)) * h)


def _poisson_terms(x: np.ndarray):
    """Yield ``(n, e^{-x} x^n/n!)`` until the terms are negligible for every entry."""
    t = np.exp(-x)
    n = 0
    nmax = int(np.max(x) + 12.0 * math.sqrt(float(np.max(x))) + 60.0)
    while True:
        yield n, t
        n += 1
        if n > nmax:
            return
        t = t * x / n


def _series_minus_pi(b: float, x: np.ndarray) -> np.ndarray:
    """``Gamma(b, x e^{-i pi})`` from its positive-term power series.

    Half-integer ``b``: ``Gamma(b) - x^b e^{-i pi b} sum_n x^n/(n!(b+n))``.
    Integer ``b = -n``: ``(-1)^n [(psi(n+1) - ln x + i pi)/n! - sum_{k != n} x^{k-n}/(k!(k-n))]``.
    Sums are scaled by ``e^{-x}`` to stay finite.
    """
    if np.any(x > EXP_LIMIT):
        raise OverflowReport("Gamma on phase -pi overflows", threshold=EXP_LIMIT)
    if abs(b - round(b)) > 0.25:
        acc = np.zeros_like(x)
        for n, t in _poisson_terms(x):
            acc = acc + t / (b + n)
        log_mag = b * np.log(x) + x + np.log(np.abs(acc))
        if np.any(log_mag > EXP_LIMIT):
            raise OverflowReport("Gamma on phase -pi overflows", threshold=EXP_LIMIT)
        lower = np.exp(b * np.log(x) + x) * acc
        return _half_gamma(b) - _phase_factor(b) * lower
    nn = round(-b)
    acc = np.zeros_like(x)
    for k, t in _poisson_terms(x):
        if k != nn:
            acc = acc + t / (k - nn)
    log_mag = -nn * np.log(x) + x + np.log(np.abs(acc))
    if np.any(log_mag > EXP_LIMIT):
        raise OverflowReport("Gamma on phase -pi overflows", threshold=EXP_LIMIT)
    tail = np.exp(x - nn * np.log(x)) * acc
    psi = -np.euler_gamma + sum(1.0 / j for j in range(1, nn + 1))
    head = (-1.0) ** nn / math.factorial(nn) * (psi - np.log(x) + 1j * math.pi)
    return head - (-1.0) ** nn * tail


def inc_gamma_ladders(base: float, steps: int, magnitudes, minus_pi) -> np.ndarray:
    """Vectorized ``Gamma(base - j, z)`` for ``j = 0..steps`` over many arguments.

    Magnitudes below ``GAMMA_SWITCH`` start from the closed-form base (erfc,
    erfi, E1, Ei) and apply ``b Gamma(b, z) = Gamma(b+1, z) - z^b e^{-z}``
    downward; there the magnitudes grow toward negative orders and the
    division is benign.  Larger magnitudes would cancel in that recurrence,
    so each order is evaluated directly: by continued fraction on phase 0
    and by the positive-term power series on phase -pi.

    Args:
        base: 1/2 or 0.
        steps: number of downward steps.
        magnitudes: positive argument magnitudes, shape ``(N,)``.
        minus_pi: boolean mask, True where the argument has phase -pi.

    Returns:
        Array ``(steps+1, N)`` with row ``j`` holding ``Gamma(base - j, z)``.
    """
    x = np.atleast_1d(np.asarray(magnitudes, dtype=float))
    mp_ = np.atleast_1d(np.asarray(minus_pi, dtype=bool))
    if base not in (0.5, 0.0):
        raise DomainError("ladder base must be 1/2 or 0")
    if np.any(~(x > 0.0)) or not np.all(np.isfinite(x)):
        raise DomainError("incomplete gamma arguments must have finite positive magnitude")
    out = np.empty((steps + 1, x.size), dtype=complex)
    small = x < GAMMA_SWITCH
    if np.any(small):
        out[:, small] = _ladder_recurrence(base, steps, x[small], mp_[small])
    big_zero = ~small & ~mp_
    if np.any(big_zero):
        for j in range(steps + 1):
            out[j, big_zero] = _cf_zero(base - j, x[big_zero])
    big_mp = ~small & mp_
    if np.any(big_mp):
        for j in range(steps + 1):
            out[j, big_mp] = _series_minus_pi(base - j, x[big_mp])
    return out


def _ladder_recurrence(base: float, steps: int, x: np.ndarray, mp_: np.ndarray) -> np.ndarray:
    out = np.empty((steps + 1, x.size), dtype=complex)
    if base == 0.5:
        rt = np.sqrt(x)
        erfi_part = np.where(mp_, _sp.dawsn(rt) * np.exp(np.where(mp_, x, 0.0)), 0.0)
        g = np.where(mp_, SQRT_PI + 2j * erfi_part, SQRT_PI * _sp.erfc(rt) + 0j)
    else:
        g = np.where(mp_, -_sp.expi(np.where(mp_, x, 1.0)) + 1j * math.pi, _sp.exp1(x) + 0j)
    out[0] = g
    logx = np.log(x)
    b = base
    for j in range(1, steps + 1):
        b -= 1.0
        expo = b * logx + np.where(mp_, x, -x)
        pe = np.exp(np.maximum(expo, -745.5)) * np.where(mp_, _phase_factor(b), 1.0)
        pe = np.where(expo < -745.0, 0.0, pe)
        g = (g - pe) / b
        out[j] = g
    return out
