"""Direct and reciprocal lattices for the three quasi-periodic geometries.

Orientation is fixed: one-dimensional lattices lie along the x-axis and the
two-dimensional lattice lies in the plane z = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from qpgreen.errors import DomainError, SingularInputError


class Case(enum.Enum):
    """Lattice/embedding combination."""

    ONE_IN_TWO = "1in2"
    ONE_IN_THREE = "1in3"
    TWO_IN_THREE = "2in3"

    @property
    def dimension(self) -> int:
        return 2 if self is Case.ONE_IN_TWO else 3

    @property
    def lattice_dim(self) -> int:
        return 2 if self is Case.TWO_IN_THREE else 1

    @property
    def c(self) -> float:
        """``(d - d_lattice)/2``, the exponent appearing in the reciprocal integrals."""
        return 0.5 * (self.dimension - self.lattice_dim)

    @classmethod
    def parse(cls, text: str) -> "Case":
        key = str(text).lower().replace("-", "").replace("_", "")
        for case in cls:
            if key in (case.value, case.name.lower().replace("_", "")):
                return case
        raise DomainError(f"unknown geometry {text!r}; expected one of 1in2, 1in3, 2in3")


@dataclass(frozen=True)
class QuasiLattice:
    """A Bravais lattice embedded in 2D or 3D space.

    ``basis`` rows are the direct lattice vectors in lattice coordinates
    (shape ``(1, 1)`` for chains, ``(2, 2)`` for planar lattices);
    ``recip`` rows satisfy ``basis @ recip.T = 2*pi*I``.
    """

    case: Case
    basis: np.ndarray
    v0: float
    recip: np.ndarray

    @property
    def dimension(self) -> int:
        return self.case.dimension

    @property
    def lattice_dim(self) -> int:
        return self.case.lattice_dim

    @property
    def period(self) -> float:
        if self.lattice_dim != 1:
            raise DomainError("period is only defined for chains")
        return float(self.basis[0, 0])

    def nearest_distance(self) -> float:
        pts = direct_points(self, 2.0 * float(np.max(np.linalg.norm(self.basis, axis=1))))
        return float(np.min(np.linalg.norm(pts, axis=1)))

    def split(self, point) -> tuple[np.ndarray, np.ndarray]:
        """Split a spatial point into its in-lattice and perpendicular parts."""
        p = np.asarray(point, dtype=float).reshape(-1)
        if p.size != self.dimension:
            raise DomainError(f"point must have {self.dimension} coordinates")
        return p[: self.lattice_dim].copy(), p[self.lattice_dim :].copy()

    def embed(self, r: np.ndarray) -> np.ndarray:
        """Lattice vectors as points of the embedding space."""
        r = np.atleast_2d(r)
        out = np.zeros((r.shape[0], self.dimension))
        out[:, : self.lattice_dim] = r
        return out


def build(case: Case | str, basis, checks: bool = True) -> QuasiLattice:
    """Construct a lattice.

    Args:
        case: geometry (``Case`` or its string tag).
        basis: period ``a`` (scalar) for chains, or two in-plane vectors.
        checks: verify the duality relation on a small block.
    """
    case = Case.parse(case) if isinstance(case, str) else case
    if case.lattice_dim == 1:
        a = float(np.asarray(basis, dtype=float).reshape(-1)[0])
        if not a > 0.0:
            raise DomainError("chain period must be positive")
        b = np.array([[a]])
        recip = np.array([[2.0 * math.pi / a]])
        v0 = a
    else:
        b = np.asarray(basis, dtype=float).reshape(2, 2)
        det = float(np.linalg.det(b))
        scale = float(np.linalg.norm(b[0]) * np.linalg.norm(b[1]))
        if scale == 0.0 or abs(det) <= 1e-12 * scale:
            raise DomainError("degenerate planar basis")
        recip = 2.0 * math.pi * np.linalg.inv(b).T
        v0 = abs(det)
    lat = QuasiLattice(case, b, v0, recip)
    if checks:
        _check_duality(lat)
    return lat


def chain(case: Case | str = Case.ONE_IN_TWO, a: float = 1.0) -> QuasiLattice:
    return build(case, a)


def _check_duality(lat: QuasiLattice, span: int = 2) -> None:
    rng = np.arange(-span, span + 1)
    if lat.lattice_dim == 1:
        idx = rng[:, None].astype(float)
    else:
        i, j = np.meshgrid(rng, rng, indexing="ij")
        idx = np.stack([i.ravel(), j.ravel()], axis=1).astype(float)
    r = idx @ lat.basis
    k = idx @ lat.recip
    n = (r @ k.T) / (2.0 * math.pi)
    if np.max(np.abs(n - np.round(n))) > 1e-10:
        raise DomainError("reciprocal basis fails the duality check")


def _index_box(mat: np.ndarray, center: np.ndarray, radius: float) -> list[np.ndarray]:
    """Integer ranges covering ``{n : |n @ mat - center| <= radius}``."""
    inv = np.linalg.inv(mat)
    c = center @ inv
    half = radius * np.linalg.norm(inv, axis=0)
    return [np.arange(math.floor(c[i] - half[i]) - 1, math.ceil(c[i] + half[i]) + 2) for i in range(mat.shape[0])]


def _ordered(vectors: np.ndarray, norms: np.ndarray) -> np.ndarray:
    keys = [vectors[:, j] for j in reversed(range(vectors.shape[1]))] + [norms]
    return np.lexsort(keys)


def direct_points(lat: QuasiLattice, radius: float, include_origin: bool = False) -> np.ndarray:
    """Lattice vectors with ``|r| <= radius``, sorted by length then lexicographically."""
    if not radius > 0.0:
        raise DomainError("radius must be positive")
    ranges = _index_box(lat.basis, np.zeros(lat.lattice_dim), radius)
    if lat.lattice_dim == 1:
        idx = ranges[0][:, None].astype(float)
    else:
        i, j = np.meshgrid(ranges[0], ranges[1], indexing="ij")
        idx = np.stack([i.ravel(), j.ravel()], axis=1).astype(float)
    r = idx @ lat.basis
    norms = np.linalg.norm(r, axis=1)
    keep = norms <= radius * (1.0 + 1e-14)
    if not include_origin:
        keep &= norms > 0.0
    r, norms = r[keep], norms[keep]
    return r[_ordered(r, norms)]


@dataclass(frozen=True)
class Cutoffs:
    """Truncation controls.

    ``tol`` is the inner-series tolerance; explicit radii override the
    tolerance-driven defaults.
    """

    tol: float = 1e-17
    recip_radius: Optional[float] = None
    direct_radius: Optional[float] = None

    def __post_init__(self) -> None:
        if not (0.0 < self.tol < 1.0):
            raise DomainError("tolerance must lie in (0, 1)")
        for r in (self.recip_radius, self.direct_radius):
            if r is not None and not r > 0.0:
                raise DomainError("cutoff radii must be positive")

    @property
    def log_tol(self) -> float:
        return -math.log(self.tol)


@dataclass(frozen=True)
class BlochContext:
    """Wavenumber, Bloch momentum and Ewald parameter for one evaluation."""

    sigma: complex
    k_par: np.ndarray
    eta: float = 1.0
    cutoffs: Cutoffs = field(default_factory=Cutoffs)

    def __post_init__(self) -> None:
        object.__setattr__(self, "k_par", np.atleast_1d(np.asarray(self.k_par, dtype=float)).copy())
        if not self.eta > 0.0:
            raise DomainError("Ewald parameter eta must be positive")

    @property
    def sigma_real(self) -> float:
        s = complex(self.sigma)
        if s.imag != 0.0 or s.real < 0.0:
            raise DomainError("this operation needs a real nonnegative wavenumber")
        return s.real

    def with_eta(self, eta: float) -> "BlochContext":
        return BlochContext(self.sigma, self.k_par, eta, self.cutoffs)

    def check(self, lat: QuasiLattice) -> None:
        if self.k_par.size != lat.lattice_dim:
            raise DomainError(f"k_par must have {lat.lattice_dim} components")


def kperp(sigma: complex, g) -> np.ndarray:
    """Perpendicular wavenumber ``sqrt(sigma^2 - g^2)`` with ``Im >= 0``.

    Real ``sigma``: ``sqrt(sigma^2-g^2)`` if nonnegative radicand, else
    ``+i*sqrt(g^2-sigma^2)``.
    """
    g = np.asarray(g, dtype=float)
    s = complex(sigma)
    if s.imag == 0.0:
        s2 = s.real * s.real
        d = s2 - g * g
        out = np.where(d >= 0.0, np.sqrt(np.abs(d)) + 0j, 1j * np.sqrt(np.abs(d)))
    else:
        out = np.sqrt(s * s - g * g + 0j)
        out = np.where(out.imag < 0.0, -out, out)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class RecipPoints:
    """Reciprocal vectors ``k_n``, shifted vectors ``q = k_par + k_n``, ``g = |q|`` and ``K_perp``."""

    k: np.ndarray
    q: np.ndarray
    g: np.ndarray
    kperp: np.ndarray
    grazing: np.ndarray

    def __len__(self) -> int:
        return int(self.g.size)

    def require_nongrazing(self) -> None:
        if np.any(self.grazing):
            n = self.k[np.argmax(self.grazing)]
            raise SingularInputError(f"grazing (Wood) condition: K_perp = 0 for reciprocal vector {n.tolist()}")


GRAZING_RTOL = 1e-12


def recip_within(lat: QuasiLattice, k_par, sigma: complex, gmax: float) -> RecipPoints:
    """All reciprocal points with ``|k_par + k_n| <= gmax``, ordered by ``g``."""
    k_par = np.atleast_1d(np.asarray(k_par, dtype=float))
    ranges = _index_box(lat.recip, -k_par, gmax)
    if lat.lattice_dim == 1:
        idx = ranges[0][:, None].astype(float)
    else:
        i, j = np.meshgrid(ranges[0], ranges[1], indexing="ij")
        idx = np.stack([i.ravel(), j.ravel()], axis=1).astype(float)
    k = idx @ lat.recip
    q = k + k_par
    g = np.linalg.norm(q, axis=1)
    keep = g <= gmax
    k, q, g = k[keep], q[keep], g[keep]
    order = _ordered(k, g)
    k, q, g = k[order], q[order], g[order]
    kp = np.atleast_1d(kperp(sigma, g))
    s = complex(sigma)
    scale = max(abs(s) ** 2, float(np.max(g) ** 2) if g.size else 0.0, 1e-300)
    grazing = np.abs(abs(s) ** 2 - g**2) <= GRAZING_RTOL * scale if s.imag == 0.0 else np.zeros(g.size, bool)
    return RecipPoints(k, q, g, kp, grazing)


def recip_points(lat: QuasiLattice, ctx: BlochContext, power: int = 0) -> RecipPoints:
    """Reciprocal points needed by the Ewald reciprocal series.

    Every ``k_n`` with ``exp(-(g^2 - sigma^2) eta/2) >= tol`` is included,
    enlarged so that the polynomial factor ``(g/sigma)^power`` of the
    angular-momentum ``power`` does not spoil that bound.
    """
    ctx.check(lat)
    if ctx.cutoffs.recip_radius is not None:
        return recip_within(lat, ctx.k_par, ctx.sigma, ctx.cutoffs.recip_radius)
    s = abs(complex(ctx.sigma))
    t = ctx.cutoffs.log_tol
    ref = max(s, float(np.min(np.linalg.norm(lat.recip, axis=1))) * 0.5)
    g2 = s * s + 2.0 * t / ctx.eta
    for _ in range(50):
        g = math.sqrt(g2)
        extra = power * max(0.0, math.log(g / ref)) if power else 0.0
        new = s * s + 2.0 * (t + extra) / ctx.eta
        if abs(new - g2) <= 1e-9 * new:
            break
        g2 = new
    return recip_within(lat, ctx.k_par, ctx.sigma, math.sqrt(g2))
