"""Jacobi elliptic functions for complex arguments and period-lattice tools.

The configuration curves of spherical four-bar linkages are parametrized by
``sn``/``cn`` with a complex phase shift, so the kernel must evaluate the
Jacobi functions off the real axis, reduce points modulo a period lattice,
and invert ``dn`` on prescribed vertical segments of the period rectangle.

Complex evaluation composes scipy's real-argument ``ellipj`` with the
standard addition formulas for an imaginary shift.  Poles are reported via
the one-point-compactification sentinel :data:`POLE`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import ellipj

from .config import DEFAULT_TOL, Tolerances

#: Point-at-infinity sentinel for poles of sn, cn, dn (and for the
#: projective coordinates z, w elsewhere in the package).
POLE = complex(math.inf, 0.0)

_POLE_DENOM = 1e-14


class EllipticError(ValueError):
    """Domain or branch error in the elliptic kernel."""


def complete_K(k: float) -> float:
    """Complete elliptic integral of the first kind via the AGM iteration.

    K(k) = pi / (2 * agm(1, sqrt(1 - k^2))).
    """
    if not 0.0 < k < 1.0:
        raise EllipticError(f"modulus k={k!r} outside (0, 1)")
    a, b = 1.0, math.sqrt((1.0 - k) * (1.0 + k))
    # quadratic convergence: a handful of steps reach machine precision, and a
    # hard cap avoids cycling on the last floating-point ulp
    for _ in range(24):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (a + b)


@dataclass(frozen=True)
class JacobiModulus:
    """Modulus k with its complementary modulus and quarter periods."""

    k: float
    kp: float
    K: float
    Kp: float

    @classmethod
    def from_k(cls, k: float) -> "JacobiModulus":
        if not 0.0 < k < 1.0:
            raise EllipticError(f"modulus k={k!r} outside (0, 1)")
        kp = math.sqrt((1.0 - k) * (1.0 + k))
        return cls(k=k, kp=kp, K=complete_K(k), Kp=complete_K(kp))


class Family(enum.Enum):
    """Which periodic function parametrizes the curve."""

    SN = "Sn"
    CN = "Cn"
    SIN = "Sin"


@dataclass(frozen=True)
class PeriodLattice:
    """Period lattice of the parametrizing function.

    ``Sn``: generators 4K and 2iK'.  ``Cn``: 4K and 2K+2iK'.  ``Sin``: the
    single real generator 2*pi.
    """

    family: Family
    g1: complex
    g2: complex | None

    @classmethod
    def for_modulus(cls, family: Family, m: JacobiModulus | None) -> "PeriodLattice":
        if family is Family.SIN:
            return cls(family, complex(2.0 * math.pi), None)
        if m is None:
            raise EllipticError("elliptic lattice requires a modulus")
        if family is Family.SN:
            return cls(family, complex(4.0 * m.K), complex(0.0, 2.0 * m.Kp))
        return cls(family, complex(4.0 * m.K), complex(2.0 * m.K, 2.0 * m.Kp))

    def reduce(self, t: complex) -> complex:
        """Representative of ``t`` with lattice coefficients in [-1/2, 1/2)."""
        if self.g2 is None:
            a = t.real / self.g1.real
            a -= round(a)
            return complex(a * self.g1.real, t.imag)
        # solve t = a g1 + b g2 over the reals
        det = self.g1.real * self.g2.imag - self.g1.imag * self.g2.real
        a = (t.real * self.g2.imag - t.imag * self.g2.real) / det
        b = (self.g1.real * t.imag - self.g1.imag * t.real) / det
        a -= round(a)
        b -= round(b)
        return a * self.g1 + b * self.g2


def lattice_reduce(t: complex, lat: PeriodLattice) -> complex:
    """Canonical representative of ``t`` modulo the lattice."""
    return lat.reduce(t)


def is_period(t: complex, lat: PeriodLattice, tol: Tolerances = DEFAULT_TOL) -> bool:
    return abs(lat.reduce(t)) < tol.tol_period


def is_half_period(t: complex, lat: PeriodLattice, tol: Tolerances = DEFAULT_TOL) -> bool:
    return is_period(2.0 * t, lat, tol) and not is_period(t, lat, tol)


def is_quarter_period(t: complex, lat: PeriodLattice, tol: Tolerances = DEFAULT_TOL) -> bool:
    return is_period(4.0 * t, lat, tol) and not is_period(2.0 * t, lat, tol)


@dataclass(frozen=True)
class PhaseShift:
    """Phase offset between the two coordinate functions of a curve."""

    t0: complex
    lattice: PeriodLattice


def _sncndn_grid(t, m: JacobiModulus):
    """sn, cn, dn at complex ``t`` (ndarray ok) via the imaginary-shift rules."""
    t = np.asarray(t, dtype=complex)
    x = t.real
    y = t.imag
    k2 = m.k * m.k
    s, c, d, _ = ellipj(x, k2)
    s1, c1, d1, _ = ellipj(y, m.kp * m.kp)
    denom = c1 * c1 + k2 * (s * s1) ** 2
    bad = np.abs(denom) < _POLE_DENOM
    safe = np.where(bad, 1.0, denom)
    sn = (s * d1 + 1j * c * d * s1 * c1) / safe
    cn = (c * c1 - 1j * s * d * s1 * d1) / safe
    dn = (d * c1 * d1 - 1j * k2 * s * c * s1) / safe
    if np.any(bad):
        sn = np.where(bad, POLE, sn)
        cn = np.where(bad, POLE, cn)
        dn = np.where(bad, POLE, dn)
    return sn, cn, dn


def jacobi_sn(t, m: JacobiModulus):
    """sn(t, k) for complex scalar or ndarray ``t``; :data:`POLE` at poles."""
    sn, _, _ = _sncndn_grid(t, m)
    return complex(sn) if np.isscalar(t) or np.ndim(t) == 0 else sn


def jacobi_cn(t, m: JacobiModulus):
    """cn(t, k); see :func:`jacobi_sn`."""
    _, cn, _ = _sncndn_grid(t, m)
    return complex(cn) if np.isscalar(t) or np.ndim(t) == 0 else cn


def jacobi_dn(t, m: JacobiModulus):
    """dn(t, k); see :func:`jacobi_sn`."""
    _, _, dn = _sncndn_grid(t, m)
    return complex(dn) if np.isscalar(t) or np.ndim(t) == 0 else dn


class SignPQ(enum.Enum):
    """Sign class of the amplitude product p*q (each factor in R+ or iR+)."""

    RealPos = "RealPos"
    ImagPos = "ImagPos"
    RealNeg = "RealNeg"


class SigmaSide(enum.Enum):
    """Whether the half perimeter is below or above pi."""

    Below = "Below"
    Above = "Above"


#: (sign of pq, side of sigma) -> multiple of the quarter period in Re(t0).
_SEGMENT_INDEX = {
    (SignPQ.RealPos, SigmaSide.Below): 0,
    (SignPQ.ImagPos, SigmaSide.Below): 1,
    (SignPQ.RealNeg, SigmaSide.Below): 2,
    (SignPQ.RealPos, SigmaSide.Above): 2,
    (SignPQ.ImagPos, SigmaSide.Above): 3,
    (SignPQ.RealNeg, SigmaSide.Above): 0,
}


def segment_index(sign_pq: SignPQ, sigma_side: SigmaSide) -> int:
    """Which vertical segment of the period rectangle holds the shift."""
    return _SEGMENT_INDEX[(sign_pq, sigma_side)]


def _dn_even_segment(y: float, m: JacobiModulus) -> float:
    # dn(i y) = dn(y, k') / cn(y, k'), increasing from 1 to +inf on (0, K')
    _, c1, d1, _ = ellipj(y, m.kp * m.kp)
    return d1 / c1


def _dn_odd_segment(y: float, m: JacobiModulus) -> float:
    # dn(K + i y) = k' cn(y,k') dn(y,k') / (cn(y,k')^2 + k^2 sn(y,k')^2),
    # decreasing from k' to 0 on (0, K')
    s1, c1, d1, _ = ellipj(y, m.kp * m.kp)
    return m.kp * c1 * d1 / (c1 * c1 + m.k * m.k * s1 * s1)


def invert_dn(
    d: complex,
    m: JacobiModulus,
    sign_pq: SignPQ,
    sigma_side: SigmaSide,
    family: Family = Family.SN,
) -> PhaseShift:
    """Solve dn(t0) = d on the branch segment selected by the table.

    The shift lies on a vertical segment mK + i(0, K') of the period
    rectangle; the segment's dn values are real, in (1, inf) for even m and
    (0, k') for odd m, so ``d`` must be real and inside the matching range.
    """
    if abs(d.imag) > 1e-9:
        raise EllipticError(f"dn target {d!r} is not real; no segment solution")
    dv = float(d.real)
    seg = segment_index(sign_pq, sigma_side)
    lo, hi = 1e-12 * m.Kp, (1.0 - 1e-12) * m.Kp
    if seg % 2 == 0:
        if dv <= 1.0 + 1e-13:
            raise EllipticError(
                f"dn target {dv} not in (1, inf) for segment Re(t0)={seg}K"
            )
        f = lambda y: _dn_even_segment(y, m) - dv
    else:
        if not 0.0 < dv < m.kp - 1e-15:
            raise EllipticError(
                f"dn target {dv} not in (0, k') for segment Re(t0)={seg}K"
            )
        f = lambda y: _dn_odd_segment(y, m) - dv
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise EllipticError(f"dn target {dv} out of range on segment {seg}")
    y = brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)
    t0 = complex(seg * m.K, y)
    check = jacobi_dn(t0, m)
    if abs(check - dv) > 1e-10 * max(1.0, abs(dv)):
        raise EllipticError(f"dn inversion failed to verify at t0={t0!r}")
    return PhaseShift(t0=t0, lattice=PeriodLattice.for_modulus(family, m))


def conic_shift(r: float, sign_pq: SignPQ, sigma_side: SigmaSide) -> PhaseShift:
    """Shift t0 with tan(t0) = i*r, r > 0, on the segment given by the table.

    Even segments carry tanh(Im t0) = r (so r < 1), odd segments
    coth(Im t0) = r (so r > 1).
    """
    if r <= 0:
        raise EllipticError(f"conic shift ratio must be positive, got {r}")
    seg = segment_index(sign_pq, sigma_side)
    if seg % 2 == 0:
        if r >= 1.0:
            raise EllipticError(f"ratio {r} >= 1 inconsistent with segment {seg}")
        y = math.atanh(r)
    else:
        if r <= 1.0:
            raise EllipticError(f"ratio {r} <= 1 inconsistent with segment {seg}")
        y = math.atanh(1.0 / r)
    t0 = complex(seg * math.pi / 2.0, y)
    return PhaseShift(t0=t0, lattice=PeriodLattice.for_modulus(Family.SIN, None))
