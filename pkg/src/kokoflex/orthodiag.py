"""Orthodiagonal quadrilaterals: involution factors and curve equations.

When the diagonals of the spherical quadrilateral are perpendicular
(cos(alpha) cos(gamma) = cos(beta) cos(delta)), the two roots in z of the
configuration biquadratic over any fixed w have a constant product.  That
constant, the involution factor, exists at each non-apex vertex and turns
the biquadratic into a separable product form.  This module computes the
factors with all their right-angle fallback branches, the product-form
curve equations, the descended fold involution z -> factor/z, and the
compatibility predicate for two orthodiagonal quadrilaterals that share
a vertex.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .quad import (
    Apex,
    BarQuantities,
    QuadClass,
    QuadError,
    QuadTag,
    SideLengths,
    classify,
    conf_coeffs,
    is_orthodiagonal,
)

HALF_PI = 0.5 * math.pi


class FactorUndefinedAtApex(QuadError):
    """An involution factor was requested at an apex of an (anti)deltoid."""


class NotOrthodiagonal(QuadError):
    """Operation requires an orthodiagonal quadrilateral."""


class Vertex(enum.Enum):
    """Vertex of the quadrilateral named by its incident sides."""

    ALPHA_DELTA = "AlphaDelta"
    GAMMA_DELTA = "GammaDelta"


def _near_right(x: float, tol: float) -> bool:
    return abs(math.cos(x)) < tol


def _apex_flags(cls: QuadClass) -> tuple[bool, bool]:
    """(alpha-delta vertex is an apex, gamma-delta vertex is an apex)."""
    apices = set(cls.deltoid_overlap)
    if cls.tag is QuadTag.DELTOID:
        apices.add(cls.apex)
    # an alpha-beta deltoid has its apices at the alpha-beta and gamma-delta
    # vertices, so it blocks the factor at gamma-delta
    return (Apex.ALPHA_DELTA in apices, Apex.ALPHA_BETA in apices)


@dataclass(frozen=True)
class InvolutionFactors:
    """Involution factors of an orthodiagonal quadrilateral.

    ``lam`` lives at the vertex between sides alpha and delta, ``mu`` at the
    vertex between gamma and delta; they are absent at deltoid apices.  For
    the elliptic orthodiagonal case ``nu`` couples the two product factors;
    for deltoids the linear coefficients ``zeta`` (apex at alpha-delta) or
    ``xi`` (apex at gamma-delta) replace it.
    """

    lam: float | None
    mu: float | None
    nu: float | None
    zeta: float | None
    xi: float | None

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "mu": self.mu,
            "nu": self.nu,
            "zeta": self.zeta,
            "xi": self.xi,
        }

    def require(self, vertex: Vertex) -> float:
        value = self.lam if vertex is Vertex.ALPHA_DELTA else self.mu
        if value is None:
            raise FactorUndefinedAtApex(f"no involution factor at {vertex.value}")
        return value


def _lambda_like(near: float, far: float, cb: float, cc: float, tol: float) -> float:
    """Involution factor at the vertex between sides ``near`` and ``far``.

    ``far`` is delta, ``near`` is alpha or gamma; ``cb``/``cc`` are the
    cosines used by the doubly-right fallback.
    """
    if _near_right(near, tol) and _near_right(far, tol):
        return (cb + cc) / (cb - cc)
    return math.sin(far + near) / math.sin(far - near)


def involution_factors(
    s: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> InvolutionFactors:
    """All involution factors of an orthodiagonal quadrilateral."""
    if not is_orthodiagonal(s, tol):
        raise NotOrthodiagonal(f"{s} is not orthodiagonal")
    cls = classify(s, tol)
    if cls.tag is QuadTag.TRIVIAL_ALL_RIGHT:
        raise QuadError("all-right-angle quadrilateral has no involution factors")
    a, b, g, d = s.as_tuple()
    tr = 1e-12
    apex_ad, apex_ab = _apex_flags(cls)
    lam = None if apex_ad else _lambda_like(a, d, math.cos(b), math.cos(g), tr)
    mu = None if apex_ab else _lambda_like(g, d, math.cos(b), math.cos(a), tr)
    nu = zeta = xi = None
    if lam is not None and mu is not None:
        # elliptic orthodiagonal: both factors exist
        if not _near_right(d, tr):
            nu = (lam - 1.0) * (mu - 1.0) / math.cos(d)
        elif _near_right(g, tr):
            nu = 2.0 * (mu - 1.0) * math.tan(a)
        else:
            nu = 2.0 * (lam - 1.0) * math.tan(g)
    if apex_ad and mu is not None:
        if not _near_right(d, tr):
            zeta = (mu - 1.0) / math.cos(d)
        else:
            zeta = 2.0 * math.tan(g)
    if apex_ab and lam is not None:
        if not _near_right(d, tr):
            xi = (lam - 1.0) / math.cos(d)
        else:
            xi = 2.0 * math.tan(a)
    return InvolutionFactors(lam=lam, mu=mu, nu=nu, zeta=zeta, xi=xi)


class OrthForm(enum.Enum):
    NON_DELTOID = "NonDeltoid"
    APEX_ALPHA_DELTA = "ApexAlphaDelta"
    APEX_ALPHA_BETA = "ApexAlphaBeta"


@dataclass(frozen=True)
class OrthCurve:
    """Product form of the configuration curve of an orthodiagonal quad.

    ``NonDeltoid``: (az*z + bz/z) * (aw*w + bw/w) = rhs.
    ``ApexAlphaDelta``: w + mu/w = (+-zeta) * z**m.
    ``ApexAlphaBeta``: z + lam/z = (+-xi) * w**n.

    The deltoid curve splits into two components, one per sign of the
    coefficient; the residual therefore takes the better of the two signs.
    """

    form: OrthForm
    az: float = 0.0
    bz: float = 0.0
    aw: float = 0.0
    bw: float = 0.0
    rhs: float = 0.0
    factor: float = 0.0
    coeff: float = 0.0
    exponent: int = 0

    def residual(self, z: complex, w: complex) -> float:
        if self.form is OrthForm.NON_DELTOID:
            value = (self.az * z + self.bz / z) * (self.aw * w + self.bw / w) - self.rhs
            scale = max(
                abs(self.rhs),
                abs(self.az * z) + abs(self.bz / z),
                abs(self.aw * w) + abs(self.bw / w),
            )
            return abs(value) / max(scale, 1.0)
        if self.form is OrthForm.APEX_ALPHA_DELTA:
            lhs, rhs = w + self.factor / w, self.coeff * z**self.exponent
        else:
            lhs, rhs = z + self.factor / z, self.coeff * w**self.exponent
        value = min(abs(lhs - rhs), abs(lhs + rhs))
        return value / max(1.0, abs(lhs), abs(rhs))


def orth_curve_equation(s: SideLengths, tol: Tolerances = DEFAULT_TOL) -> OrthCurve:
    """Separable equation of the configuration curve; see :class:`OrthCurve`."""
    if not is_orthodiagonal(s, tol):
        raise NotOrthodiagonal(f"{s} is not orthodiagonal")
    cls = classify(s, tol)
    if cls.tag is QuadTag.TRIVIAL_ALL_RIGHT:
        raise QuadError("all-right-angle quadrilateral excluded")
    a, b, g, d = s.as_tuple()
    tr = 1e-12
    fac = involution_factors(s, tol)
    apex_ad, apex_ab = _apex_flags(cls)
    if not apex_ad and not apex_ab:
        if not _near_right(d, tr):
            return OrthCurve(
                OrthForm.NON_DELTOID,
                az=math.sin(d - a),
                bz=math.sin(d + a),
                aw=math.sin(d - g),
                bw=math.sin(d + g),
                rhs=4.0 * math.sin(a) * math.sin(g) * math.cos(d),
            )
        if _near_right(a, tr):
            return OrthCurve(
                OrthForm.NON_DELTOID,
                az=math.cos(b) - math.cos(g),
                bz=math.cos(b) + math.cos(g),
                aw=1.0,
                bw=1.0,
                rhs=4.0 * math.sin(g),
            )
        return OrthCurve(
            OrthForm.NON_DELTOID,
            az=1.0,
            bz=1.0,
            aw=math.cos(b) - math.cos(a),
            bw=math.cos(b) + math.cos(a),
            rhs=4.0 * math.sin(a),
        )
    anti = bool(cls.anti) if cls.tag is QuadTag.DELTOID else None
    if apex_ad and fac.zeta is not None:
        m = -1 if anti else 1
        return OrthCurve(
            OrthForm.APEX_ALPHA_DELTA,
            factor=fac.mu if fac.mu is not None else math.nan,
            coeff=fac.zeta,
            exponent=m,
        )
    if apex_ab and fac.xi is not None:
        n = -1 if anti else 1
        return OrthCurve(
            OrthForm.APEX_ALPHA_BETA,
            factor=fac.lam if fac.lam is not None else math.nan,
            coeff=fac.xi,
            exponent=n,
        )
    raise QuadError(f"curve of {s} has no separable form with defined factors")


def descended_involution(s: SideLengths, vertex: Vertex, tol: Tolerances = DEFAULT_TOL):
    """The fold involution descended to one coordinate: x -> factor / x.

    At the alpha-delta vertex the involution acts on z, at the gamma-delta
    vertex on w; it exists exactly in the orthodiagonal case.
    """
    factor = involution_factors(s, tol).require(vertex)

    def act(x: complex) -> complex:
        return factor / x

    return factor, act


def root_product_spread(
    s: SideLengths,
    vertex: Vertex = Vertex.ALPHA_DELTA,
    count: int = 100,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """(mean, max deviation) of the two-root product over random fibers.

    For an orthodiagonal quadrilateral the product of the two z-roots of the
    biquadratic over a fixed w is constant in w (and equals the involution
    factor); the deviation quantifies how far a quadrilateral is from that.
    """
    rng = rng or np.random.default_rng(7)
    coeffs = conf_coeffs(s)
    products = []
    for _ in range(count):
        if vertex is Vertex.ALPHA_DELTA:
            w = rng.uniform(-4.0, 4.0)
            a2 = coeffs.c22 * w * w + coeffs.c20
            a0 = coeffs.c02 * w * w + coeffs.c00
        else:
            z = rng.uniform(-4.0, 4.0)
            a2 = coeffs.c22 * z * z + coeffs.c02
            a0 = coeffs.c20 * z * z + coeffs.c00
        if abs(a2) < 1e-9:
            continue
        products.append(a0 / a2)
    arr = np.array(products)
    mean = float(arr.mean())
    return mean, float(np.max(np.abs(arr - mean)))


def _frontal_deltoid_kind(cls: QuadClass) -> bool | None:
    """anti-flag if the quad is a deltoid with apex at the alpha-delta vertex."""
    if cls.tag is QuadTag.DELTOID and cls.apex is Apex.ALPHA_DELTA:
        return bool(cls.anti)
    if cls.tag is QuadTag.ISOGRAM and Apex.ALPHA_DELTA in cls.deltoid_overlap:
        return bool(cls.anti)
    return None


def compatible(
    s1: SideLengths, s2: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> bool:
    """Compatibility of two orthodiagonal quads sharing their alpha-delta vertex.

    True when the involution factors at the shared vertex agree, or when both
    quadrilaterals are deltoids (or both antideltoids) with the shared vertex
    as an apex.
    """
    if not (is_orthodiagonal(s1, tol) and is_orthodiagonal(s2, tol)):
        return False
    cls1, cls2 = classify(s1, tol), classify(s2, tol)
    if QuadTag.TRIVIAL_ALL_RIGHT in (cls1.tag, cls2.tag):
        return False
    front1 = _frontal_deltoid_kind(cls1)
    front2 = _frontal_deltoid_kind(cls2)
    if front1 is not None or front2 is not None:
        return front1 is not None and front1 == front2
    lam1 = involution_factors(s1, tol).lam
    lam2 = involution_factors(s2, tol).lam
    if lam1 is None or lam2 is None:
        return False
    return abs(lam1 - lam2) < tol.tol_class * max(1.0, abs(lam1), abs(lam2))
