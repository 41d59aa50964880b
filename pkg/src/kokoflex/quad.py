"""Spherical quadrilaterals and their configuration curves.

A spherical four-bar linkage with side lengths (alpha, beta, gamma, delta)
has a configuration space cut out by a biquadratic in z = tan(phi/2) and
w = tan(psi/2), where phi is the angle at the vertex between sides alpha
and delta and psi the angle between gamma and delta.  This module
classifies the quadrilateral by the solution structure of the sign
equation alpha +- beta +- gamma +- delta = 0 (mod 2*pi), produces the
biquadratic coefficients, and parametrizes the curve by linear, circular,
sine, or Jacobi-elliptic functions depending on the class, together with
branch sets and the fold involutions of the two projections.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .elliptic import (
    Family,
    JacobiModulus,
    PeriodLattice,
    PhaseShift,
    SigmaSide,
    SignPQ,
    conic_shift,
    invert_dn,
    jacobi_cn,
    jacobi_sn,
)

TWO_PI = 2.0 * math.pi


class QuadError(ValueError):
    """Invalid side lengths or unsupported request."""


class AmbiguousNearDegenerate(QuadError):
    """A sign-equation margin falls in the dead zone between exact and clear."""


class NoNontrivialComponent(QuadError):
    """The all-right-angle quadrilateral has only trivial curve components."""


@dataclass(frozen=True)
class SideLengths:
    """Side lengths of a spherical quadrilateral, in cyclic order, radians."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "delta": self.delta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SideLengths":
        return cls(float(d["alpha"]), float(d["beta"]), float(d["gamma"]), float(d["delta"]))

    # transforms -----------------------------------------------------------

    def switch_z(self) -> "SideLengths":
        """Complement the two sides at the z end; on the curve z -> -1/z."""
        return SideLengths(math.pi - self.alpha, math.pi - self.beta, self.gamma, self.delta)

    def switch_w(self) -> "SideLengths":
        """Complement the two sides at the w end; on the curve w -> -1/w."""
        return SideLengths(self.alpha, math.pi - self.beta, math.pi - self.gamma, self.delta)

    def swap_zw(self) -> "SideLengths":
        """Exchange the roles of z and w (alpha <-> gamma)."""
        return SideLengths(self.gamma, self.beta, self.alpha, self.delta)


def validate_sides(s: SideLengths) -> str | None:
    """None if the sides bound a nondegenerate quadrilateral, else a report."""
    names = ("alpha", "beta", "gamma", "delta")
    sides = s.as_tuple()
    for name, x in zip(names, sides):
        if not 0.0 < x < math.pi:
            return f"{name} = {x} outside (0, pi)"
    total = sum(sides)
    for name, x in zip(names, sides):
        rest = total - x
        if not rest - x > 0.0:
            return f"{name} = {x} >= sum of the other sides {rest}"
        if not rest < x + TWO_PI:
            return f"sum of sides opposite {name} = {rest} >= {name} + 2*pi"
    return None


def require_valid(s: SideLengths) -> None:
    report = validate_sides(s)
    if report is not None:
        raise QuadError(report)


@dataclass(frozen=True)
class BarQuantities:
    """Half perimeter, complemented sides, and the modulus ratio M."""

    sigma: float
    abar: float
    bbar: float
    gbar: float
    dbar: float
    M: float

    @classmethod
    def of(cls, s: SideLengths) -> "BarQuantities":
        sigma = 0.5 * sum(s.as_tuple())
        abar = sigma - s.alpha
        bbar = sigma - s.beta
        gbar = sigma - s.gamma
        dbar = sigma - s.delta
        M = (
            math.sin(s.alpha) * math.sin(s.beta) * math.sin(s.gamma) * math.sin(s.delta)
        ) / (math.sin(abar) * math.sin(bbar) * math.sin(gbar) * math.sin(dbar))
        return cls(sigma, abar, bbar, gbar, dbar, M)


# ---------------------------------------------------------------------------
# sign-equation analysis and quad classes


#: sign patterns for (beta, gamma, delta); the alpha sign is fixed to +.
_SIGN_PATTERNS = [
    (sb, sc, sd) for sb in (1, -1) for sc in (1, -1) for sd in (1, -1)
]


def _mod_2pi_margin(x: float) -> float:
    """Distance from x to the nearest multiple of 2*pi."""
    r = math.remainder(x, TWO_PI)
    return abs(r)


def grashof_solutions(
    s: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> list[tuple[int, int, int]]:
    """Sign patterns (on beta, gamma, delta) solving the sign equation.

    Raises :class:`AmbiguousNearDegenerate` when a margin falls between the
    exact threshold and 1e-6, where rounding either way would be a guess.
    """
    sols = []
    for sb, sc, sd in _SIGN_PATTERNS:
        v = s.alpha + sb * s.beta + sc * s.gamma + sd * s.delta
        margin = _mod_2pi_margin(v)
        if margin < tol.tol_angle:
            sols.append((sb, sc, sd))
        elif margin < 1e-6:
            raise AmbiguousNearDegenerate(
                f"sign pattern (+,{sb},{sc},{sd}) has margin {margin:.3e}"
            )
    return sols


class QuadTag(enum.Enum):
    ELLIPTIC = "Elliptic"
    CONIC = "Conic"
    DELTOID = "Deltoid"
    ISOGRAM = "Isogram"
    TRIVIAL_ALL_RIGHT = "TrivialAllRight"


class Apex(enum.Enum):
    ALPHA_DELTA = "AlphaDelta"
    ALPHA_BETA = "AlphaBeta"


@dataclass(frozen=True)
class QuadClass:
    """Configuration-curve class of a quadrilateral."""

    tag: QuadTag
    m_gt_1: bool | None = None
    m: int | None = None
    n: int | None = None
    apex: Apex | None = None
    anti: bool | None = None
    is_orthodiagonal: bool = False
    #: apices present when an (anti)isogram is also an (anti)deltoid
    deltoid_overlap: tuple[Apex, ...] = ()

    def to_dict(self) -> dict:
        d: dict = {"tag": self.tag.value, "is_orthodiagonal": self.is_orthodiagonal}
        if self.m_gt_1 is not None:
            d["M_gt_1"] = self.m_gt_1
        if self.m is not None:
            d["m"] = self.m
        if self.n is not None:
            d["n"] = self.n
        if self.apex is not None:
            d["apex"] = self.apex.value
        if self.anti is not None:
            d["anti"] = self.anti
        if self.deltoid_overlap:
            d["deltoid_overlap"] = [a.value for a in self.deltoid_overlap]
        return d


def _is_zero_mod_pi_sin(x: float, tol: float) -> bool:
    return abs(math.sin(x)) < tol


def is_orthodiagonal(s: SideLengths, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Whether the diagonals are perpendicular.

    Both equivalent forms are computed; they must agree.
    """
    a, b, g, d = s.as_tuple()
    by_cos = math.cos(a) * math.cos(g) - math.cos(b) * math.cos(d)
    bars = BarQuantities.of(s)
    by_sin = math.sin(bars.abar) * math.sin(bars.gbar) - math.sin(bars.bbar) * math.sin(
        bars.dbar
    )
    res_cos = abs(by_cos) < tol.tol_angle
    res_sin = abs(by_sin) < tol.tol_angle
    if res_cos != res_sin and min(abs(by_cos), abs(by_sin)) > 1e-8:
        raise QuadError(
            f"orthodiagonality checks disagree: cos form {by_cos}, sin form {by_sin}"
        )
    return res_cos or res_sin


def classify(s: SideLengths, tol: Tolerances = DEFAULT_TOL) -> QuadClass:
    """Curve class per the solution structure of the sign equation."""
    require_valid(s)
    a, b, g, d = s.as_tuple()
    ortho = is_orthodiagonal(s, tol)
    if all(abs(x - math.pi / 2) < 1e-12 for x in s.as_tuple()):
        return QuadClass(QuadTag.TRIVIAL_ALL_RIGHT, is_orthodiagonal=True)
    sols = grashof_solutions(s, tol)
    if not sols:
        M = BarQuantities.of(s).M
        return QuadClass(QuadTag.ELLIPTIC, m_gt_1=M > 1.0, is_orthodiagonal=ortho)
    if len(sols) == 1:
        mn = {
            (-1, 1, -1): (1, 1),
            (1, -1, -1): (1, -1),
            (-1, -1, 1): (-1, 1),
            (1, 1, 1): (-1, -1),
        }.get(sols[0])
        if mn is None:
            raise QuadError(f"single sign solution {sols[0]} has an odd sign count")
        return QuadClass(QuadTag.CONIC, m=mn[0], n=mn[1], is_orthodiagonal=ortho)

    # two or more solutions: pairs of equal or complementary sides
    ta = tol.tol_angle
    iso = _is_zero_mod_pi_sin(a - g, ta) and _is_zero_mod_pi_sin(b - d, ta)
    antiiso = _is_zero_mod_pi_sin(a + g, ta) and _is_zero_mod_pi_sin(b + d, ta)
    delt_ad = _is_zero_mod_pi_sin(a - d, ta) and _is_zero_mod_pi_sin(b - g, ta)
    adelt_ad = _is_zero_mod_pi_sin(a + d, ta) and _is_zero_mod_pi_sin(b + g, ta)
    delt_ab = _is_zero_mod_pi_sin(a - b, ta) and _is_zero_mod_pi_sin(g - d, ta)
    adelt_ab = _is_zero_mod_pi_sin(a + b, ta) and _is_zero_mod_pi_sin(g + d, ta)
    overlap = []
    if delt_ad or adelt_ad:
        overlap.append(Apex.ALPHA_DELTA)
    if delt_ab or adelt_ab:
        overlap.append(Apex.ALPHA_BETA)
    if iso or antiiso:
        return QuadClass(
            QuadTag.ISOGRAM,
            anti=antiiso and not iso,
            is_orthodiagonal=ortho,
            deltoid_overlap=tuple(overlap),
        )
    if delt_ad or adelt_ad:
        return QuadClass(
            QuadTag.DELTOID, apex=Apex.ALPHA_DELTA, anti=adelt_ad, is_orthodiagonal=True
        )
    if delt_ab or adelt_ab:
        return QuadClass(
            QuadTag.DELTOID, apex=Apex.ALPHA_BETA, anti=adelt_ab, is_orthodiagonal=True
        )
    raise QuadError(
        f"{len(sols)} sign solutions but no equal/complementary side pairs: {s}"
    )


# ---------------------------------------------------------------------------
# configuration-curve coefficients


@dataclass(frozen=True)
class ConfCoeffs:
    """Coefficients of c22 z^2 w^2 + c20 z^2 + c02 w^2 + 2 c11 z w + c00."""

    c22: float
    c20: float
    c02: float
    c11: float
    c00: float

    def eval(self, z: complex, w: complex) -> complex:
        return (
            self.c22 * z * z * w * w
            + self.c20 * z * z
            + self.c02 * w * w
            + 2.0 * self.c11 * z * w
            + self.c00
        )

    def eval_angles(self, phi: float, psi: float) -> float:
        """The biquadratic with tan-half denominators cleared; smooth on angles."""
        sz, cz = math.sin(0.5 * phi), math.cos(0.5 * phi)
        sw, cw = math.sin(0.5 * psi), math.cos(0.5 * psi)
        return (
            self.c22 * (sz * sw) ** 2
            + self.c20 * (sz * cw) ** 2
            + self.c02 * (cz * sw) ** 2
            + 2.0 * self.c11 * sz * cz * sw * cw
            + self.c00 * (cz * cw) ** 2
        )

    def scale(self) -> float:
        return max(
            abs(self.c22), abs(self.c20), abs(self.c02), abs(self.c11), abs(self.c00)
        )

    def solve_z(self, w: complex) -> list[complex]:
        """Roots in z of the biquadratic at fixed w."""
        a2 = self.c22 * w * w + self.c20
        a1 = 2.0 * self.c11 * w
        a0 = self.c02 * w * w + self.c00
        if abs(a2) < 1e-14:
            return [] if abs(a1) < 1e-14 else [-a0 / a1]
        disc = cmath.sqrt(a1 * a1 - 4.0 * a2 * a0)
        return [(-a1 + disc) / (2.0 * a2), (-a1 - disc) / (2.0 * a2)]

    def solve_w(self, z: complex) -> list[complex]:
        a2 = self.c22 * z * z + self.c02
        a1 = 2.0 * self.c11 * z
        a0 = self.c20 * z * z + self.c00
        if abs(a2) < 1e-14:
            return [] if abs(a1) < 1e-14 else [-a0 / a1]
        disc = cmath.sqrt(a1 * a1 - 4.0 * a2 * a0)
        return [(-a1 + disc) / (2.0 * a2), (-a1 - disc) / (2.0 * a2)]


def conf_coeffs(s: SideLengths) -> ConfCoeffs:
    """Biquadratic coefficients in the half-perimeter (bar) form."""
    bars = BarQuantities.of(s)
    sg, b = bars.sigma, s.beta
    return ConfCoeffs(
        c22=math.sin(bars.dbar) * math.sin(sg - b - s.delta),
        c20=math.sin(bars.abar) * math.sin(sg - b - s.alpha),
        c02=math.sin(bars.gbar) * math.sin(sg - b - s.gamma),
        c11=-math.sin(s.alpha) * math.sin(s.gamma),
        c00=math.sin(bars.bbar) * math.sin(sg),
    )


def conf_coeffs_halfangle(s: SideLengths) -> ConfCoeffs:
    """Same coefficients from the half-angle product formulas (cross-check)."""
    a, b, g, d = s.as_tuple()
    return ConfCoeffs(
        c22=math.sin((a + b + g - d) / 2) * math.sin((a - b + g - d) / 2),
        c20=math.sin((a - b - g - d) / 2) * math.sin((a + b - g - d) / 2),
        c02=math.sin((a + b - g + d) / 2) * math.sin((a - b - g + d) / 2),
        c11=-math.sin(a) * math.sin(g),
        c00=math.sin((a - b + g + d) / 2) * math.sin((a + b + g + d) / 2),
    )


# ---------------------------------------------------------------------------
# parametrizations


def _sqrt_conv(x: float) -> complex:
    """Square root with values in the closed positive real or imaginary axis."""
    if x >= 0.0:
        return complex(math.sqrt(x))
    return complex(0.0, math.sqrt(-x))


def _sign_class(p: complex, q: complex) -> SignPQ:
    pq = p * q
    if abs(pq.imag) > abs(pq.real):
        return SignPQ.ImagPos
    return SignPQ.RealPos if pq.real > 0 else SignPQ.RealNeg


def _sin_ratio(x: float, y: float) -> float:
    """sin(x+y)/sin(x-y), the overflow-safe form of (tan x + tan y)/(tan x - tan y)."""
    return math.sin(x + y) / math.sin(x - y)


@dataclass(frozen=True)
class LinearParam:
    """Components z = kappa*w (anti=True) or z = 1/(kappa*w) (anti=False)."""

    kappas: tuple[float, ...]
    anti: bool
    trivial_components: tuple[str, ...] = ()

    def eval(self, t: complex, branch: int = 0) -> tuple[complex, complex]:
        # parameter is w itself
        w = t
        k = self.kappas[branch]
        z = k * w if self.anti else 1.0 / (k * w)
        return z, w


@dataclass(frozen=True)
class DeltoidParam:
    """One-parameter circle/sine parametrization of an (anti)deltoid curve."""

    apex: Apex
    exponent: int  # m for apex alpha-delta, n for apex alpha-beta
    amplitude: complex  # p or q
    factor: float  # mu (apex alpha-delta) or lambda (apex alpha-beta)
    sign: int  # epsilon or iota

    def eval(self, t: complex) -> tuple[complex, complex]:
        circ = self.sign * cmath.sqrt(complex(-self.factor)) * cmath.exp(1j * t)
        lin = self.amplitude * cmath.sin(t)
        if self.exponent == -1:
            lin = 1.0 / lin
        if self.apex is Apex.ALPHA_DELTA:
            return lin, circ
        return circ, lin


@dataclass(frozen=True)
class ConicParam:
    """z^m = p sin(t), w^n = q sin(t + t0) with complex phase shift t0."""

    m: int
    n: int
    p: complex
    q: complex
    t0: PhaseShift
    sigma_eff: float

    def eval(self, t: complex) -> tuple[complex, complex]:
        z = self.p * cmath.sin(t)
        w = self.q * cmath.sin(t + self.t0.t0)
        if self.m == -1:
            z = 1.0 / z
        if self.n == -1:
            w = 1.0 / w
        return z, w


@dataclass(frozen=True)
class EllipticParam:
    """z = p F(t), w = q F(t + t0) with F = sn or cn."""

    family: Family
    modulus: JacobiModulus
    p: complex
    q: complex
    t0: PhaseShift

    def _f(self, t: complex) -> complex:
        if self.family is Family.SN:
            return jacobi_sn(t, self.modulus)
        return jacobi_cn(t, self.modulus)

    def eval(self, t: complex) -> tuple[complex, complex]:
        return self.p * self._f(t), self.q * self._f(t + self.t0.t0)


Parametrization = LinearParam | DeltoidParam | ConicParam | EllipticParam


def parametrize(s: SideLengths, tol: Tolerances = DEFAULT_TOL) -> Parametrization:
    """Parametrization of the nontrivial configuration-curve component(s)."""
    cls = classify(s, tol)
    a, b, g, d = s.as_tuple()
    if cls.tag is QuadTag.TRIVIAL_ALL_RIGHT:
        raise NoNontrivialComponent("all-right-angle quadrilateral")
    if cls.tag is QuadTag.ISOGRAM:
        kappas = []
        if abs(math.sin((a - b) / 2)) > tol.tol_angle:
            kappas.append(math.sin((a - b) / 2) / math.sin((a + b) / 2))
        if abs(math.cos((a + b) / 2)) > tol.tol_angle:
            kappas.append(math.cos((a - b) / 2) / math.cos((a + b) / 2))
        trivial = ()
        if len(kappas) == 1:
            trivial = ("z=0", "w=inf") if cls.anti else ("z=0", "w=0")
        return LinearParam(tuple(kappas), anti=bool(cls.anti), trivial_components=trivial)
    if cls.tag is QuadTag.DELTOID:
        if cls.apex is Apex.ALPHA_DELTA:
            p = _sqrt_conv(math.sin(d) ** 2 / math.sin(g) ** 2 - 1.0)
            m = -1 if cls.anti else 1
            mu = _sin_ratio(d, g)
            eps = m if g + d > math.pi else -m
            return DeltoidParam(Apex.ALPHA_DELTA, m, p, mu, eps)
        q = _sqrt_conv(math.sin(d) ** 2 / math.sin(a) ** 2 - 1.0)
        n = -1 if cls.anti else 1
        lam = _sin_ratio(d, a)
        iota = n if a + d > math.pi else -n
        return DeltoidParam(Apex.ALPHA_BETA, n, q, lam, iota)
    sa, sb, sg, sd = (math.sin(x) for x in (a, b, g, d))
    if cls.tag is QuadTag.CONIC:
        p = _sqrt_conv(sa * sd / (sb * sg) - 1.0)
        q = _sqrt_conv(sg * sd / (sa * sb) - 1.0)
        r = math.sqrt(sb * sd / (sa * sg))
        if (cls.m, cls.n) == (1, 1):
            sigma_eff = (a + b + g + d) / 2
        elif (cls.m, cls.n) == (1, -1):
            sigma_eff = (-a + b + g - d) / 2 + math.pi
        elif (cls.m, cls.n) == (-1, 1):
            sigma_eff = (a + b - g - d) / 2 + math.pi
        else:
            sigma_eff = (-a + b - g + d) / 2 + math.pi
        side = SigmaSide.Below if sigma_eff < math.pi else SigmaSide.Above
        t0 = conic_shift(r, _sign_class(p, q), side)
        return ConicParam(cls.m, cls.n, p, q, t0, sigma_eff)
    # elliptic
    bars = BarQuantities.of(s)
    ra = sa / math.sin(bars.abar)
    rc = sg / math.sin(bars.gbar)
    rd = sd / math.sin(bars.dbar)
    p = _sqrt_conv(ra * rd - 1.0)
    q = _sqrt_conv(rc * rd - 1.0)
    side = SigmaSide.Below if bars.sigma < math.pi else SigmaSide.Above
    if bars.M < 1.0:
        mod = JacobiModulus.from_k(math.sqrt(1.0 - bars.M))
        dn0 = math.sqrt(ra * rc)
        family = Family.SN
    else:
        mod = JacobiModulus.from_k(math.sqrt(1.0 - 1.0 / bars.M))
        dn0 = math.sqrt(1.0 / (ra * rc))
        family = Family.CN
    t0 = invert_dn(complex(dn0), mod, _sign_class(p, q), side, family)
    return EllipticParam(family, mod, p, q, t0)


# ---------------------------------------------------------------------------
# branch data


@dataclass(frozen=True)
class Involution:
    """Affine involution t -> center - t of the parameter domain."""

    center: complex

    def __call__(self, t: complex) -> complex:
        return self.center - t


@dataclass(frozen=True)
class BranchData:
    """Branch sets of the two projections and their fold involutions."""

    A: tuple[complex, ...]
    B: tuple[complex, ...]
    involution_i: Involution | None
    involution_j: Involution | None


def branch_data(param: Parametrization) -> BranchData:
    if isinstance(param, LinearParam):
        return BranchData((), (), None, None)
    if isinstance(param, DeltoidParam):
        amp = param.amplitude if param.exponent == 1 else 1.0 / param.amplitude
        inv = Involution(complex(math.pi))
        if param.apex is Apex.ALPHA_DELTA:
            return BranchData((amp, -amp), (), inv, None)
        return BranchData((), (amp, -amp), None, inv)
    if isinstance(param, ConicParam):
        pa = param.p if param.m == 1 else 1.0 / param.p
        qa = param.q if param.n == 1 else 1.0 / param.q
        return BranchData(
            (pa, -pa),
            (qa, -qa),
            Involution(complex(math.pi)),
            Involution(math.pi - 2.0 * param.t0.t0),
        )
    k = param.modulus.k
    kp = param.modulus.kp
    K = param.modulus.K
    p, q = param.p, param.q
    if param.family is Family.SN:
        return BranchData(
            (p, -p, p / k, -p / k),
            (q, -q, q / k, -q / k),
            Involution(complex(2.0 * K)),
            Involution(2.0 * K - 2.0 * param.t0.t0),
        )
    return BranchData(
        (p, -p, 1j * p * kp / k, -1j * p * kp / k),
        (q, -q, 1j * q * kp / k, -1j * q * kp / k),
        Involution(complex(0.0)),
        Involution(-2.0 * param.t0.t0),
    )


# ---------------------------------------------------------------------------
# sampling helpers


def sample_parameters(param: Parametrization, count: int, rng: np.random.Generator):
    """Parameter values spread over the domain, avoiding poles of the curve."""
    if isinstance(param, LinearParam):
        return rng.uniform(-3.0, 3.0, count) + 1j * rng.uniform(-3.0, 3.0, count)
    if isinstance(param, (DeltoidParam, ConicParam)):
        return rng.uniform(0.0, TWO_PI, count) + 1j * rng.uniform(-1.0, 1.0, count)
    lat = param.t0.lattice
    re = rng.uniform(0.0, lat.g1.real, count)
    im = rng.uniform(-0.9, 0.9, count) * param.modulus.Kp
    return re + 1j * im


def parametrization_residual(
    s: SideLengths,
    param: Parametrization,
    count: int = 50,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative residual of sampled curve points in the biquadratic."""
    rng = rng or np.random.default_rng(0)
    coeffs = conf_coeffs(s)
    scale = coeffs.scale()
    worst = 0.0
    branches = range(len(param.kappas)) if isinstance(param, LinearParam) else (None,)
    for branch in branches:
        for t in sample_parameters(param, count, rng):
            if branch is None:
                z, w = param.eval(t)
            else:
                z, w = param.eval(t, branch)
            size = max(abs(z), abs(w))
            if not (1e-6 < size < 1e6):
                continue
            denom = scale * max(1.0, abs(z) ** 2) * max(1.0, abs(w) ** 2)
            worst = max(worst, abs(coeffs.eval(z, w)) / denom)
    return worst
