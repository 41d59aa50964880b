"""Couplings of two spherical quadrilaterals through a shared dihedral angle.

Two quadrilaterals whose configuration curves share the coordinate z form a
coupling; the joint configuration space is the fiber product of the two
curves over the z-line.  Its projection to the outer coordinates (w1, w2)
is the partial configuration space W.  This module decides when the fiber
product is reducible (the branch sets of the z-projections coincide), when
the coupling is involutive (some component is a two-fold cover of its
W-image), and produces explicit component equations for W in all the cases
needed downstream.  An independent numeric resultant oracle evaluates the
eliminant of the two biquadratics on a projective grid and reads off the
zero set and its multiplicity structure.
"""

from __future__ import annotations

import cmath
import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .elliptic import Family, JacobiModulus, PeriodLattice, is_period, jacobi_cn, jacobi_sn
from .orthodiag import compatible, involution_factors
from .quad import (
    Apex,
    ConfCoeffs,
    ConicParam,
    DeltoidParam,
    EllipticParam,
    LinearParam,
    QuadClass,
    QuadError,
    QuadTag,
    SideLengths,
    branch_data,
    classify,
    conf_coeffs,
    parametrize,
)


class UnsupportedCase(QuadError):
    """No closed-form W equation is provided; use the resultant oracle."""


class ReducibleKind(enum.Enum):
    ELL_PLAIN = "EllPlain"
    ELL_SKEW = "EllSkew"
    CON_PLAIN = "ConPlain"
    CON_SKEW = "ConSkew"
    CON_DELT_PLAIN = "ConDeltPlain"
    CON_DELT_SKEW = "ConDeltSkew"
    DELT_DELT = "DeltDelt"
    DELT_ANTI = "DeltAnti"


class InvolutiveKind(enum.Enum):
    ORTHO_COMPATIBLE = "OrthoCompatible"
    ELL_HALF_PERIOD = "EllHalfPeriod"
    CON_HALF_PERIOD = "ConHalfPeriod"


# ---------------------------------------------------------------------------
# W equations


@dataclass(frozen=True)
class WEquation:
    """One component of W as a polynomial in W1 = w1**e1 and W2 = w2**e2."""

    label: str
    monomials: dict[tuple[int, int], complex]
    exps: tuple[int, int] = (1, 1)

    def eval(self, w1: complex, w2: complex) -> complex:
        W1 = w1 ** self.exps[0]
        W2 = w2 ** self.exps[1]
        return sum(c * W1**i * W2**j for (i, j), c in self.monomials.items())

    def residual(self, w1: complex, w2: complex) -> float:
        W1 = w1 ** self.exps[0]
        W2 = w2 ** self.exps[1]
        value = sum(c * W1**i * W2**j for (i, j), c in self.monomials.items())
        d1 = max(i for i, _ in self.monomials)
        d2 = max(j for _, j in self.monomials)
        scale = max(abs(c) for c in self.monomials.values())
        scale *= max(1.0, abs(W1)) ** d1 * max(1.0, abs(W2)) ** d2
        return abs(value) / scale

    def solve_w2(self, w1: complex) -> list[complex]:
        """Roots w2 of the component at fixed w1."""
        W1 = w1 ** self.exps[0]
        d2 = max(j for _, j in self.monomials)
        coeffs = [0j] * (d2 + 1)
        for (i, j), c in self.monomials.items():
            coeffs[d2 - j] += c * W1**i
        while len(coeffs) > 1 and abs(coeffs[0]) < 1e-13:
            coeffs = coeffs[1:]
        if len(coeffs) <= 1:
            return []
        roots = np.roots(coeffs)
        return [complex(r) ** self.exps[1] for r in roots]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "exps": list(self.exps),
            "monomials": [
                {"i": i, "j": j, "re": c.real, "im": c.imag}
                for (i, j), c in sorted(self.monomials.items())
            ],
        }


def _linear_weq(label: str, c: complex, e1: int = 1, e2: int = 1) -> WEquation:
    """W1 = c * W2."""
    return WEquation(label, {(1, 0): 1.0 + 0j, (0, 1): -c}, (e1, e2))


def _product_weq(label: str, c: complex, e1: int = 1, e2: int = 1) -> WEquation:
    """W1 * W2 = c."""
    return WEquation(label, {(1, 1): 1.0 + 0j, (0, 0): -c}, (e1, e2))


# ---------------------------------------------------------------------------
# classification of the coupling


def fiber_multiplicity(s: SideLengths, tol: Tolerances = DEFAULT_TOL) -> int:
    """Degree of the z-projection of the configuration curve (1 or 2)."""
    cls = classify(s, tol)
    if cls.tag in (QuadTag.ELLIPTIC, QuadTag.CONIC):
        return 2
    if cls.tag is QuadTag.DELTOID:
        return 2 if cls.apex is Apex.ALPHA_DELTA else 1
    return 1  # isograms and the all-right case project one-to-one


def _branch_sets_match(A, B, tol: Tolerances) -> bool:
    if len(A) != len(B) or not A:
        return False
    scale = max(max(abs(x) for x in A), max(abs(x) for x in B), 1e-9)
    rest = list(B)
    for x in A:
        j = min(range(len(rest)), key=lambda i: abs(rest[i] - x))
        if abs(rest[j] - x) > tol.tol_class * max(1.0, scale):
            return False
        rest.pop(j)
    return True


def _close(x: float, y: float, tol: Tolerances) -> bool:
    return abs(x - y) < tol.tol_class * max(1.0, abs(x), abs(y))


def reducible_test(
    s1: SideLengths, s2: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> ReducibleKind | None:
    """Reducibility of the fiber product over the shared z coordinate.

    Both z-projections must be two-fold with coinciding branch sets; the
    kind records how the two parametrizations are identified.
    """
    cls1, cls2 = classify(s1, tol), classify(s2, tol)
    if fiber_multiplicity(s1, tol) != 2 or fiber_multiplicity(s2, tol) != 2:
        return None
    par1, par2 = parametrize(s1, tol), parametrize(s2, tol)
    if not _branch_sets_match(branch_data(par1).A, branch_data(par2).A, tol):
        return None
    t1, t2 = cls1.tag, cls2.tag
    if t1 is QuadTag.ELLIPTIC and t2 is QuadTag.ELLIPTIC:
        if par1.family is par2.family and _close(par1.modulus.k, par2.modulus.k, tol):
            return ReducibleKind.ELL_PLAIN
        if par1.family is Family.CN and par2.family is Family.CN:
            return ReducibleKind.ELL_SKEW
        return None
    if t1 is QuadTag.CONIC and t2 is QuadTag.CONIC:
        return ReducibleKind.CON_PLAIN if par1.m == par2.m else ReducibleKind.CON_SKEW
    if {t1, t2} == {QuadTag.CONIC, QuadTag.DELTOID}:
        delt, con = (par1, par2) if t1 is QuadTag.DELTOID else (par2, par1)
        same = delt.exponent == con.m
        return ReducibleKind.CON_DELT_PLAIN if same else ReducibleKind.CON_DELT_SKEW
    if t1 is QuadTag.DELTOID and t2 is QuadTag.DELTOID:
        if bool(cls1.anti) == bool(cls2.anti):
            return ReducibleKind.DELT_DELT
        return ReducibleKind.DELT_ANTI
    return None


def _half_lattice_member(t: complex, lat: PeriodLattice, tol: Tolerances) -> bool:
    return is_period(2.0 * t, lat, tol)


def strict_ortho_compatible(
    s1: SideLengths, s2: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> bool:
    """Both orthodiagonal with equal, defined involution factors at the shared vertex.

    Unlike the broader compatibility predicate, this excludes frontally
    coupled deltoid pairs: their fold involutions do not descend to the
    shared z-line, so they never make the coupling involutive.
    """
    from .orthodiag import NotOrthodiagonal
    from .quad import is_orthodiagonal

    if not (is_orthodiagonal(s1, tol) and is_orthodiagonal(s2, tol)):
        return False
    cls1, cls2 = classify(s1, tol), classify(s2, tol)
    if QuadTag.TRIVIAL_ALL_RIGHT in (cls1.tag, cls2.tag):
        return False
    lam1 = involution_factors(s1, tol).lam
    lam2 = involution_factors(s2, tol).lam
    if lam1 is None or lam2 is None:
        return False
    return abs(lam1 - lam2) < tol.tol_class * max(1.0, abs(lam1), abs(lam2))


def involutive_test(
    s1: SideLengths, s2: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> InvolutiveKind | None:
    """Whether some fiber-product component double-covers its W-image."""
    if strict_ortho_compatible(s1, s2, tol):
        return InvolutiveKind.ORTHO_COMPATIBLE
    kind = reducible_test(s1, s2, tol)
    if kind is ReducibleKind.ELL_PLAIN:
        par1, par2 = parametrize(s1, tol), parametrize(s2, tol)
        lat = par1.t0.lattice
        t01, t02 = par1.t0.t0, par2.t0.t0
        if _half_lattice_member(t02 - t01, lat, tol) or _half_lattice_member(
            t01 + t02, lat, tol
        ):
            return InvolutiveKind.ELL_HALF_PERIOD
    if kind is ReducibleKind.CON_PLAIN:
        par1, par2 = parametrize(s1, tol), parametrize(s2, tol)
        diff = par2.t0.t0 - par1.t0.t0
        if (
            abs(diff.imag) < tol.tol_period
            and abs(math.remainder(diff.real, math.pi)) < tol.tol_period
        ):
            return InvolutiveKind.CON_HALF_PERIOD
    return None


def ell_half_period_sides(
    s1: SideLengths, s2: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> bool:
    """Side-length form of the elliptic half-period condition (cross-check).

    The phase difference is a half period exactly when the products
    sin(alpha) sin(gamma) of the two quadrilaterals agree after dividing by
    the matching or by the swapped pair of complemented side products.
    """
    from .quad import BarQuantities

    b1, b2 = BarQuantities.of(s1), BarQuantities.of(s2)
    ac1 = math.sin(s1.alpha) * math.sin(s1.gamma) / (
        math.sin(b1.abar) * math.sin(b1.gbar)
    )
    ac2 = math.sin(s2.alpha) * math.sin(s2.gamma) / (
        math.sin(b2.abar) * math.sin(b2.gbar)
    )
    ac2_swapped = math.sin(s2.alpha) * math.sin(s2.gamma) / (
        math.sin(b2.bbar) * math.sin(b2.dbar)
    )
    return _close(ac1, ac2, tol) or _close(ac1, ac2_swapped, tol)


def con_half_period_sides(
    s1: SideLengths, s2: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> bool:
    """Side-length form of the conic zero-shift condition (cross-check)."""
    r1 = math.sin(s1.alpha) / math.sin(s1.beta)
    r2 = math.sin(s2.alpha) / math.sin(s2.beta)
    r3 = math.sin(s1.gamma) / math.sin(s1.delta)
    r4 = math.sin(s2.gamma) / math.sin(s2.delta)
    return _close(r1, r2, tol) and _close(r3, r4, tol)


# ---------------------------------------------------------------------------
# component equations


def _special_shift(
    family: Family, mod: JacobiModulus | None, shift: complex, tol: Tolerances
) -> tuple[str, complex] | None:
    """Express F(u + shift) as c*F(u) ('lin') or c/F(u) ('recip'), if possible."""
    tp = tol.tol_period
    if family is Family.SIN:
        r = math.remainder(shift.real, 2.0 * math.pi)
        if abs(shift.imag) > tp:
            return None
        if abs(r) < tp:
            return ("lin", 1.0 + 0j)
        if abs(abs(r) - math.pi) < tp:
            return ("lin", -1.0 + 0j)
        return None
    assert mod is not None
    lat = PeriodLattice.for_modulus(family, mod)
    if family is Family.SN:
        table = [
            (0j, "lin", 1.0 + 0j),
            (complex(2.0 * mod.K), "lin", -1.0 + 0j),
            (complex(0.0, mod.Kp), "recip", 1.0 / mod.k + 0j),
            (complex(2.0 * mod.K, mod.Kp), "recip", -1.0 / mod.k + 0j),
        ]
    else:
        table = [
            (0j, "lin", 1.0 + 0j),
            (complex(2.0 * mod.K), "lin", -1.0 + 0j),
            (complex(mod.K, mod.Kp), "recip", -1j * mod.kp / mod.k),
            (complex(3.0 * mod.K, mod.Kp), "recip", 1j * mod.kp / mod.k),
        ]
    for center, form, c in table:
        if abs(lat.reduce(shift - center)) < tp:
            return (form, c)
    return None


def _fit_biquadratic(
    label: str, pts: list[tuple[complex, complex]], exps: tuple[int, int]
) -> WEquation:
    """Least-squares fit of a22 W1^2 W2^2 + a20 W1^2 + a02 W2^2 + 2a11 W1W2 + a00."""
    rows = []
    for w1, w2 in pts:
        W1, W2 = w1 ** exps[0], w2 ** exps[1]
        rows.append([W1**2 * W2**2, W1**2, W2**2, W1 * W2, 1.0])
    mat = np.array(rows, dtype=complex)
    _, sv, vh = np.linalg.svd(mat)
    coeffs = vh[-1].conj()
    if sv[-1] > 1e-8 * sv[0]:
        raise UnsupportedCase(
            f"component points of {label} do not lie on a five-term biquadratic"
        )
    a22, a20, a02, a11, a00 = coeffs
    return WEquation(
        label,
        {(2, 2): a22, (2, 0): a20, (0, 2): a02, (1, 1): a11, (0, 0): a00},
        exps,
    )


def _elliptic_component(
    label: str,
    family: Family,
    mod: JacobiModulus,
    q1: complex,
    q2_eff: complex,
    shift: complex,
    tol: Tolerances,
) -> WEquation:
    """Equation of the component w1 = q1 F(u), w2 = q2_eff F(u + shift)."""
    special = _special_shift(family, mod, shift, tol)
    if special is not None:
        form, c = special
        if form == "lin":
            # w2 = c * q2_eff * w1 / q1
            return _linear_weq(label, q1 / (c * q2_eff))
        # w2 = c * q2_eff / (w1 / q1)
        return _product_weq(label, c * q1 * q2_eff)
    fn = jacobi_sn if family is Family.SN else jacobi_cn
    us = np.linspace(0.13, 4.0 * mod.K - 0.11, 24) + 1j * np.linspace(
        -0.3, 0.3, 24
    ) * mod.Kp
    pts = []
    for u in us:
        f0, f1 = fn(u, mod), fn(u + shift, mod)
        w1, w2 = q1 * f0, q2_eff * f1
        if max(abs(w1), abs(w2)) < 1e5:
            pts.append((w1, w2))
    return _fit_biquadratic(label, pts, (1, 1))


def _conic_component(
    label: str, q1: complex, q2: complex, shift: complex, exps: tuple[int, int], tol: Tolerances
) -> WEquation:
    """Equation of W1 = q1 sin(u), W2 = q2 sin(u + shift)."""
    special = _special_shift(Family.SIN, None, shift, tol)
    if special is not None:
        _, c = special
        return _linear_weq(label, q1 / (c * q2), *exps)
    cs, sn = cmath.cos(shift), cmath.sin(shift)
    return WEquation(
        label,
        {
            (2, 0): q2 * q2,
            (0, 2): q1 * q1,
            (1, 1): -2.0 * cs * q1 * q2,
            (0, 0): -(q1 * q2 * sn) ** 2,
        },
        exps,
    )


def _deltoid_A(par: DeltoidParam) -> complex:
    """The circle coordinate is A * exp(i t) with A = sign * sqrt(-factor)."""
    return par.sign * cmath.sqrt(complex(-par.factor))


def _con_skew_component(
    label: str,
    q1: complex,
    t01: complex,
    q2: complex,
    t02: complex,
    eta: float,
    sig: float,
    exps: tuple[int, int],
) -> WEquation:
    """Skew conic component from W1 = a sin t + b cos t, W2 = (c + d cos t)/sin t."""
    a = q1 * cmath.cos(t01)
    b = q1 * cmath.sin(t01)
    c = eta * q2 * cmath.cos(t02)
    d = sig * 1j * q2 * cmath.sin(t02)
    return WEquation(
        label,
        {
            (2, 2): 1.0 + 0j,
            (2, 0): d * d,
            (0, 2): -b * b,
            (1, 1): -2.0 * a * c,
            (1, 0): 2.0 * b * c * d,
            (0, 1): -2.0 * a * b * d,
            (0, 0): a * a * c * c + b * b * c * c - a * a * d * d,
        },
        exps,
    )


def _lateral_exponent(cls: QuadClass) -> int:
    return -1 if cls.anti else 1


def _lateral_coeff(cls: QuadClass, xi: float) -> float:
    """Signed coefficient c in the component relation z + lam/z = c * w^n.

    A lateral deltoid curve splits into the component above plus a line
    component w = infinity (w = 0 for an antideltoid); the sign of c is
    intrinsic to the curve: +xi for a deltoid, -xi for an antideltoid.
    """
    return -xi if cls.anti else xi


def _is_lateral_deltoid(cls: QuadClass) -> bool:
    return cls.tag is QuadTag.DELTOID and cls.apex is Apex.ALPHA_BETA


def _is_frontal_deltoid(cls: QuadClass) -> bool:
    return cls.tag is QuadTag.DELTOID and cls.apex is Apex.ALPHA_DELTA


def _compat_equations(
    s1: SideLengths, s2: SideLengths, tol: Tolerances
) -> list[WEquation]:
    """Quotient equations of a compatible orthodiagonal coupling."""
    cls1, cls2 = classify(s1, tol), classify(s2, tol)
    fac1 = involution_factors(s1, tol)
    fac2 = involution_factors(s2, tol)
    lat1, lat2 = _is_lateral_deltoid(cls1), _is_lateral_deltoid(cls2)
    if lat1 and lat2:
        n1, n2 = _lateral_exponent(cls1), _lateral_exponent(cls2)
        c1 = _lateral_coeff(cls1, fac1.xi)
        c2 = _lateral_coeff(cls2, fac2.xi)
        return [_linear_weq("compat lateral deltoids", c2 / c1, n1, n2)]
    if lat1 != lat2:
        # one lateral deltoid, one plain orthodiagonal quadrilateral
        if lat1:
            fac_p = fac2
            delt_cls, fac_d = cls1, fac1
            flip = True
        else:
            fac_p = fac1
            delt_cls, fac_d = cls2, fac2
            flip = False
        n = _lateral_exponent(delt_cls)
        r = fac_p.nu / _lateral_coeff(delt_cls, fac_d.xi)
        # w_plain + mu_plain / w_plain = r * w_delt^{-n}; multiplied through
        # by w_plain * w_delt^n this reads W_p^2 W_d + mu W_d - r W_p = 0
        # in W_p = w_plain, W_d = w_delt^n
        mono = {(2, 1): 1.0 + 0j, (0, 1): complex(fac_p.mu), (1, 0): -r}
        exps = (1, n)
        if flip:
            mono = {(j, i): c for (i, j), c in mono.items()}
            exps = (n, 1)
        return [WEquation("compat one lateral deltoid", mono, exps)]
    r = fac1.nu / fac2.nu
    # (w1 + mu1/w1) = r (w2 + mu2/w2), cleared of denominators
    return [
        WEquation(
            "compat orthodiagonal quotient",
            {
                (2, 1): 1.0 + 0j,
                (0, 1): complex(fac1.mu),
                (1, 2): -r,
                (1, 0): -r * complex(fac2.mu),
            },
        )
    ]


def _lateral_deltoid_equations(
    s1: SideLengths, s2: SideLengths, tol: Tolerances
) -> list[WEquation]:
    """Components for two laterally coupled deltoids with distinct factors.

    Each curve component satisfies z + lam_i/z = (+-xi_i) W_i; eliminating z
    yields the conic -lam2 X^2 + (lam1+lam2) X Y - lam1 Y^2 = (lam1-lam2)^2
    in X = (+-xi1) W1, Y = (+-xi2) W2.
    """
    cls1, cls2 = classify(s1, tol), classify(s2, tol)
    fac1, fac2 = involution_factors(s1, tol), involution_factors(s2, tol)
    lam1, lam2 = fac1.lam, fac2.lam
    n1, n2 = _lateral_exponent(cls1), _lateral_exponent(cls2)
    x1 = _lateral_coeff(cls1, fac1.xi)
    x2 = _lateral_coeff(cls2, fac2.xi)
    return [
        WEquation(
            "lateral deltoids",
            {
                (2, 0): -lam2 * x1 * x1,
                (1, 1): (lam1 + lam2) * x1 * x2,
                (0, 2): -lam1 * x2 * x2,
                (0, 0): -((lam1 - lam2) ** 2),
            },
            (n1, n2),
        )
    ]


def _delt_conic_equations(
    s_delt: SideLengths,
    s_con: SideLengths,
    kind: ReducibleKind,
    flip: bool,
    tol: Tolerances,
) -> list[WEquation]:
    """Frontal deltoid coupled with a conic over the shared z."""
    pd = parametrize(s_delt, tol)
    pc = parametrize(s_con, tol)
    A = _deltoid_A(pd)
    q2 = pc.q
    n2 = pc.n
    t02 = pc.t0.t0
    eqs = []
    if kind is ReducibleKind.CON_DELT_PLAIN:
        for sign, tag in ((1.0, "+"), (-1.0, "-")):
            sh = sign * t02
            e = cmath.exp(-1j * sh)
            mono = {
                (2, 0): 1.0 + 0j,
                (0, 0): complex(pd.factor) * e * e,
                (1, 1): -2j * A * e / q2,
            }
            exps = (1, n2)
            if flip:
                mono = {(j, i): c for (i, j), c in mono.items()}
                exps = (n2, 1)
            eqs.append(WEquation(f"conic-deltoid plain, shift {tag}", mono, exps))
        return eqs
    # skew: w_delt lives on the circle, the conic runs through 1/sin
    pr = pd.amplitude * pc.p
    eta = 1.0 if abs(pr - 1.0) < abs(pr + 1.0) else -1.0
    for sig, tag in ((1.0, "+"), (-1.0, "-")):
        c2, s2_ = cmath.cos(t02), cmath.sin(t02)
        mono = {
            (2, 1): 1.0 + 0j,
            (0, 1): -A * A,
            (2, 0): sig * q2 * s2_,
            (1, 0): -2j * A * eta * q2 * c2,
            (0, 0): sig * q2 * s2_ * A * A,
        }
        exps = (1, n2)
        if flip:
            mono = {(j, i): c for (i, j), c in mono.items()}
            exps = (n2, 1)
        eqs.append(WEquation(f"conic-deltoid skew, {tag}", mono, exps))
    return eqs


def w_equations(
    s1: SideLengths, s2: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> list[WEquation]:
    """Component equations of the partial configuration space W.

    The two quadrilaterals share the z coordinate; equations relate w1 (the
    other coordinate of the first quadrilateral) to w2 (of the second).
    Raises :class:`UnsupportedCase` for coupling shapes without a stated
    closed form; those are handled by the resultant oracle alone.
    """
    if strict_ortho_compatible(s1, s2, tol):
        return _compat_equations(s1, s2, tol)
    cls1, cls2 = classify(s1, tol), classify(s2, tol)
    kind = reducible_test(s1, s2, tol)
    if kind is None:
        if _is_lateral_deltoid(cls1) and _is_lateral_deltoid(cls2):
            return _lateral_deltoid_equations(s1, s2, tol)
        raise UnsupportedCase(
            f"no closed-form W for coupling of {cls1.tag.value} and {cls2.tag.value}"
        )
    par1, par2 = parametrize(s1, tol), parametrize(s2, tol)
    if kind is ReducibleKind.ELL_PLAIN:
        mod, fam = par1.modulus, par1.family
        t01, t02 = par1.t0.t0, par2.t0.t0
        center = 2.0 * mod.K if fam is Family.SN else 0.0
        comps = [
            ("elliptic plain, direct", par2.q, t02 - t01),
        ]
        refl_shift = -(center + t01 + t02)
        q_eff = -par2.q if fam is Family.SN else par2.q
        comps.append(("elliptic plain, reflected", q_eff, refl_shift))
        return [
            _elliptic_component(label, fam, mod, par1.q, q_eff2, sh, tol)
            for label, q_eff2, sh in comps
        ]
    if kind is ReducibleKind.ELL_SKEW:
        mod1, mod2 = par1.modulus, par2.modulus
        target = par1.p / par2.p
        if abs(target - (-1j) * mod1.k / mod2.k) < abs(target - 1j * mod1.k / mod2.k):
            s0 = complex(mod2.K, mod2.Kp)
        else:
            s0 = complex(3.0 * mod2.K, mod2.Kp)
        eqs = []
        for orient, tag in ((1.0, "+"), (-1.0, "-")):
            ts = np.linspace(0.1, 4.0 * mod1.K - 0.1, 40)
            pts = []
            for t in ts:
                w1 = par1.q * jacobi_cn(t + par1.t0.t0, mod1)
                w2 = par2.q * jacobi_cn(orient * 1j * t + s0 + par2.t0.t0, mod2)
                if max(abs(w1), abs(w2)) < 1e5:
                    pts.append((w1, w2))
            eqs.append(_fit_biquadratic(f"elliptic skew, {tag}", pts, (1, 1)))
        return eqs
    if kind is ReducibleKind.CON_PLAIN:
        t01, t02 = par1.t0.t0, par2.t0.t0
        exps = (par1.n, par2.n)
        return [
            _conic_component(
                "conic plain, direct", par1.q, par2.q, t02 - t01, exps, tol
            ),
            _conic_component(
                "conic plain, reflected", par1.q, par2.q, -(t01 + t02), exps, tol
            ),
        ]
    if kind is ReducibleKind.CON_SKEW:
        pr = par1.p * par2.p
        eta = 1.0 if abs(pr - 1.0) < abs(pr + 1.0) else -1.0
        exps = (par1.n, par2.n)
        return [
            _con_skew_component(
                f"conic skew, {tag}", par1.q, par1.t0.t0, par2.q, par2.t0.t0, eta, sig, exps
            )
            for sig, tag in ((1.0, "+"), (-1.0, "-"))
        ]
    if kind in (ReducibleKind.CON_DELT_PLAIN, ReducibleKind.CON_DELT_SKEW):
        if cls1.tag is QuadTag.DELTOID:
            return _delt_conic_equations(s1, s2, kind, flip=False, tol=tol)
        return _delt_conic_equations(s2, s1, kind, flip=True, tol=tol)
    if kind is ReducibleKind.DELT_DELT:
        A1, A2 = _deltoid_A(par1), _deltoid_A(par2)
        return [
            _linear_weq("frontal deltoids, parallel", A1 / A2),
            _product_weq("frontal deltoids, reversed", -A1 * A2),
        ]
    # DELT_ANTI
    A1, A2 = _deltoid_A(par1), _deltoid_A(par2)
    return [
        WEquation(
            "deltoid-antideltoid, +",
            {(1, 1): 1.0 + 0j, (1, 0): -A2, (0, 1): A1, (0, 0): A1 * A2},
        ),
        WEquation(
            "deltoid-antideltoid, -",
            {(1, 1): 1.0 + 0j, (1, 0): A2, (0, 1): -A1, (0, 0): A1 * A2},
        ),
    ]


# ---------------------------------------------------------------------------
# the coupling report


@dataclass(frozen=True)
class CouplingReport:
    """Full verdict on a coupling sharing the z coordinate."""

    s1: SideLengths
    s2: SideLengths
    multiplicities: tuple[int, int]
    reducible: ReducibleKind | None
    involutive: InvolutiveKind | None
    w_components: tuple[WEquation, ...]
    w_unsupported: str | None = None

    def to_dict(self) -> dict:
        return {
            "first": self.s1.to_dict(),
            "second": self.s2.to_dict(),
            "multiplicities": list(self.multiplicities),
            "reducible": self.reducible.value if self.reducible else None,
            "involutive": self.involutive.value if self.involutive else None,
            "w_components": [eq.to_dict() for eq in self.w_components],
            "w_unsupported": self.w_unsupported,
        }


def analyze_coupling(
    s1: SideLengths, s2: SideLengths, tol: Tolerances = DEFAULT_TOL
) -> CouplingReport:
    """Reducibility, involutivity, and W components of a coupling."""
    kind = reducible_test(s1, s2, tol)
    inv = involutive_test(s1, s2, tol)
    try:
        comps = tuple(w_equations(s1, s2, tol))
        unsupported = None
    except UnsupportedCase as exc:
        comps = ()
        unsupported = str(exc)
    return CouplingReport(
        s1=s1,
        s2=s2,
        multiplicities=(fiber_multiplicity(s1, tol), fiber_multiplicity(s2, tol)),
        reducible=kind,
        involutive=inv,
        w_components=comps,
        w_unsupported=unsupported,
    )


# ---------------------------------------------------------------------------
# numeric resultant oracle


def resultant_value(c1: ConfCoeffs, c2: ConfCoeffs, w1, w2):
    """Eliminant of the two biquadratics in z at (w1, w2); vectorized."""
    A1 = c1.c22 * w1**2 + c1.c20
    B1 = 2.0 * c1.c11 * w1
    C1 = c1.c02 * w1**2 + c1.c00
    A2 = c2.c22 * w2**2 + c2.c20
    B2 = 2.0 * c2.c11 * w2
    C2 = c2.c02 * w2**2 + c2.c00
    return (A1 * C2 - A2 * C1) ** 2 - (A1 * B2 - A2 * B1) * (B1 * C2 - B2 * C1)


@dataclass
class ResultantGrid:
    """Projective-grid evaluation of the resultant of a coupling.

    The angles theta parametrize w = tan(theta), covering the full
    projective w-line including infinity with bounded arithmetic.
    """

    theta1: np.ndarray
    theta2: np.ndarray
    values: np.ndarray

    def zero_mask(self, rel: float = 1e-6) -> np.ndarray:
        scale = np.abs(self.values).max()
        return np.abs(self.values) < rel * scale

    def zero_points(self, rel: float = 1e-4) -> np.ndarray:
        """(w1, w2) pairs at near-zero grid nodes (finite ones only)."""
        mask = self.zero_mask(rel)
        i, j = np.nonzero(mask)
        w1 = np.tan(self.theta1[i])
        w2 = np.tan(self.theta2[j])
        keep = (np.abs(w1) < 1e6) & (np.abs(w2) < 1e6)
        return np.stack([w1[keep], w2[keep]], axis=1)

    def sign_change_fraction(self) -> float:
        """Fraction of near-zero nodes where the value changes sign.

        A squared factor touches zero without crossing, so an involutive
        coupling shows almost no sign changes along its zero set.
        """
        v = self.values
        scale = np.abs(v).max()
        floor = 1e-9 * scale
        flips = np.zeros_like(v, dtype=bool)
        for axis in (0, 1):
            a = np.roll(v, -1, axis=axis)
            f = (v * a < 0) & (np.abs(v) > floor) & (np.abs(a) > floor)
            flips |= f
        near = self.zero_mask(1e-2)
        denom = max(int(near.sum()), 1)
        return float((flips & near).sum()) / denom

    def to_csv(self, path: str, rel: float = 1e-4) -> None:
        pts = self.zero_points(rel)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["w1", "w2"])
            for w1, w2 in pts:
                writer.writerow([f"{w1:.12g}", f"{w2:.12g}"])


def resultant_oracle(
    s1: SideLengths, s2: SideLengths, n: int = 400
) -> ResultantGrid:
    """Evaluate the resultant on an n-by-n projective grid."""
    c1, c2 = conf_coeffs(s1), conf_coeffs(s2)
    th1 = np.linspace(0.0, math.pi, n, endpoint=False) + 0.5 * math.pi / n
    th2 = np.linspace(0.0, math.pi, n, endpoint=False) + 0.5 * math.pi / n
    u1, v1 = np.sin(th1), np.cos(th1)
    u2, v2 = np.sin(th2), np.cos(th2)
    A1 = (c1.c22 * u1**2 + c1.c20 * v1**2)[:, None]
    B1 = (2.0 * c1.c11 * u1 * v1)[:, None]
    C1 = (c1.c02 * u1**2 + c1.c00 * v1**2)[:, None]
    A2 = (c2.c22 * u2**2 + c2.c20 * v2**2)[None, :]
    B2 = (2.0 * c2.c11 * u2 * v2)[None, :]
    C2 = (c2.c02 * u2**2 + c2.c00 * v2**2)[None, :]
    vals = (A1 * C2 - A2 * C1) ** 2 - (A1 * B2 - A2 * B1) * (B1 * C2 - B2 * C1)
    return ResultantGrid(theta1=th1, theta2=th2, values=vals)


def _resultant_poly_w2(c1: ConfCoeffs, c2: ConfCoeffs, w1: float) -> np.ndarray:
    """Coefficients (degree 4 down to 0) of the resultant as polynomial in w2.

    The resultant is evaluated at five nodes and interpolated; this is exact
    because its w2-degree is at most four.
    """
    xs = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    ys = np.array([resultant_value(c1, c2, w1, x) for x in xs])
    return np.polyfit(xs, ys, 4)


def resultant_roots_w2(
    s1: SideLengths, s2: SideLengths, w1: float
) -> list[float]:
    """Real w2 roots of the resultant at a fixed w1, via exact interpolation."""
    coeffs = _resultant_poly_w2(conf_coeffs(s1), conf_coeffs(s2), w1)
    if max(abs(c) for c in coeffs[:-1]) < 1e-14:
        return []
    roots = np.roots(coeffs)
    return sorted(float(r.real) for r in roots if abs(r.imag) < 1e-8)


def involutive_oracle(
    s1: SideLengths, s2: SideLengths, lines: int = 61
) -> bool:
    """Numeric multiplicity test: does the resultant carry a doubled component?

    Along each line w1 = const the resultant restricts to a quartic in w2;
    on a component traced with multiplicity two its root is a double root of
    that quartic on almost every line.  A double real root perturbs into a
    close pair (real or conjugate), so root clustering detects it.  Isolated
    crossings or tangencies of simple components touch only finitely many
    lines and stay below the fraction threshold.
    """
    c1, c2 = conf_coeffs(s1), conf_coeffs(s2)
    thetas = np.linspace(-0.5 * math.pi, 0.5 * math.pi, lines + 2)[1:-1]
    doubled = 0
    informative = 0
    for th in thetas:
        w1 = math.tan(th)
        if abs(w1) > 50.0:
            continue
        coeffs = _resultant_poly_w2(c1, c2, w1)
        scale = max(abs(c) for c in coeffs)
        if scale < 1e-16:
            continue
        coeffs = coeffs / scale
        if abs(coeffs[0]) < 1e-10:
            coeffs = coeffs[1:]
        if len(coeffs) < 3:
            continue
        roots = np.roots(coeffs)
        real_roots = [r for r in roots if abs(r.imag) < 1e-4 * max(1.0, abs(r))]
        if not real_roots:
            continue
        informative += 1
        found = False
        for i in range(len(roots)):
            for j in range(i + 1, len(roots)):
                pair_sep = abs(roots[i] - roots[j])
                center = 0.5 * (roots[i] + roots[j])
                if (
                    pair_sep < 1e-4 * max(1.0, abs(center))
                    and abs(center.imag) < 1e-4 * max(1.0, abs(center))
                ):
                    found = True
        if found:
            doubled += 1
    if informative == 0:
        return False
    return doubled / informative > 0.5


def coupling_points(
    s1: SideLengths,
    s2: SideLengths,
    count: int = 200,
    rng: np.random.Generator | None = None,
) -> list[tuple[complex, complex]]:
    """Points of the full fiber product, sampled through the shared z.

    The first curve is sampled by its parametrization; for each z value the
    second biquadratic is solved for its w roots, so every component of the
    coupling is represented.
    """
    from .quad import sample_parameters

    rng = rng or np.random.default_rng(11)
    par1 = parametrize(s1)
    c2 = conf_coeffs(s2)
    pts = []
    for t in sample_parameters(par1, count, rng):
        try:
            z, w1 = par1.eval(t)
        except (ValueError, ZeroDivisionError):
            continue
        if not (1e-8 < abs(z) < 1e8) or abs(w1) > 1e8:
            continue
        for w2 in c2.solve_w(z):
            # the lower bound drops the line component w = 0 of a lateral
            # antideltoid (the upper one drops w = infinity of a deltoid)
            if 1e-8 < abs(w2) < 1e8:
                pts.append((w1, w2))
    return pts
