"""Flexibility classification of Kokotsakis polyhedra with quadrangular base.

A Kokotsakis polyhedron with quadrangular base is encoded by the four
spherical quadrilaterals at the corners of the base.  The classification
theorem says the polyhedron is flexible exactly when, after switching some
boundary strips and rotating the labels, the four quadrilaterals satisfy
the condition list of one of a finite set of classes.  This module tests
every class over all 16 switching masks and 4 rotations and reports a
verdict with the witness quantities of the matched condition list.

Every condition is evaluated with three-valued logic: satisfied below a
tight tolerance, violated above a loose one, undetermined in between.
Membership in a class is a measure-zero condition, so an honest
"undetermined" beats rounding a near-miss either way.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

from .config import DEFAULT_TOL, Tolerances
from .elliptic import EllipticError, Family, PeriodLattice
from .orthodiag import InvolutionFactors, involution_factors
from .quad import (
    Apex,
    BarQuantities,
    ConicParam,
    DeltoidParam,
    EllipticParam,
    LinearParam,
    QuadClass,
    QuadError,
    QuadTag,
    SideLengths,
    classify,
    conf_coeffs,
    is_orthodiagonal,
    parametrize,
    require_valid,
)

TWO_PI = 2.0 * math.pi


class PolyError(ValueError):
    """Invalid Kokotsakis polyhedron data."""


# ---------------------------------------------------------------------------
# the polyhedron and its symmetries


@dataclass(frozen=True)
class KokoPoly:
    """Four corner quadrilaterals of a Kokotsakis polyhedron.

    Each quadrilateral is stored in slot orientation: its alpha and delta
    sides flank the inner dihedral edge shared with the cyclic neighbor
    (z for Q1, Q2 and u for Q3, Q4), its gamma and delta sides flank the
    outer edge (w1 for Q1, Q4 and w2 for Q2, Q3).  The base angles are the
    deltas, so a planar base forces their sum to 2*pi.
    """

    q1: SideLengths
    q2: SideLengths
    q3: SideLengths
    q4: SideLengths

    def quads(self) -> tuple[SideLengths, SideLengths, SideLengths, SideLengths]:
        return (self.q1, self.q2, self.q3, self.q4)

    def delta_sum(self) -> float:
        return sum(q.delta for q in self.quads())

    def to_dict(self) -> dict:
        return {f"q{i + 1}": q.to_dict() for i, q in enumerate(self.quads())}

    @classmethod
    def from_dict(cls, d: dict) -> "KokoPoly":
        return cls(*(SideLengths.from_dict(d[f"q{i + 1}"]) for i in range(4)))


def validate_poly(p: KokoPoly, delta_tol: float = 1e-10) -> None:
    """Raise :class:`PolyError` unless all quads are valid and the base closes."""
    for i, q in enumerate(p.quads()):
        try:
            require_valid(q)
        except QuadError as exc:
            raise PolyError(f"quadrilateral {i + 1}: {exc}") from exc
    gap = abs(p.delta_sum() - TWO_PI)
    if gap > delta_tol:
        raise PolyError(f"base angles sum to 2*pi + {p.delta_sum() - TWO_PI:+.3e}")


#: Switching mask bits, one per interior edge of the polyhedron.
EDGE_Z, EDGE_W2, EDGE_U, EDGE_W1 = 1, 2, 4, 8


def switch_poly(p: KokoPoly, mask: int) -> KokoPoly:
    """Switch the boundary strips crossing the edges selected by the mask.

    Switching an edge complements the two sides of each incident
    quadrilateral that meet at that edge; on the configuration curves it
    acts by x -> -1/x on the shared coordinate.
    """
    q1, q2, q3, q4 = p.quads()
    if mask & EDGE_Z:
        q1, q2 = q1.switch_z(), q2.switch_z()
    if mask & EDGE_W2:
        q2, q3 = q2.switch_w(), q3.switch_w()
    if mask & EDGE_U:
        q3, q4 = q3.switch_z(), q4.switch_z()
    if mask & EDGE_W1:
        q4, q1 = q4.switch_w(), q1.switch_w()
    return KokoPoly(q1, q2, q3, q4)


def rotate_poly(p: KokoPoly) -> KokoPoly:
    """Relabel (Q1, Q2, Q3, Q4) -> (Q2, Q3, Q4, Q1).

    The old outer edges become inner ones and vice versa, so each
    quadrilateral swaps its z and w roles (alpha <-> gamma).
    """
    return KokoPoly(
        p.q2.swap_zw(), p.q3.swap_zw(), p.q4.swap_zw(), p.q1.swap_zw()
    )


# ---------------------------------------------------------------------------
# three-valued condition logic


class Tri(enum.IntEnum):
    NO = 0
    MAYBE = 1
    YES = 2


def _tri(residual: float, tol: Tolerances, yes: float | None = None) -> Tri:
    lo = tol.tol_class if yes is None else yes
    if residual < lo:
        return Tri.YES
    if residual > tol.tol_margin:
        return Tri.NO
    return Tri.MAYBE


def _all(*ts: Tri) -> Tri:
    return Tri(min(ts)) if ts else Tri.YES


def _ang0(x: float) -> float:
    """Distance of x from the nearest multiple of 2*pi."""
    return abs(math.remainder(x, TWO_PI))


def _rel(x: complex, y: complex) -> float:
    return abs(x - y) / max(1.0, abs(x), abs(y))


def _rel_abs(x: complex, y: complex) -> float:
    """Distance up to a global sign, relative."""
    return min(abs(x - y), abs(x + y)) / max(1.0, abs(x), abs(y))


def _jsonable(x):
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, enum.Enum):
        return x.value
    return x


# ---------------------------------------------------------------------------
# per-quadrilateral data


class _QuadInfo:
    """Classification, parametrization, and factors of one quadrilateral."""

    def __init__(self, s: SideLengths, tol: Tolerances):
        self.s = s
        self.tol = tol
        self.cls: QuadClass = classify(s, tol)
        self.bars = BarQuantities.of(s)

    @cached_property
    def par(self):
        return parametrize(self.s, self.tol)

    @cached_property
    def fac(self) -> InvolutionFactors:
        return involution_factors(self.s, self.tol)

    @cached_property
    def ratios(self) -> tuple[float, float, float, float]:
        """Sine ratios (a, b, c, d) of the sides over their complements."""
        b = self.bars
        s = self.s
        return (
            math.sin(s.alpha) / math.sin(b.abar),
            math.sin(s.beta) / math.sin(b.bbar),
            math.sin(s.gamma) / math.sin(b.gbar),
            math.sin(s.delta) / math.sin(b.dbar),
        )

    # structural residuals ------------------------------------------------

    def res_frontal_deltoid(self) -> float:
        s = self.s
        return max(_ang0(s.alpha - s.delta), _ang0(s.beta - s.gamma))

    def res_frontal_antideltoid(self) -> float:
        s = self.s
        return max(_ang0(s.alpha + s.delta - math.pi), _ang0(s.beta + s.gamma - math.pi))

    def res_lateral_deltoid(self) -> float:
        s = self.s
        return max(_ang0(s.alpha - s.beta), _ang0(s.gamma - s.delta))

    def res_lateral_antideltoid(self) -> float:
        s = self.s
        return max(_ang0(s.alpha + s.beta - math.pi), _ang0(s.gamma + s.delta - math.pi))

    def res_isogram(self) -> float:
        s = self.s
        return max(_ang0(s.alpha - s.gamma), _ang0(s.beta - s.delta))

    def res_antiisogram(self) -> float:
        s = self.s
        return max(_ang0(s.alpha + s.gamma - math.pi), _ang0(s.beta + s.delta - math.pi))

    def res_circumscribed(self) -> float:
        s = self.s
        return _ang0(s.alpha + s.gamma - s.beta - s.delta)

    def res_perim_2pi(self) -> float:
        return _ang0(2.0 * self.bars.sigma - TWO_PI)

    def res_orthodiagonal(self) -> float:
        s = self.s
        return abs(
            math.cos(s.alpha) * math.cos(s.gamma)
            - math.cos(s.beta) * math.cos(s.delta)
        )

    def is_elliptic(self) -> bool:
        return self.cls.tag is QuadTag.ELLIPTIC

    def kappas(self) -> tuple[float, ...]:
        par = self.par
        return par.kappas if isinstance(par, LinearParam) else ()


_CheckResult = tuple[Tri, dict]

_NO: _CheckResult = (Tri.NO, {})


def _deltoid_circle(par: DeltoidParam) -> complex:
    """Coefficient A of the circle coordinate A * exp(i t)."""
    return par.sign * cmath.sqrt(complex(-par.factor))


def _circle_component_hits(
    qs: list[SideLengths], par1: DeltoidParam
) -> tuple[int, int]:
    """Count real points of the Q1 circle component that close up the cycle.

    The circle component of a deltoid-type Q1 carries real points along up
    to four lines in the complex parameter plane.  Each real point (z, w1)
    is pushed through Q2 and Q4 and counts as a hit when some pair of real
    roots lies on Q3.  The totals separate a genuinely shared nontrivial
    component from couplings that only meet in complex points.
    """
    a1 = _deltoid_circle(par1)
    c2, c3, c4 = conf_coeffs(qs[1]), conf_coeffs(qs[2]), conf_coeffs(qs[3])
    n3 = max(abs(c3.c22), abs(c3.c20), abs(c3.c02), abs(c3.c11), abs(c3.c00))
    if n3 == 0.0:
        return 0, 0
    hits = tot = 0
    for family in range(4):
        for k in range(-30, 31):
            x = 0.13 * k
            if family == 0:
                t = complex(x, 0.0)
            elif family == 1:
                t = complex(0.0, x)
            elif family == 2:
                t = complex(math.pi / 2, x)
            else:
                t = complex(3 * math.pi / 2, x)
            s = par1.amplitude * cmath.sin(t)
            if abs(s) < 1e-8:
                continue
            z = s if par1.exponent == 1 else 1.0 / s
            w1 = a1 * cmath.exp(1j * t)
            if abs(z.imag) > 1e-9 * (1.0 + abs(z)):
                continue
            if abs(w1.imag) > 1e-9 * (1.0 + abs(w1)):
                continue
            if not (1e-6 < abs(w1) < 1e6) or not (1e-9 < abs(z) < 1e6):
                continue
            w2s = [
                w.real
                for w in c2.solve_w(z.real)
                if abs(w.imag) < 1e-7 * (1.0 + abs(w)) and 1e-6 < abs(w) < 1e6
            ]
            us = [
                u.real
                for u in c4.solve_z(w1.real)
                if abs(u.imag) < 1e-7 * (1.0 + abs(u)) and abs(u) < 1e6
            ]
            if not w2s or not us:
                continue
            tot += 1
            res = min(
                abs(c3.eval(u, w2)) / (n3 * (1.0 + u * u) * (1.0 + w2 * w2))
                for u in us
                for w2 in w2s
            )
            if res < 1e-8:
                hits += 1
    return hits, tot


# ---------------------------------------------------------------------------
# trivial flexions


@dataclass(frozen=True)
class TrivialKind:
    """A motion with some dihedral angles pinned.

    ``states`` maps the coordinates z, w1, w2, u to "moving", "0", "pi",
    or a pinned generic angle value rendered as a float.
    """

    states: dict

    def to_dict(self) -> dict:
        return dict(self.states)


#: biquadratic coefficient pairs that must vanish for each line component
_LINE_COEFFS = {
    ("z", 0.0): ("c02", "c00"),
    ("z", math.pi): ("c22", "c20"),
    ("w", 0.0): ("c20", "c00"),
    ("w", math.pi): ("c22", "c02"),
}

#: coordinate -> ((quad index, role), (quad index, role)); role "z" is the
#: inner slot of the quadrilateral, "w" the outer one
_COORD_QUADS = {
    "z": ((0, "z"), (1, "z")),
    "u": ((2, "z"), (3, "z")),
    "w1": ((0, "w"), (3, "w")),
    "w2": ((1, "w"), (2, "w")),
}

_COORDS = ("z", "w1", "w2", "u")


def _quad_coords(i: int) -> tuple[str, str]:
    """(inner, outer) coordinate names of quadrilateral i (0-based)."""
    return (
        ("z", "w1"),
        ("z", "w2"),
        ("u", "w2"),
        ("u", "w1"),
    )[i]


def _has_line(coeffs, role: str, angle: float, tol: Tolerances) -> Tri:
    names = _LINE_COEFFS[(role if role == "z" else "w", angle)]
    scale = max(coeffs.scale(), 1e-300)
    res = max(abs(getattr(coeffs, n)) for n in names) / scale
    return _tri(res, tol)


def _point_on(coeffs, phi: float, psi: float, tol: Tolerances) -> Tri:
    scale = max(coeffs.scale(), 1e-300)
    return _tri(abs(coeffs.eval_angles(phi, psi)) / scale, tol)


def _trivial_assignment(
    coeffs: list, states: dict, tol: Tolerances
) -> Tri:
    """Whether the frozen/moving pattern is realized by some motion."""
    verdict = Tri.YES
    for i in range(4):
        inner, outer = _quad_coords(i)
        si, so = states[inner], states[outer]
        if si == "moving" and so == "moving":
            # every quadrilateral except the all-right one has a curve
            # component on which both dihedral angles genuinely move
            c = coeffs[i]
            if max(abs(c.c22), abs(c.c20), abs(c.c02), abs(c.c00)) < 1e-12 * max(
                c.scale(), 1e-300
            ):
                return Tri.NO
            continue
        if si == "moving":
            verdict = _all(verdict, _has_line(coeffs[i], "w", so, tol))
        elif so == "moving":
            verdict = _all(verdict, _has_line(coeffs[i], "z", si, tol))
        else:
            verdict = _all(verdict, _point_on(coeffs[i], si, so, tol))
        if verdict is Tri.NO:
            return Tri.NO
    return verdict


def _generic_pin_values(coeffs, role: str, end_angle: float) -> list[float]:
    """Real pinned angles of one coordinate when the other sits at an end.

    Returns the list of real angle solutions x of the biquadratic with the
    ``role`` coordinate frozen at ``end_angle`` (0 or pi); an empty list
    when the restriction is identically zero (a line component, so every
    value works) is distinguished by returning None from the caller side.
    """
    c = coeffs
    if role == "z":
        at_zero = end_angle < 1.0
        a, b = (c.c02, c.c00) if at_zero else (c.c22, c.c20)
    else:
        at_zero = end_angle < 1.0
        a, b = (c.c20, c.c00) if at_zero else (c.c22, c.c02)
    # restriction a*x^2 + b = 0 in the tangent of the half angle
    if abs(a) < 1e-14 * max(abs(a), abs(b), 1e-300):
        return []
    val = -b / a
    if val < 0.0:
        return []
    x = math.sqrt(val)
    return [2.0 * math.atan(x), 2.0 * math.atan(-x)]


def check_trivial(
    p: KokoPoly, tol: Tolerances = DEFAULT_TOL
) -> TrivialKind | None:
    """Detect a motion that pins at least one dihedral angle.

    A pinned angle at 0 or pi needs the incident configuration curves to
    contain the corresponding coordinate line (an (anti)deltoid feature) or
    a matching frozen point; a pinned generic angle can only happen next to
    end-pinned neighbors.  All pin patterns are enumerated.
    """
    verdict, kind = trivial_verdict(p, tol)
    return kind if verdict is Tri.YES else None


def trivial_verdict(
    p: KokoPoly, tol: Tolerances = DEFAULT_TOL
) -> tuple[Tri, TrivialKind | None]:
    """Three-valued version of :func:`check_trivial`."""
    coeffs = [conf_coeffs(q) for q in p.quads()]
    best = Tri.NO
    best_kind = None
    options = ("moving", 0.0, math.pi)
    for sz in options:
        for sw1 in options:
            for sw2 in options:
                for su in options:
                    states = {"z": sz, "w1": sw1, "w2": sw2, "u": su}
                    vals = list(states.values())
                    if "moving" not in vals or all(v == "moving" for v in vals):
                        continue
                    v = _trivial_assignment(coeffs, states, tol)
                    if v > best:
                        best = v
                        best_kind = TrivialKind(
                            {k: ("moving" if s == "moving" else float(s)) for k, s in states.items()}
                        )
                    if best is Tri.YES:
                        return best, best_kind
    # one coordinate pinned at a generic value, its neighbors pinned at ends
    for coord in _COORDS:
        v, kind = _trivial_generic(p, coeffs, coord, tol)
        if v > best:
            best, best_kind = v, kind
        if best is Tri.YES:
            return best, best_kind
    return best, best_kind


def _trivial_generic(
    p: KokoPoly, coeffs, coord: str, tol: Tolerances
) -> tuple[Tri, TrivialKind | None]:
    (ia, ra), (ib, rb) = _COORD_QUADS[coord]
    ends = (0.0, math.pi)
    options = ("moving", 0.0, math.pi)
    best = Tri.NO
    best_kind = None
    for ea in ends:
        for eb in ends:
            # the far coordinates of the two incident quadrilaterals
            far_a = [c for c in _quad_coords(ia) if c != coord][0]
            far_b = [c for c in _quad_coords(ib) if c != coord][0]
            # candidate pinned values of the generic coordinate
            other_role_a = "w" if ra == "z" else "z"
            vals_a = _generic_pin_values(coeffs[ia], other_role_a, ea)
            other_role_b = "w" if rb == "z" else "z"
            vals_b = _generic_pin_values(coeffs[ib], other_role_b, eb)
            for va in vals_a:
                if min((abs(va - vb) for vb in vals_b), default=math.inf) > 1e-8 and (
                    _has_line(coeffs[ib], other_role_b, eb, tol) is not Tri.YES
                ):
                    continue
                if abs(math.sin(va)) < 1e-6:
                    continue  # actually an end pin, covered elsewhere
                # remaining coordinates must move or pin at ends consistently
                others = [c for c in _COORDS if c not in (coord, far_a, far_b)]
                for sfa in options:
                    for sfb in options if far_b != far_a else [None]:
                        states = {coord: va, far_a: ea, far_b: eb}
                        # far_a, far_b are the end-pinned neighbors of coord
                        states[far_a] = ea
                        states[far_b] = eb
                        free = [c for c in _COORDS if c not in states]
                        if not free:
                            continue
                        for sf in options:
                            if sf != "moving" and len(free) == 1:
                                continue
                            trial = dict(states)
                            for c in free:
                                trial[c] = "moving"
                            v = _trivial_check_mixed(coeffs, trial, tol)
                            if v > best:
                                best = v
                                best_kind = TrivialKind(
                                    {
                                        k: ("moving" if s == "moving" else float(s))
                                        for k, s in trial.items()
                                    }
                                )
                            if best is Tri.YES:
                                return best, best_kind
                        break
                    break
    return best, best_kind


def _trivial_check_mixed(coeffs, states: dict, tol: Tolerances) -> Tri:
    """Assignment check that allows generic pinned values."""
    verdict = Tri.YES
    for i in range(4):
        inner, outer = _quad_coords(i)
        si, so = states[inner], states[outer]
        moving_i = si == "moving"
        moving_o = so == "moving"
        if moving_i and moving_o:
            continue
        if moving_i:
            if float(so) in (0.0, math.pi):
                verdict = _all(verdict, _has_line(coeffs[i], "z", float(so), tol))
            else:
                return Tri.NO
        elif moving_o:
            if float(si) in (0.0, math.pi):
                verdict = _all(verdict, _has_line(coeffs[i], "w", float(si), tol))
            else:
                return Tri.NO
        else:
            verdict = _all(verdict, _point_on(coeffs[i], float(si), float(so), tol))
        if verdict is Tri.NO:
            return Tri.NO
    return verdict


# ---------------------------------------------------------------------------
# class checks
#
# All checks see the quadrilaterals in slot orientation.  The inner
# amplitudes p_i live at the alpha-delta vertices, the outer amplitudes
# q_i at the gamma-delta vertices, so the interior edges carry the
# amplitude pairs (p1, p2), (q2, q3), (p3, p4), (q4, q1).


def _check_orthodiagonal_involutive(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    from .orthodiag import compatible

    t = Tri.YES
    for qi in q:
        if qi.cls.tag is QuadTag.TRIVIAL_ALL_RIGHT:
            return _NO
        t = _all(t, _tri(qi.res_orthodiagonal(), tol))
        if t is Tri.NO:
            return _NO
    s1, s2, s3, s4 = (qi.s for qi in q)
    pairs = [
        (s1, s2),
        (s2.swap_zw(), s3.swap_zw()),
        (s3, s4),
        (s4.swap_zw(), s1.swap_zw()),
    ]
    for a, b in pairs:
        if not compatible(a, b, tol):
            return _NO
    base = _rel(
        math.cos(s1.delta) * math.cos(s3.delta),
        math.cos(s2.delta) * math.cos(s4.delta),
    )
    t = _all(t, _tri(base, tol))
    wit = {
        "cos_delta_products": [
            math.cos(s1.delta) * math.cos(s3.delta),
            math.cos(s2.delta) * math.cos(s4.delta),
        ]
    }
    for i, qi in enumerate(q):
        try:
            wit[f"lambda_{i + 1}"] = qi.fac.lam
            wit[f"mu_{i + 1}"] = qi.fac.mu
        except QuadError:
            pass
    return t, wit


def _check_orthodiagonal_antiinvolutive(
    q: list[_QuadInfo], tol: Tolerances
) -> _CheckResult:
    t = Tri.YES
    for qi in q:
        if not qi.is_elliptic():
            return _NO
        t = _all(t, _tri(qi.res_orthodiagonal(), tol))
        if t is Tri.NO:
            return _NO
    try:
        facs = [qi.fac for qi in q]
    except QuadError:
        return _NO
    if any(f.lam is None or f.mu is None or f.nu is None for f in facs):
        return _NO
    lam = [f.lam for f in facs]
    mu = [f.mu for f in facs]
    nu = [f.nu for f in facs]
    t = _all(
        t,
        _tri(_rel(lam[0], -lam[1]), tol),
        _tri(_rel(mu[0], -mu[3]), tol),
        _tri(_rel(mu[1], -mu[2]), tol),
        _tri(_rel(lam[2], -lam[3]), tol),
    )
    if t is Tri.NO:
        return _NO
    r = [nu[i] ** 2 / (lam[i] * mu[i]) for i in range(4)]
    t = _all(
        t,
        _tri(_rel(r[0], r[2]), tol),
        _tri(_rel(r[1], r[3]), tol),
        _tri(_rel(r[0] + r[1], 1.0), tol),
    )
    wit = {
        "lambda": lam,
        "mu": mu,
        "nu": nu,
        "nu2_over_lambda_mu": r,
    }
    return t, wit


def _check_isogonal(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    t = _all(*(_tri(qi.res_antiisogram(), tol) for qi in q))
    if t is Tri.NO:
        return _NO
    if any(qi.cls.tag is not QuadTag.ISOGRAM or not qi.cls.anti for qi in q):
        return (Tri.MAYBE, {}) if t is not Tri.NO else _NO
    ks = [qi.kappas() for qi in q]
    if any(not k for k in ks):
        return _NO
    best = math.inf
    chosen = None
    for k1 in ks[0]:
        for k2 in ks[1]:
            for k3 in ks[2]:
                for k4 in ks[3]:
                    r = _rel(k1 * k3, k2 * k4)
                    if r < best:
                        best, chosen = r, (k1, k2, k3, k4)
    t = _all(t, _tri(best, tol))
    return t, {"kappa": list(chosen), "kappa13_minus_kappa24": best}


def _equal_moduli(q: list[_QuadInfo], idx: list[int], tol: Tolerances) -> Tri:
    ms = [q[i].bars.M for i in idx]
    return _all(*(_tri(_rel(ms[0], m), tol) for m in ms[1:]))


def _check_equimodular_elliptic(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    if any(not qi.is_elliptic() for qi in q):
        return _NO
    t = _equal_moduli(q, [0, 1, 2, 3], tol)
    if t is Tri.NO:
        return _NO
    rs = [qi.ratios for qi in q]
    amp = [
        _rel(rs[0][0] * rs[0][3], rs[1][0] * rs[1][3]),
        _rel(rs[1][2] * rs[1][3], rs[2][2] * rs[2][3]),
        _rel(rs[2][0] * rs[2][3], rs[3][0] * rs[3][3]),
        _rel(rs[3][2] * rs[3][3], rs[0][2] * rs[0][3]),
    ]
    t = _all(t, *(_tri(a, tol) for a in amp))
    if t is Tri.NO:
        return _NO
    try:
        pars = [qi.par for qi in q]
    except (QuadError, EllipticError):
        return Tri.MAYBE, {}
    if any(not isinstance(p, EllipticParam) for p in pars):
        return Tri.MAYBE, {}
    fam = pars[0].family
    if any(p.family is not fam for p in pars):
        return Tri.MAYBE, {}
    lat = pars[0].t0.lattice
    ts = [p.t0.t0 for p in pars]
    best = math.inf
    signs = None
    for s2 in (1, -1):
        for s3 in (1, -1):
            for s4 in (1, -1):
                r = abs(lat.reduce(ts[0] + s2 * ts[1] + s3 * ts[2] + s4 * ts[3]))
                if r < best:
                    best, signs = r, (1, s2, s3, s4)
    t = _all(t, _tri(best, tol, yes=tol.tol_period))
    wit = {
        "M": [qi.bars.M for qi in q],
        "p": [p.p for p in pars],
        "q": [p.q for p in pars],
        "t": ts,
        "shift_signs": list(signs),
        "shift_residual": best,
    }
    return t, wit


def _check_equimodular_conic(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    t = _all(*(_tri(qi.res_circumscribed(), tol) for qi in q))
    if t is Tri.NO:
        return _NO
    if any(
        qi.cls.tag is not QuadTag.CONIC or (qi.cls.m, qi.cls.n) != (1, 1) for qi in q
    ):
        return (Tri.MAYBE, {}) if t is not Tri.NO else _NO
    try:
        pars = [qi.par for qi in q]
    except (QuadError, EllipticError):
        return Tri.MAYBE, {}
    amp = [
        _rel(pars[0].p ** 2, pars[1].p ** 2),
        _rel(pars[1].q ** 2, pars[2].q ** 2),
        _rel(pars[2].p ** 2, pars[3].p ** 2),
        _rel(pars[3].q ** 2, pars[0].q ** 2),
    ]
    t = _all(t, *(_tri(a, tol) for a in amp))
    if t is Tri.NO:
        return _NO
    ts = [p.t0.t0 for p in pars]
    best = math.inf
    signs = None
    for s2 in (1, -1):
        for s3 in (1, -1):
            for s4 in (1, -1):
                c = ts[0] + s2 * ts[1] + s3 * ts[2] + s4 * ts[3]
                r = math.hypot(math.remainder(c.real, TWO_PI), c.imag)
                if r < best:
                    best, signs = r, (1, s2, s3, s4)
    t = _all(t, _tri(best, tol, yes=tol.tol_period))
    wit = {
        "p": [p.p for p in pars],
        "q": [p.q for p in pars],
        "t": ts,
        "shift_signs": list(signs),
        "shift_residual": best,
    }
    return t, wit


def _cn_ratio_residual(ratio: complex, target: complex) -> tuple[float, int]:
    """Distance of the ratio to +-target; returns (residual, sign)."""
    rp, rm = _rel(ratio, target), _rel(ratio, -target)
    return (rp, 1) if rp <= rm else (rm, -1)


def _check_conjugate_modular(
    q: list[_QuadInfo], tol: Tolerances, variant: int
) -> _CheckResult:
    """Conjugate-modular classes; variant 1 pairs (Q1,Q3), variant 2 (Q1,Q4).

    These condition lists are necessary for flexibility but the amplitude
    constraints are incompatible with real spherical quadrilaterals, so no
    polyhedron actually satisfies them; the check is kept for completeness.
    """
    if any(not qi.is_elliptic() or qi.bars.M <= 1.0 for qi in q):
        return _NO
    ms = [qi.bars.M for qi in q]
    if variant == 1:
        t = _all(_tri(_rel(ms[0], ms[2]), tol), _tri(_rel(ms[1], ms[3]), tol))
    else:
        t = _all(_tri(_rel(ms[0], ms[3]), tol), _tri(_rel(ms[1], ms[2]), tol))
    t = _all(t, _tri(_rel(1.0 / ms[0] + 1.0 / ms[1], 1.0), tol))
    if t is Tri.NO:
        return _NO
    try:
        pars = [qi.par for qi in q]
    except (QuadError, EllipticError):
        return Tri.MAYBE, {}
    if any(not isinstance(p, EllipticParam) or p.family is not Family.CN for p in pars):
        return Tri.MAYBE, {}
    mod = pars[0].modulus
    ratio_kk = 1j * mod.k / mod.kp
    p = [pr.p for pr in pars]
    qq = [pr.q for pr in pars]
    ts = [pr.t0.t0 for pr in pars]
    lat = pars[0].t0.lattice
    if variant == 1:
        checks = [p[0] / p[1], qq[2] / qq[1], p[2] / p[3], qq[0] / qq[3]]
        rs = [_cn_ratio_residual(c, ratio_kk) for c in checks]
        t = _all(t, *(_tri(r, tol) for r, _ in rs))
        same_a = rs[0][1] == rs[1][1]
        same_b = rs[3][1] == rs[2][1]
        target = 0.0 if same_a == same_b else 2.0 * mod.K
        combos = [
            ts[0] + s2 * 1j * ts[1] + s3 * ts[2] + s4 * 1j * ts[3]
            for s2 in (1, -1)
            for s3 in (1, -1)
            for s4 in (1, -1)
        ]
    else:
        r1, s1 = _cn_ratio_residual(p[0] / p[1], ratio_kk)
        r3, s3_ = _cn_ratio_residual(p[2] / p[3], 1j * mod.kp / mod.k)
        t = _all(
            t,
            _tri(r1, tol),
            _tri(_rel(qq[1] ** 2, qq[2] ** 2), tol),
            _tri(r3, tol),
            _tri(_rel(qq[3] ** 2, qq[0] ** 2), tol),
        )
        # p1/p2 = p4/p3 exactly when the two detected signs disagree
        target = 0.0 if s1 != s3_ else 2.0 * mod.K
        combos = [
            ts[0] + s2 * 1j * ts[1] + s3 * 1j * ts[2] + s4 * ts[3]
            for s2 in (1, -1)
            for s3 in (1, -1)
            for s4 in (1, -1)
        ]
    if t is Tri.NO:
        return _NO
    best = min(abs(lat.reduce(c - target)) for c in combos)
    t = _all(t, _tri(best, tol, yes=tol.tol_period))
    wit = {"M": ms, "p": p, "q": qq, "t": ts, "shift_residual": best}
    return t, wit


# -- linear couplings -------------------------------------------------------


def _linear_coupling(
    qa: _QuadInfo, qb: _QuadInfo, tol: Tolerances
) -> list[tuple[str, complex, Tri, dict]]:
    """Linear components w_a = c * w_b of the coupling sharing the inner slot.

    Returns all candidate (kind, c, verdict, witness) tuples; the kappa
    branches of (anti)isograms yield several candidates.
    """
    out: list[tuple[str, complex, Tri, dict]] = []
    sa, sb = qa.s, qb.s
    # both isograms or both antiisograms
    iso = _all(_tri(qa.res_isogram(), tol), _tri(qb.res_isogram(), tol))
    aniso = _all(_tri(qa.res_antiisogram(), tol), _tri(qb.res_antiisogram(), tol))
    struct = Tri(max(iso, aniso))
    if struct is not Tri.NO and all(
        qi.cls.tag is QuadTag.ISOGRAM for qi in (qa, qb)
    ):
        for k1 in qa.kappas():
            for k2 in qb.kappas():
                out.append(("Iso", complex(k2 / k1), struct, {"kappa": [k1, k2]}))
    # lateral (anti)deltoids with equal involution factors
    for anti in (False, True):
        ra = qa.res_lateral_antideltoid() if anti else qa.res_lateral_deltoid()
        rb = qb.res_lateral_antideltoid() if anti else qb.res_lateral_deltoid()
        struct = _all(_tri(ra, tol), _tri(rb, tol))
        if struct is Tri.NO:
            continue
        try:
            fa, fb = qa.fac, qb.fac
        except QuadError:
            continue
        if fa.lam is None or fb.lam is None or fa.xi is None or fb.xi is None:
            continue
        struct = _all(struct, _tri(_rel(fa.lam, fb.lam), tol))
        if struct is Tri.NO:
            continue
        c = fa.xi / fb.xi if anti else fb.xi / fa.xi
        out.append(
            (
                "LatDelt",
                complex(c),
                struct,
                {"lambda": [fa.lam, fb.lam], "xi": [fa.xi, fb.xi]},
            )
        )
    # frontal (anti)deltoids with equal amplitudes
    for anti in (False, True):
        ra = qa.res_frontal_antideltoid() if anti else qa.res_frontal_deltoid()
        rb = qb.res_frontal_antideltoid() if anti else qb.res_frontal_deltoid()
        struct = _all(_tri(ra, tol), _tri(rb, tol))
        if struct is Tri.NO:
            continue
        try:
            pa, pb = qa.par, qb.par
        except (QuadError, EllipticError):
            continue
        if not (
            isinstance(pa, DeltoidParam)
            and isinstance(pb, DeltoidParam)
            and pa.apex is Apex.ALPHA_DELTA
            and pb.apex is Apex.ALPHA_DELTA
        ):
            continue
        struct = _all(struct, _tri(_rel(pa.amplitude**2, pb.amplitude**2), tol))
        if struct is Tri.NO:
            continue
        c = _deltoid_circle(pa) / _deltoid_circle(pb)
        out.append(
            ("FrontDelt", c, struct, {"p": [pa.amplitude, pb.amplitude], "A": c})
        )
    # equal-modulus elliptics with a real half-period shift difference
    if qa.is_elliptic() and qb.is_elliptic():
        rsa, rsb = qa.ratios, qb.ratios
        struct = _all(
            _tri(_rel(qa.bars.M, qb.bars.M), tol),
            _tri(_rel(rsa[0] * rsa[3], rsb[0] * rsb[3]), tol),
            _tri(_rel(rsa[1] * rsa[2], rsb[1] * rsb[2]), tol),
            _tri(_rel(rsa[0] * rsa[2], rsb[0] * rsb[2]), tol),
        )
        if struct is not Tri.NO:
            q1sq = rsa[2] * rsa[3] - 1.0
            q2sq = rsb[2] * rsb[3] - 1.0
            sign = 1.0 if math.sin(qa.bars.sigma) * math.sin(qb.bars.sigma) > 0 else -1.0
            c = sign * cmath.sqrt(complex(q1sq) / complex(q2sq))
            out.append(("Ell", c, struct, {"q_sq": [q1sq, q2sq]}))
    # conic pairs, both circumscribed or both of perimeter 2*pi
    for per in (False, True):
        ra = qa.res_perim_2pi() if per else qa.res_circumscribed()
        rb = qb.res_perim_2pi() if per else qb.res_circumscribed()
        struct = _all(_tri(ra, tol), _tri(rb, tol))
        if struct is Tri.NO:
            continue
        struct = _all(
            struct,
            _tri(
                _rel(
                    math.sin(sa.alpha) / math.sin(sa.beta),
                    math.sin(sb.alpha) / math.sin(sb.beta),
                ),
                tol,
            ),
            _tri(
                _rel(
                    math.sin(sa.gamma) / math.sin(sa.delta),
                    math.sin(sb.gamma) / math.sin(sb.delta),
                ),
                tol,
            ),
        )
        if struct is Tri.NO:
            continue
        q1sq = (
            math.sin(sa.gamma) * math.sin(sa.delta) / (math.sin(sa.alpha) * math.sin(sa.beta))
            - 1.0
        )
        q2sq = (
            math.sin(sb.gamma) * math.sin(sb.delta) / (math.sin(sb.alpha) * math.sin(sb.beta))
            - 1.0
        )
        cbar = cmath.sqrt(complex(q1sq) / complex(q2sq))
        sign = 1.0 if math.sin(qa.bars.sigma) * math.sin(qb.bars.sigma) > 0 else -1.0
        c = sign * (1.0 / cbar if per else cbar)
        out.append(("Con", c, struct, {"q_sq": [q1sq, q2sq]}))
    return out


def _check_linear_compound(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    lower = _linear_coupling(q[0], q[1], tol)
    if not lower:
        return _NO
    upper = _linear_coupling(q[3], q[2], tol)
    if not upper:
        return _NO
    best: _CheckResult = _NO
    for kind1, c1, t1, w1 in lower:
        for kind2, c2, t2, w2 in upper:
            t = _all(t1, t2, _tri(_rel(c1, c2), tol))
            if t > best[0]:
                best = (
                    t,
                    {
                        "kind_lower": kind1,
                        "kind_upper": kind2,
                        "c": c1,
                        "c_upper": c2,
                        "lower": w1,
                        "upper": w2,
                    },
                )
    return best


# -- linearly conjugate -----------------------------------------------------


def _antiisogram_kappas(qi: _QuadInfo, tol: Tolerances) -> tuple[Tri, tuple[float, ...]]:
    t = _tri(qi.res_antiisogram(), tol)
    if t is Tri.NO:
        return Tri.NO, ()
    if qi.cls.tag is not QuadTag.ISOGRAM or not qi.cls.anti:
        return Tri.MAYBE, ()
    return t, qi.kappas()


def _check_lin_conj_antideltoids(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    t = _all(
        _tri(q[0].res_frontal_antideltoid(), tol),
        _tri(q[2].res_lateral_antideltoid(), tol),
    )
    if t is Tri.NO:
        return _NO
    t2, k2s = _antiisogram_kappas(q[1], tol)
    t4, k4s = _antiisogram_kappas(q[3], tol)
    t = _all(t, t2, t4)
    if t is Tri.NO or not k2s or not k4s:
        return (t if t is not Tri.YES else Tri.MAYBE, {}) if t is not Tri.NO else _NO
    try:
        f1, f3 = q[0].fac, q[2].fac
    except QuadError:
        return Tri.MAYBE, {}
    if f1.mu is None or f1.zeta is None or f3.lam is None or f3.xi is None:
        return _NO
    best: _CheckResult = _NO
    for k2 in k2s:
        for k4 in k4s:
            tt = _all(
                t,
                _tri(_rel(k4 * k4 * f1.mu, f3.lam), tol),
                _tri(_rel_abs(k4 * f1.zeta, k2 * f3.xi), tol),
            )
            if tt > best[0]:
                best = (
                    tt,
                    {
                        "kappa_2": k2,
                        "kappa_4": k4,
                        "mu_1": f1.mu,
                        "zeta_1": f1.zeta,
                        "lambda_3": f3.lam,
                        "xi_3": f3.xi,
                    },
                )
    return best


def _pure_conic(qi: _QuadInfo, m: int, n: int) -> bool:
    return qi.cls.tag is QuadTag.CONIC and (qi.cls.m, qi.cls.n) == (m, n)


def _check_lin_conj_conics(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    t = _all(_tri(q[0].res_perim_2pi(), tol), _tri(q[2].res_perim_2pi(), tol))
    if t is Tri.NO:
        return _NO
    if not (_pure_conic(q[0], -1, -1) and _pure_conic(q[2], -1, -1)):
        return Tri.MAYBE, {}
    t2, k2s = _antiisogram_kappas(q[1], tol)
    t4, k4s = _antiisogram_kappas(q[3], tol)
    t = _all(t, t2, t4)
    if t is Tri.NO:
        return _NO
    if not k2s or not k4s:
        return Tri.MAYBE, {}
    try:
        p1, p3 = q[0].par, q[2].par
    except (QuadError, EllipticError):
        return Tri.MAYBE, {}
    best: _CheckResult = _NO
    for k2 in k2s:
        for k4 in k4s:
            shift_target = 0.0 if k2 * k4 > 0 else math.pi
            d = p1.t0.t0 - p3.t0.t0 - shift_target
            tt = _all(
                t,
                _tri(_rel(p3.q**2, k2 * k2 * p1.p**2), tol),
                _tri(_rel(p1.q**2, k4 * k4 * p3.p**2), tol),
                _tri(
                    math.hypot(math.remainder(d.real, TWO_PI), d.imag),
                    tol,
                    yes=tol.tol_period,
                ),
            )
            if tt > best[0]:
                best = (
                    tt,
                    {
                        "kappa_2": k2,
                        "kappa_4": k4,
                        "p": [p1.p, p3.p],
                        "q": [p1.q, p3.q],
                        "t": [p1.t0.t0, p3.t0.t0],
                    },
                )
    return best


def _check_lin_conj_elliptics(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    if not (q[0].is_elliptic() and q[2].is_elliptic()):
        return _NO
    t = _tri(_rel(q[0].bars.M, q[2].bars.M), tol)
    if t is Tri.NO:
        return _NO
    t2, k2s = _antiisogram_kappas(q[1], tol)
    t4, k4s = _antiisogram_kappas(q[3], tol)
    t = _all(t, t2, t4)
    if t is Tri.NO:
        return _NO
    if not k2s or not k4s:
        return Tri.MAYBE, {}
    try:
        p1, p3 = q[0].par, q[2].par
    except (QuadError, EllipticError):
        return Tri.MAYBE, {}
    if not (isinstance(p1, EllipticParam) and isinstance(p3, EllipticParam)):
        return Tri.MAYBE, {}
    if p1.family is not p3.family:
        return Tri.MAYBE, {}
    lat = p1.t0.lattice
    best: _CheckResult = _NO
    for k2 in k2s:
        for k4 in k4s:
            shift_target = 0.0 if k2 * k4 > 0 else 2.0 * p1.modulus.K
            d = p1.t0.t0 - p3.t0.t0 - shift_target
            tt = _all(
                t,
                _tri(_rel(p1.p**2, k2 * k2 * p3.q**2), tol),
                _tri(_rel(p3.p**2, k4 * k4 * p1.q**2), tol),
                _tri(abs(lat.reduce(d)), tol, yes=tol.tol_period),
            )
            if tt > best[0]:
                best = (
                    tt,
                    {
                        "kappa_2": k2,
                        "kappa_4": k4,
                        "M": [q[0].bars.M, q[2].bars.M],
                        "p": [p1.p, p3.p],
                        "q": [p1.q, p3.q],
                        "t": [p1.t0.t0, p3.t0.t0],
                    },
                )
    return best


# -- chimeras ---------------------------------------------------------------


def _frontal_antideltoid_par(qi: _QuadInfo) -> DeltoidParam | None:
    try:
        par = qi.par
    except (QuadError, EllipticError):
        return None
    if isinstance(par, DeltoidParam) and par.apex is Apex.ALPHA_DELTA:
        return par
    return None


def _chimera_conic_deltoid(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    t = _all(
        _tri(q[1].res_perim_2pi(), tol),
        _tri(q[2].res_perim_2pi(), tol),
        _tri(q[0].res_frontal_antideltoid(), tol),
        _tri(q[3].res_frontal_antideltoid(), tol),
    )
    if t is Tri.NO:
        return _NO
    if not (_pure_conic(q[1], -1, -1) and _pure_conic(q[2], -1, -1)):
        return Tri.MAYBE, {}
    d1 = _frontal_antideltoid_par(q[0])
    d4 = _frontal_antideltoid_par(q[3])
    if d1 is None or d4 is None:
        return Tri.MAYBE, {}
    c2, c3 = q[1].par, q[2].par
    t = _all(
        t,
        _tri(_rel(c2.q**2, c3.q**2), tol),
        _tri(_rel(d1.amplitude**2, c2.p**2), tol),
        _tri(_rel(d4.amplitude**2, c3.p**2), tol),
    )
    if t is Tri.NO:
        return _NO
    a1, a4 = _deltoid_circle(d1), _deltoid_circle(d4)
    t2, t3 = c2.t0.t0, c3.t0.t0
    best = math.inf
    for s2 in (1, -1):
        for s3 in (1, -1):
            best = min(best, _rel(a1, a4 * cmath.exp(1j * (s2 * t2 + s3 * t3))))
    t = _all(t, _tri(best, tol))
    wit = {
        "q": [c2.q, c3.q],
        "p": [d1.amplitude, c2.p, c3.p, d4.amplitude],
        "A": [a1, a4],
        "t": [t2, t3],
        "phase_residual": best,
    }
    return t, wit


def _chimera_ortho_isogram_1(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    t = _all(
        _tri(q[0].res_orthodiagonal(), tol),
        _tri(q[1].res_lateral_antideltoid(), tol),
        _tri(q[3].res_frontal_antideltoid(), tol),
        _tri(q[2].res_isogram(), tol),
    )
    if t is Tri.NO:
        return _NO
    try:
        f1, f2, f4 = q[0].fac, q[1].fac, q[3].fac
    except QuadError:
        return Tri.MAYBE, {}
    if (
        f1.lam is None
        or f1.mu is None
        or f1.nu is None
        or f2.lam is None
        or f2.xi is None
        or f4.mu is None
        or f4.zeta is None
    ):
        return _NO
    t = _all(t, _tri(_rel(f1.lam, f2.lam), tol), _tri(_rel(f1.mu, f4.mu), tol))
    if t is Tri.NO:
        return _NO
    k3s = q[2].kappas()
    if not k3s:
        return Tri.MAYBE, {}
    best = min(_rel(f1.nu, k3 * f2.xi * f4.zeta) for k3 in k3s)
    t = _all(t, _tri(best, tol))
    wit = {
        "nu_1": f1.nu,
        "lambda": [f1.lam, f2.lam],
        "mu": [f1.mu, f4.mu],
        "xi_2": f2.xi,
        "zeta_4": f4.zeta,
        "kappa_3": list(k3s),
    }
    return t, wit


def _chimera_ortho_isogram_2(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    t = _all(
        _tri(q[0].res_orthodiagonal(), tol),
        _tri(q[1].res_lateral_antideltoid(), tol),
        _tri(q[2].res_lateral_deltoid(), tol),
        _tri(q[3].res_antiisogram(), tol),
    )
    if t is Tri.NO:
        return _NO
    if q[0].cls.tag is QuadTag.DELTOID:
        return _NO
    try:
        f1, f2, f3 = q[0].fac, q[1].fac, q[2].fac
    except QuadError:
        return Tri.MAYBE, {}
    if (
        f1.lam is None
        or f1.mu is None
        or f1.nu is None
        or f2.lam is None
        or f2.xi is None
        or f3.lam is None
        or f3.xi is None
    ):
        return _NO
    t = _all(t, _tri(_rel(f1.lam, f2.lam), tol))
    if t is Tri.NO:
        return _NO
    t4, k4s = _antiisogram_kappas(q[3], tol)
    t = _all(t, t4)
    if t is Tri.NO or not k4s:
        return (Tri.MAYBE, {}) if t is not Tri.NO else _NO
    best: _CheckResult = _NO
    for k4 in k4s:
        tt = _all(
            t,
            _tri(_rel(k4 * k4 * f1.mu, f3.lam), tol),
            _tri(_rel(k4 * f1.nu, -f2.xi * f3.xi), tol),
        )
        if tt > best[0]:
            best = (
                tt,
                {
                    "kappa_4": k4,
                    "mu_1": f1.mu,
                    "nu_1": f1.nu,
                    "lambda": [f1.lam, f2.lam, f3.lam],
                    "xi": [f2.xi, f3.xi],
                },
            )
    return best


def _chimera_conic_isogram(
    q: list[_QuadInfo], tol: Tolerances, anti: bool
) -> _CheckResult:
    t = _all(
        _tri(q[1].res_perim_2pi(), tol),
        _tri(q[0].res_frontal_antideltoid(), tol),
        _tri(q[2].res_lateral_antideltoid(), tol),
        _tri(q[3].res_antiisogram() if anti else q[3].res_isogram(), tol),
    )
    if t is Tri.NO:
        return _NO
    if not _pure_conic(q[1], -1, -1):
        return Tri.MAYBE, {}
    d1 = _frontal_antideltoid_par(q[0])
    if d1 is None:
        return Tri.MAYBE, {}
    c2 = q[1].par
    try:
        f3 = q[2].fac
    except QuadError:
        return Tri.MAYBE, {}
    if f3.xi is None:
        return _NO
    try:
        par3 = q[2].par
    except (QuadError, EllipticError):
        return Tri.MAYBE, {}
    q3 = par3.amplitude if isinstance(par3, DeltoidParam) else None
    if q3 is None:
        return Tri.MAYBE, {}
    t = _all(
        t,
        _tri(_rel(d1.amplitude**2, c2.p**2), tol),
        _tri(_rel(c2.q**2, q3**2), tol),
    )
    if t is Tri.NO:
        return _NO
    if not isinstance(par3, DeltoidParam):
        return Tri.MAYBE, {}
    k4s = q[3].kappas()
    if not k4s:
        return Tri.MAYBE, {}
    a1 = _deltoid_circle(d1)
    a3 = _deltoid_circle(par3)
    t2 = c2.t0.t0
    best = math.inf
    chosen = None
    for k4 in k4s:
        if abs(k4) < 1e-14:
            continue
        w_at_1 = 1.0 / k4
        for sgn in (1, -1):
            phase = cmath.exp(sgn * 1j * t2)
            for pm in (1.0, -1.0):
                if anti:
                    r = _rel(pm * w_at_1 * a3 * phase, a1)
                else:
                    r = _rel(pm * w_at_1, -a1 * a3 * phase)
                if r < best:
                    best, chosen = r, (k4, sgn)
    if chosen is None:
        return Tri.MAYBE, {}
    t = _all(t, _tri(best, tol))
    hits, tot = -1, -1
    if t is Tri.YES:
        hits, tot = _circle_component_hits([qi.s for qi in q], d1)
        if tot >= 10 and hits == 0:
            return _NO
    wit = {
        "p": [d1.amplitude, c2.p],
        "q": [c2.q, q3],
        "circle": [a1, a3],
        "kappa_4": chosen[0],
        "t_2": t2,
        "phase_residual": best,
        "shared_points": [hits, tot],
    }
    return t, wit


def _chimera_delt_antidelt_ell(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    for order in ((False, True), (True, False)):
        anti1, anti2 = order
        r1 = q[0].res_frontal_antideltoid() if anti1 else q[0].res_frontal_deltoid()
        r2 = q[1].res_frontal_antideltoid() if anti2 else q[1].res_frontal_deltoid()
        t = _all(_tri(r1, tol), _tri(r2, tol))
        if t is Tri.NO:
            continue
        if not (q[2].is_elliptic() and q[3].is_elliptic()):
            return _NO
        t = _all(t, _tri(_rel(q[2].bars.M, q[3].bars.M), tol))
        if t is Tri.NO:
            return _NO
        if q[2].bars.M >= 1.0:
            return _NO
        d1 = _frontal_antideltoid_par(q[0])
        d2 = _frontal_antideltoid_par(q[1])
        if d1 is None or d2 is None:
            return Tri.MAYBE, {}
        # the coupling of the two deltoids must be irreducible
        if _rel(d1.amplitude**2, d2.amplitude**2) < tol.tol_margin:
            return _NO
        try:
            p3, p4 = q[2].par, q[3].par
        except (QuadError, EllipticError):
            return Tri.MAYBE, {}
        if not (
            isinstance(p3, EllipticParam)
            and isinstance(p4, EllipticParam)
            and p3.family is Family.SN
        ):
            return Tri.MAYBE, {}
        t = _all(t, _tri(_rel(p3.p**2, p4.p**2), tol))
        if t is Tri.NO:
            return _NO
        mod = p3.modulus
        lat = p3.t0.lattice
        k = mod.k
        best = math.inf
        chosen = None
        for s3 in (1, -1):
            for s4 in (1, -1):
                total = s3 * p3.t0.t0 + s4 * p4.t0.t0
                for l in range(4):
                    target = complex(l * mod.K, 0.5 * mod.Kp)
                    r = abs(lat.reduce(total - target))
                    if r < best:
                        best, chosen = r, l
        t = _all(t, _tri(best, tol, yes=tol.tol_period))
        if t is Tri.NO:
            return _NO
        try:
            f1, f2 = q[0].fac, q[1].fac
        except QuadError:
            return Tri.MAYBE, {}
        if f1.mu is None or f2.mu is None or f1.zeta is None or f2.zeta is None:
            return _NO
        qa = p4.q  # amplitude at the w1 vertex, paired with Q1
        qb = p3.q  # amplitude at the w2 vertex, paired with Q2
        sign_mu = 1.0 if chosen in (0, 2) else -1.0
        t = _all(
            t,
            _tri(_rel(complex(f1.mu), sign_mu * qa**2 / k), tol),
            _tri(_rel(complex(f2.mu), sign_mu * qb**2 / k), tol),
        )
        if t is Tri.NO:
            return _NO
        if chosen == 0:
            target_zz = 2.0 * (1.0 + k) / (k * math.sqrt(k)) * qa * qb
        elif chosen == 1:
            target_zz = 2j * (1.0 - k) / (k * math.sqrt(k)) * qa * qb
        elif chosen == 2:
            target_zz = -2.0 * (1.0 + k) / (k * math.sqrt(k)) * qa * qb
        else:
            target_zz = -2j * (1.0 - k) / (k * math.sqrt(k)) * qa * qb
        res_zz = _rel_abs(complex(f1.zeta) * complex(f2.zeta), target_zz)
        t = _all(t, _tri(res_zz, tol))
        wit = {
            "mu": [f1.mu, f2.mu],
            "zeta": [f1.zeta, f2.zeta],
            "p": [p3.p, p4.p],
            "q": [qa, qb],
            "k": k,
            "l": chosen,
            "shift_residual": best,
        }
        return t, wit
    return _NO


def _chimera_conic_delt_vs_isogram_delt(
    q: list[_QuadInfo], tol: Tolerances
) -> _CheckResult:
    t = _all(
        _tri(q[2].res_perim_2pi(), tol),
        _tri(q[3].res_frontal_antideltoid(), tol),
        _tri(q[0].res_frontal_antideltoid(), tol),
        _tri(q[1].res_antiisogram(), tol),
    )
    if t is Tri.NO:
        return _NO
    if not _pure_conic(q[2], -1, -1):
        return Tri.MAYBE, {}
    d1 = _frontal_antideltoid_par(q[0])
    d4 = _frontal_antideltoid_par(q[3])
    if d1 is None or d4 is None:
        return Tri.MAYBE, {}
    c3 = q[2].par
    t = _all(t, _tri(_rel(c3.p**2, d4.amplitude**2), tol))
    if t is Tri.NO:
        return _NO
    try:
        f1 = q[0].fac
    except QuadError:
        return Tri.MAYBE, {}
    if f1.mu is None or f1.zeta is None:
        return _NO
    t2s = q[1].kappas()
    if not t2s:
        return Tri.MAYBE, {}
    mu4 = complex(d4.factor)
    a4 = _deltoid_circle(d4)
    t3 = c3.t0.t0
    best = math.inf
    chosen = None
    for sgn in (1, -1):
        r_mu = _rel(complex(f1.mu), mu4 * cmath.exp(sgn * 2j * t3))
        for k2 in t2s:
            r_z = _rel(
                complex(f1.zeta),
                -k2 * 2j * a4 * cmath.exp(sgn * 1j * t3) / c3.q,
            )
            r = max(r_mu, r_z)
            if r < best:
                best, chosen = r, (sgn, k2)
    t = _all(t, _tri(best, tol))
    wit = {
        "mu": [f1.mu, d4.factor],
        "zeta_1": f1.zeta,
        "A_4": a4,
        "t_3": t3,
        "q_3": c3.q,
        "c_2": chosen[1] if chosen else None,
        "phase_residual": best,
    }
    return t, wit


def _chimera_three_conics_isogram(q: list[_QuadInfo], tol: Tolerances) -> _CheckResult:
    t = _all(
        _tri(q[2].res_perim_2pi(), tol),
        _tri(q[3].res_perim_2pi(), tol),
        _tri(q[0].res_perim_2pi(), tol),
        _tri(q[1].res_antiisogram(), tol),
    )
    if t is Tri.NO:
        return _NO
    if not all(_pure_conic(q[i], -1, -1) for i in (0, 2, 3)):
        return Tri.MAYBE, {}
    p1, p3, p4 = q[0].par, q[2].par, q[3].par
    t = _all(
        t,
        _tri(_rel(p3.p**2, p4.p**2), tol),
        _tri(_rel(p4.q**2, p1.q**2), tol),
    )
    if t is Tri.NO:
        return _NO
    t2, k2s = _antiisogram_kappas(q[1], tol)
    t = _all(t, t2)
    if t is Tri.NO or not k2s:
        return (Tri.MAYBE, {}) if t is not Tri.NO else _NO
    best: _CheckResult = _NO
    for k2 in k2s:
        target = 0.0 if k2 > 0 else math.pi
        shift_best = math.inf
        for s3 in (1, -1):
            for s4 in (1, -1):
                d = p1.t0.t0 + s3 * p3.t0.t0 + s4 * p4.t0.t0 - target
                shift_best = min(
                    shift_best, math.hypot(math.remainder(d.real, TWO_PI), d.imag)
                )
        tt = _all(
            t,
            _tri(_rel(p3.q**2, k2 * k2 * p1.p**2), tol),
            _tri(shift_best, tol, yes=tol.tol_period),
        )
        if tt > best[0]:
            best = (
                tt,
                {
                    "kappa_2": k2,
                    "p": [p1.p, p3.p, p4.p],
                    "q": [p1.q, p3.q, p4.q],
                    "t": [p1.t0.t0, p3.t0.t0, p4.t0.t0],
                    "shift_residual": shift_best,
                },
            )
    return best


def _chimera_three_elliptics_isogram(
    q: list[_QuadInfo], tol: Tolerances
) -> _CheckResult:
    if not all(q[i].is_elliptic() for i in (0, 2, 3)):
        return _NO
    t = _equal_moduli(q, [0, 2, 3], tol)
    if t is Tri.NO:
        return _NO
    try:
        p1, p3, p4 = q[0].par, q[2].par, q[3].par
    except (QuadError, EllipticError):
        return Tri.MAYBE, {}
    if not all(isinstance(p, EllipticParam) for p in (p1, p3, p4)):
        return Tri.MAYBE, {}
    if not (p1.family is p3.family is p4.family):
        return Tri.MAYBE, {}
    t = _all(
        t,
        _tri(_rel(p3.p**2, p4.p**2), tol),
        _tri(_rel(p4.q**2, p1.q**2), tol),
    )
    if t is Tri.NO:
        return _NO
    t2, k2s = _antiisogram_kappas(q[1], tol)
    t = _all(t, t2)
    if t is Tri.NO or not k2s:
        return (Tri.MAYBE, {}) if t is not Tri.NO else _NO
    lat = p1.t0.lattice
    best: _CheckResult = _NO
    for k2 in k2s:
        target = 0.0 if k2 > 0 else 2.0 * p1.modulus.K
        shift_best = math.inf
        for s3 in (1, -1):
            for s4 in (1, -1):
                d = p1.t0.t0 + s3 * p3.t0.t0 + s4 * p4.t0.t0 - target
                shift_best = min(shift_best, abs(lat.reduce(d)))
        tt = _all(
            t,
            _tri(_rel(p1.p**2, k2 * k2 * p3.q**2), tol),
            _tri(shift_best, tol, yes=tol.tol_period),
        )
        if tt > best[0]:
            best = (
                tt,
                {
                    "kappa_2": k2,
                    "M": [q[0].bars.M, q[2].bars.M, q[3].bars.M],
                    "p": [p1.p, p3.p, p4.p],
                    "q": [p1.q, p3.q, p4.q],
                    "t": [p1.t0.t0, p3.t0.t0, p4.t0.t0],
                    "shift_residual": shift_best,
                },
            )
    return best


def _chimera_ortho_antidelt_vs_conic_delt(
    q: list[_QuadInfo], tol: Tolerances
) -> _CheckResult:
    t = _all(
        _tri(q[0].res_orthodiagonal(), tol),
        _tri(q[1].res_lateral_antideltoid(), tol),
        _tri(q[2].res_circumscribed(), tol),
        _tri(q[3].res_frontal_deltoid(), tol),
    )
    if t is Tri.NO:
        return _NO
    if q[0].cls.tag is QuadTag.DELTOID:
        return _NO
    if not _pure_conic(q[2], 1, 1):
        return Tri.MAYBE, {}
    d4 = _frontal_antideltoid_par(q[3])
    if d4 is None:
        return Tri.MAYBE, {}
    c3 = q[2].par
    t = _all(t, _tri(_rel(d4.amplitude**2, c3.p**2), tol))
    if t is Tri.NO:
        return _NO
    try:
        f1, f2 = q[0].fac, q[1].fac
    except QuadError:
        return Tri.MAYBE, {}
    if f1.mu is None or f1.nu is None or f2.lam is None or f2.xi is None:
        return _NO
    if f1.lam is None:
        return _NO
    t = _all(t, _tri(_rel(f1.lam, f2.lam), tol))
    if t is Tri.NO:
        return _NO
    mu4 = complex(d4.factor)
    a4 = _deltoid_circle(d4)
    t3 = c3.t0.t0
    best = math.inf
    chosen = None
    for sgn in (1, -1):
        r_mu = _rel(complex(f1.mu), mu4 * cmath.exp(sgn * 2j * t3))
        r_z = _rel_abs(
            complex(f1.nu) / complex(f2.xi),
            2j * a4 * cmath.exp(sgn * 1j * t3) / c3.q,
        )
        r = max(r_mu, r_z)
        if r < best:
            best, chosen = r, sgn
    t = _all(t, _tri(best, tol))
    wit = {
        "mu": [f1.mu, d4.factor],
        "nu_1": f1.nu,
        "xi_2": f2.xi,
        "A_4": a4,
        "t_3": t3,
        "q_3": c3.q,
        "sign": chosen,
        "phase_residual": best,
    }
    return t, wit


# ---------------------------------------------------------------------------
# the verdict


class FlexStatus(enum.Enum):
    RIGID = "Rigid"
    FLEXIBLE = "Flexible"
    TRIVIALLY_FLEXIBLE = "TriviallyFlexible"
    UNDETERMINED = "Undetermined"


#: class tags in check order
CLASS_CHECKS = [
    ("OrthodiagonalInvolutive", _check_orthodiagonal_involutive),
    ("OrthodiagonalAntiinvolutive", _check_orthodiagonal_antiinvolutive),
    ("Isogonal", _check_isogonal),
    ("LinearCompound", _check_linear_compound),
    ("LinearlyConjugateAntideltoids", _check_lin_conj_antideltoids),
    ("LinearlyConjugateConics", _check_lin_conj_conics),
    ("LinearlyConjugateElliptics", _check_lin_conj_elliptics),
    ("EquimodularElliptic", _check_equimodular_elliptic),
    ("EquimodularConic", _check_equimodular_conic),
    ("ConjugateModular1", lambda q, tol: _check_conjugate_modular(q, tol, 1)),
    ("ConjugateModular2", lambda q, tol: _check_conjugate_modular(q, tol, 2)),
    ("ChimeraConicDeltoid", _chimera_conic_deltoid),
    ("ChimeraOrthoIsogram1", _chimera_ortho_isogram_1),
    ("ChimeraOrthoIsogram2", _chimera_ortho_isogram_2),
    ("ChimeraConicIsogram", lambda q, tol: _chimera_conic_isogram(q, tol, False)),
    ("ChimeraConicAntiisogram", lambda q, tol: _chimera_conic_isogram(q, tol, True)),
    ("ChimeraDeltAntideltEll", _chimera_delt_antidelt_ell),
    ("ChimeraConicDeltVsIsogramDelt", _chimera_conic_delt_vs_isogram_delt),
    ("ChimeraThreeConicsIsogram", _chimera_three_conics_isogram),
    ("ChimeraThreeEllipticsIsogram", _chimera_three_elliptics_isogram),
    ("ChimeraOrthoAntideltVsConicDelt", _chimera_ortho_antidelt_vs_conic_delt),
]

CLASS_TAGS = [name for name, _ in CLASS_CHECKS]


@dataclass(frozen=True)
class Hit:
    class_tag: str
    rotation: int
    mask: int
    witness: dict

    def to_dict(self) -> dict:
        return {
            "class": self.class_tag,
            "rotation": self.rotation,
            "mask": self.mask,
            "witness": _jsonable(self.witness),
        }


@dataclass(frozen=True)
class FlexVerdict:
    status: FlexStatus
    class_tag: str | None
    switches_applied: int
    rotation: int
    witness: dict
    hits: tuple[Hit, ...] = ()
    trivial: TrivialKind | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "class": self.class_tag,
            "switches_applied": self.switches_applied,
            "rotation": self.rotation,
            "witness": _jsonable(self.witness),
            "hits": [h.to_dict() for h in self.hits],
            "trivial": self.trivial.to_dict() if self.trivial else None,
        }


def _run_check(fn, infos, tol) -> _CheckResult:
    try:
        return fn(infos, tol)
    except (QuadError, EllipticError, ZeroDivisionError, OverflowError):
        return Tri.MAYBE, {}


def classify_poly(p: KokoPoly, tol: Tolerances = DEFAULT_TOL) -> FlexVerdict:
    """Full classification over all switching masks and rotations.

    The first satisfied class (in check order, over configurations ordered
    by rotation then mask) fixes the reported tag; all satisfied classes
    are recorded as hits.  With no satisfied class the verdict is Rigid
    unless some condition fell into the undetermined band.
    """
    validate_poly(p)
    try:
        triv = trivial_verdict(p, tol)
    except (QuadError, EllipticError):
        triv = (Tri.MAYBE, None)
    hits: list[Hit] = []
    maybe = triv[0] is Tri.MAYBE
    info_cache: dict[tuple, _QuadInfo] = {}

    def infos_for(poly: KokoPoly) -> list[_QuadInfo] | None:
        out = []
        for s in poly.quads():
            key = tuple(round(x, 13) for x in s.as_tuple())
            qi = info_cache.get(key)
            if qi is None:
                try:
                    qi = _QuadInfo(s, tol)
                except (QuadError, EllipticError):
                    return None
                info_cache[key] = qi
            out.append(qi)
        return out

    rotated = p
    for rot in range(4):
        for mask in range(16):
            cfg = switch_poly(rotated, mask)
            infos = infos_for(cfg)
            if infos is None:
                maybe = True
                continue
            for name, fn in CLASS_CHECKS:
                verdict, wit = _run_check(fn, infos, tol)
                if verdict is Tri.YES:
                    hits.append(Hit(name, rot, mask, wit))
                elif verdict is Tri.MAYBE:
                    maybe = True
        rotated = rotate_poly(rotated)
    if hits:
        # a nontrivial flexion dominates: any pinned branch is reported
        # alongside, not instead
        first = hits[0]
        return FlexVerdict(
            status=FlexStatus.FLEXIBLE,
            class_tag=first.class_tag,
            switches_applied=first.mask,
            rotation=first.rotation,
            witness=first.witness,
            hits=tuple(hits),
            trivial=triv[1] if triv[0] is Tri.YES else None,
        )
    if triv[0] is Tri.YES:
        return FlexVerdict(
            status=FlexStatus.TRIVIALLY_FLEXIBLE,
            class_tag="Trivial",
            switches_applied=0,
            rotation=0,
            witness={"pinned": triv[1].to_dict()},
            trivial=triv[1],
        )
    if maybe:
        return FlexVerdict(
            status=FlexStatus.UNDETERMINED,
            class_tag=None,
            switches_applied=0,
            rotation=0,
            witness={},
        )
    return FlexVerdict(
        status=FlexStatus.RIGID,
        class_tag=None,
        switches_applied=0,
        rotation=0,
        witness={},
    )
