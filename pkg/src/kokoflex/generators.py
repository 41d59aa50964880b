"""Constructive samplers for every flexible class, plus named examples.

Each generator samples free parameters and then solves the remaining class
constraints exactly (closed forms or bracketed root finds) or to machine
precision (damped least squares).  The planar-base constraint, that the four
delta angles sum to 2*pi, is built into each construction rather than
projected afterwards wherever a closed form allows it.

The two conjugate-modular condition lists require amplitude ratios that no
real spherical quadrilateral attains, so their generators raise
:class:`GenerationFailed` unconditionally.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.optimize import brentq, least_squares

from .classifier import FlexStatus, KokoPoly, classify_poly, validate_poly
from .config import DEFAULT_TOL, Tolerances
from .elliptic import EllipticError
from .orthodiag import involution_factors
from .quad import (
    BarQuantities,
    ConicParam,
    DeltoidParam,
    EllipticParam,
    QuadError,
    SideLengths,
    classify,
    conf_coeffs,
    grashof_solutions,
    parametrize,
    validate_sides,
)

TWO_PI = 2.0 * math.pi


class GenerationFailed(RuntimeError):
    """No instance found within the retry budget."""


# ---------------------------------------------------------------------------
# small solving helpers


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _ok(s: SideLengths) -> bool:
    return validate_sides(s) is None


def _bracket_solve(f, lo: float, hi: float, n: int = 240) -> list[float]:
    """All simple roots of f on (lo, hi) found by scan plus brentq."""
    xs = np.linspace(lo, hi, n)
    vals = []
    for x in xs:
        try:
            vals.append(f(x))
        except (ValueError, ZeroDivisionError, QuadError, EllipticError):
            vals.append(math.nan)
    roots = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if math.isnan(a) or math.isnan(b) or a * b > 0:
            continue
        try:
            roots.append(brentq(f, xs[i], xs[i + 1], xtol=1e-15, rtol=8.9e-16))
        except (ValueError, QuadError, EllipticError):
            continue
    return roots


def _anti_kappa_side(y: float, kappa: float) -> float | None:
    """Side x of the antiisogram (x, y, pi-x, pi-y) with slope kappa.

    The linear branches are z = kappa * w with kappa equal to
    sin((x-y)/2)/sin((x+y)/2) (magnitude below one) or
    cos((x-y)/2)/cos((x+y)/2) (magnitude above one).
    """
    if abs(kappa) < 1e-12 or abs(abs(kappa) - 1.0) < 1e-9:
        return None
    ty = math.tan(0.5 * y)
    if abs(kappa) < 1.0:
        tx = ty * (1.0 + kappa) / (1.0 - kappa)
    else:
        tx = (kappa - 1.0) / ((kappa + 1.0) * ty)
    if tx <= 0.0:
        return None
    x = 2.0 * math.atan(tx)
    return x if 1e-9 < x < math.pi - 1e-9 else None


def _antiisogram(x: float, y: float) -> SideLengths:
    return SideLengths(x, y, math.pi - x, math.pi - y)


def _isogram(x: float, y: float) -> SideLengths:
    return SideLengths(x, y, x, y)


def _anti_kappas(x: float, y: float) -> tuple[float, float]:
    k1 = math.sin(0.5 * (x - y)) / math.sin(0.5 * (x + y))
    k2 = math.cos(0.5 * (x - y)) / math.cos(0.5 * (x + y))
    return k1, k2


def _is_tag(s: SideLengths, tag_name: str, tol: Tolerances) -> bool:
    try:
        return classify(s, tol).tag.name == tag_name
    except QuadError:
        return False


def _retrying(build, seed: int, tries: int = 300):
    last = None
    for i in range(tries):
        rng = _rng(seed * 100003 + i)
        try:
            p = build(rng)
        except (QuadError, EllipticError, ValueError, ZeroDivisionError) as exc:
            last = exc
            continue
        if p is None:
            continue
        try:
            validate_poly(p)
        except Exception as exc:
            last = exc
            continue
        return p
    raise GenerationFailed(f"retry budget exhausted ({last!r})")


def _uniform(rng, lo: float, hi: float) -> float:
    return float(rng.uniform(lo, hi))


# ---------------------------------------------------------------------------
# easy classes


def _gen_isogonal(rng) -> KokoPoly | None:
    bs = [ _uniform(rng, 0.5, math.pi - 0.5) for _ in range(3) ]
    b4 = TWO_PI - sum(bs)
    if not 0.2 < b4 < math.pi - 0.2:
        return None
    bs.append(b4)
    xs = [_uniform(rng, 0.3, math.pi - 0.3) for _ in range(3)]
    k = [ _anti_kappas(xs[i], bs[i])[0] for i in range(3) ]
    if abs(k[1]) < 1e-6:
        return None
    k4 = k[0] * k[2] / k[1]
    x4 = _anti_kappa_side(bs[3], k4)
    if x4 is None:
        return None
    xs.append(x4)
    quads = [_antiisogram(xs[i], bs[i]) for i in range(4)]
    if not all(_ok(q) for q in quads):
        return None
    return KokoPoly(*quads)


def _ortho_from(al: float, ga: float, de: float) -> SideLengths | None:
    cb = math.cos(al) * math.cos(ga) / math.cos(de)
    if abs(cb) >= 1.0 - 1e-10:
        return None
    s = SideLengths(al, math.acos(cb), ga, de)
    return s if _ok(s) else None


def _gen_ortho_involutive(rng) -> KokoPoly | None:
    al1 = _uniform(rng, 0.9, 1.45)
    ga1 = _uniform(rng, 0.9, 1.45)
    de1 = _uniform(rng, 0.7, 1.2)
    de2 = _uniform(rng, 0.7, 1.2)
    r = math.tan(de1) / math.tan(de2)
    al2 = math.atan(math.tan(al1) / r)
    ga2 = _uniform(rng, 0.9, 1.45)
    al3 = _uniform(rng, 0.9, 1.45)
    al4 = math.atan(math.tan(al3) * r)
    specs = [
        (al1, ga1, de1),
        (al2, ga2, de2),
        (al3, math.pi - ga2, math.pi - de2),
        (al4, math.pi - ga1, math.pi - de1),
    ]
    quads = []
    for al, ga, de in specs:
        q = _ortho_from(al, ga, de)
        if q is None:
            return None
        quads.append(q)
    return KokoPoly(*quads)


def _elliptic_quad(rng, delta: float | None = None) -> SideLengths | None:
    for _ in range(40):
        a = _uniform(rng, 0.4, math.pi - 0.4)
        b = _uniform(rng, 0.4, math.pi - 0.4)
        g = _uniform(rng, 0.4, math.pi - 0.4)
        d = delta if delta is not None else _uniform(rng, 0.4, math.pi - 0.4)
        s = SideLengths(a, b, g, d)
        if not _ok(s):
            continue
        try:
            if grashof_solutions(s):
                continue
        except QuadError:
            continue
        # stay clear of orthodiagonal and deltoid degeneracies
        if abs(math.cos(a) * math.cos(g) - math.cos(b) * math.cos(d)) < 1e-3:
            continue
        return s
    return None


def _sine_ratios(s: SideLengths) -> tuple[float, float, float, float]:
    bars = BarQuantities.of(s)
    return (
        math.sin(s.alpha) / math.sin(bars.abar),
        math.sin(s.beta) / math.sin(bars.bbar),
        math.sin(s.gamma) / math.sin(bars.gbar),
        math.sin(s.delta) / math.sin(bars.dbar),
    )


def _gen_equimodular_elliptic(rng) -> KokoPoly | None:
    """Four distinct elliptic quads with equal moduli and chained amplitudes.

    The symmetric solution (one quad repeated, with delta = pi/2) sits on the
    solution manifold; a random perturbation followed by a least-squares
    correction lands at a nearby generic point.
    """
    s0 = _elliptic_quad(rng, delta=math.pi / 2.0)
    if s0 is None:
        return None

    def params_of(v):
        s = SideLengths(*[float(x) for x in v])
        if not _ok(s):
            return None, None
        try:
            if grashof_solutions(s):
                return None, None
            par = parametrize(s)
        except (QuadError, EllipticError):
            return None, None
        if not isinstance(par, EllipticParam):
            return None, None
        return s, par

    def resid(v):
        quads, pars = [], []
        for i in range(4):
            s, par = params_of(v[4 * i : 4 * i + 4])
            if s is None:
                return np.full(10, 10.0)
            quads.append(s)
            pars.append(par)
        if any(p.family is not pars[0].family for p in pars):
            return np.full(10, 10.0)
        rs = [_sine_ratios(s) for s in quads]
        ms = [BarQuantities.of(s).M for s in quads]
        lat = pars[0].t0.lattice
        ts = [p.t0.t0 for p in pars]
        shift = lat.reduce(ts[0] - ts[1] + ts[2] - ts[3])
        return np.array(
            [
                rs[0][0] * rs[0][3] - rs[1][0] * rs[1][3],
                rs[1][2] * rs[1][3] - rs[2][2] * rs[2][3],
                rs[2][0] * rs[2][3] - rs[3][0] * rs[3][3],
                rs[3][2] * rs[3][3] - rs[0][2] * rs[0][3],
                ms[0] - ms[1],
                ms[1] - ms[2],
                ms[2] - ms[3],
                shift.real,
                shift.imag,
                sum(s.delta for s in quads) - TWO_PI,
            ]
        )

    v0 = np.tile(np.array(s0.as_tuple()), 4) + rng.uniform(-0.12, 0.12, 16)
    v0 = np.clip(v0, 0.35, math.pi - 0.35)
    try:
        sol = least_squares(
            resid, v0, bounds=(0.3, math.pi - 0.3), xtol=3e-16, ftol=3e-16,
            gtol=3e-16, max_nfev=600,
        )
    except ValueError:
        return None
    if np.max(np.abs(sol.fun)) > 1e-12:
        return None
    quads = []
    for i in range(4):
        s, par = params_of(sol.x[4 * i : 4 * i + 4])
        if s is None:
            return None
        quads.append(s)
    # keep the quads genuinely distinct so no coupling degenerates
    for i in range(4):
        j = (i + 1) % 4
        if max(abs(a - b) for a, b in zip(quads[i].as_tuple(), quads[j].as_tuple())) < 1e-3:
            return None
    return KokoPoly(*quads)


def _gen_equimodular_conic(rng) -> KokoPoly | None:
    """Four distinct circumscribed conic quads with chained amplitudes."""
    a = _uniform(rng, 0.6, math.pi - 0.6)
    g = _uniform(rng, 0.6, math.pi - 0.6)
    b = a + g - math.pi / 2.0
    if not 0.3 < b < math.pi - 0.3:
        return None
    s0 = SideLengths(a, b, g, math.pi / 2.0)
    if not _ok(s0):
        return None

    def quad_of(v):
        al, be, ga = (float(x) for x in v)
        s = SideLengths(al, be, ga, al + ga - be)
        if not (0.05 < s.delta < math.pi - 0.05) or not _ok(s):
            return None, None
        try:
            if len(grashof_solutions(s)) != 1:
                return None, None
            par = parametrize(s)
        except (QuadError, EllipticError):
            return None, None
        if not isinstance(par, ConicParam):
            return None, None
        return s, par

    def resid(v):
        quads, pars = [], []
        for i in range(4):
            s, par = quad_of(v[3 * i : 3 * i + 3])
            if s is None:
                return np.full(7, 10.0)
            quads.append(s)
            pars.append(par)
        ts = [p.t0.t0 for p in pars]
        shift = ts[0] - ts[1] + ts[2] - ts[3]
        return np.array(
            [
                (pars[0].p ** 2 - pars[1].p ** 2).real,
                (pars[1].q ** 2 - pars[2].q ** 2).real,
                (pars[2].p ** 2 - pars[3].p ** 2).real,
                (pars[3].q ** 2 - pars[0].q ** 2).real,
                math.remainder(shift.real, TWO_PI),
                shift.imag,
                sum(s.delta for s in quads) - TWO_PI,
            ]
        )

    v0 = np.tile(np.array([a, b, g]), 4) + rng.uniform(-0.1, 0.1, 12)
    v0 = np.clip(v0, 0.35, math.pi - 0.35)
    try:
        sol = least_squares(
            resid, v0, bounds=(0.3, math.pi - 0.3), xtol=3e-16, ftol=3e-16,
            gtol=3e-16, max_nfev=600,
        )
    except ValueError:
        return None
    if np.max(np.abs(sol.fun)) > 1e-12:
        return None
    quads = []
    for i in range(4):
        s, par = quad_of(sol.x[3 * i : 3 * i + 3])
        if s is None:
            return None
        quads.append(s)
    for i in range(4):
        j = (i + 1) % 4
        if max(abs(x - y) for x, y in zip(quads[i].as_tuple(), quads[j].as_tuple())) < 1e-3:
            return None
    return KokoPoly(*quads)


def _perim_conic(rng) -> SideLengths | None:
    for _ in range(40):
        a = _uniform(rng, 0.5, math.pi - 0.5)
        b = _uniform(rng, 0.5, math.pi - 0.5)
        g = _uniform(rng, 0.5, math.pi - 0.5)
        d = TWO_PI - a - b - g
        if not 0.3 < d < math.pi - 0.3:
            continue
        s = SideLengths(a, b, g, d)
        if not _ok(s):
            continue
        try:
            sols = grashof_solutions(s)
        except QuadError:
            continue
        if len(sols) != 1:
            continue
        return s
    return None


def _gen_lin_conj_conics(rng) -> KokoPoly | None:
    s1 = _perim_conic(rng)
    if s1 is None:
        return None
    par = parametrize(s1)
    psq, qsq = (par.p**2).real, (par.q**2).real
    if psq * qsq <= 0:
        return None
    c0 = math.sqrt(qsq / psq)
    if abs(c0 - 1.0) < 1e-3:
        return None
    lo = max(0.2, 2.0 * s1.delta - math.pi + 0.2)
    hi = min(math.pi - 0.2, 2.0 * s1.delta - 0.2)
    if lo >= hi:
        return None
    y2 = _uniform(rng, lo, hi)
    y4 = 2.0 * s1.delta - y2
    x2 = _anti_kappa_side(y2, c0)
    x4 = _anti_kappa_side(y4, c0)
    if x2 is None or x4 is None:
        return None
    p = KokoPoly(s1, _antiisogram(x2, y2), s1, _antiisogram(x4, y4))
    return p if all(_ok(q) for q in p.quads()) else None


def _gen_lin_conj_elliptics(rng) -> KokoPoly | None:
    s1 = _elliptic_quad(rng)
    if s1 is None or not 0.2 < 2.0 * s1.delta < TWO_PI - 0.4:
        return None
    try:
        par = parametrize(s1)
    except (QuadError, EllipticError):
        return None
    psq, qsq = (par.p**2).real, (par.q**2).real
    if psq * qsq <= 0:
        return None
    c0 = math.sqrt(psq / qsq)
    if abs(c0 - 1.0) < 1e-3:
        return None
    lo = max(0.3, 2.0 * s1.delta - math.pi + 0.2)
    hi = min(math.pi - 0.3, 2.0 * s1.delta - 0.2)
    if lo >= hi:
        return None
    y2 = _uniform(rng, lo, hi)
    y4 = 2.0 * s1.delta - y2
    x2 = _anti_kappa_side(y2, c0)
    x4 = _anti_kappa_side(y4, c0)
    if x2 is None or x4 is None:
        return None
    p = KokoPoly(s1, _antiisogram(x2, y2), s1, _antiisogram(x4, y4))
    return p if all(_ok(q) for q in p.quads()) else None


# ---------------------------------------------------------------------------
# linear compounds


def _lateral_deltoid_lambda(a: float, g: float) -> float:
    # quad (a, a, g, g): factor at the z vertex
    return math.sin(g + a) / math.sin(g - a)


def _gen_linear_compound(rng, kind: str) -> KokoPoly | None:
    """Lower coupling of the requested kind, upper coupling of isograms."""
    if kind == "Iso":
        y1 = _uniform(rng, 0.5, math.pi - 0.5)
        y2 = _uniform(rng, 0.5, math.pi - 0.5)
        x1 = _uniform(rng, 0.3, math.pi - 0.3)
        x2 = _uniform(rng, 0.3, math.pi - 0.3)
        q1, q2 = _antiisogram(x1, y1), _antiisogram(x2, y2)
        c = _anti_kappas(x2, y2)[0] / _anti_kappas(x1, y1)[0]
        d1, d2 = q1.delta, q2.delta
    elif kind == "LatDelt":
        g1 = _uniform(rng, 0.9, math.pi - 0.5)
        a1 = _uniform(rng, 0.3, g1 - 0.3)
        lam = _lateral_deltoid_lambda(a1, g1)
        g2 = _uniform(rng, 0.9, math.pi - 0.5)
        # same factor: tan(a2) = tan(g2) (lam - 1)/(lam + 1)
        t = math.tan(g2) * (lam - 1.0) / (lam + 1.0)
        if t <= 0:
            return None
        a2 = math.atan(t)
        if not 0.1 < a2 < g2 - 0.05:
            return None
        q1 = SideLengths(a1, a1, g1, g1)
        q2 = SideLengths(a2, a2, g2, g2)
        f1 = involution_factors(q1)
        f2 = involution_factors(q2)
        if f1.xi is None or f2.xi is None:
            return None
        c = f2.xi / f1.xi
        d1, d2 = g1, g2
    elif kind == "FrontDelt":
        a1 = _uniform(rng, 0.6, math.pi - 0.6)
        b1 = _uniform(rng, 0.3, math.pi - 0.3)
        if abs(math.sin(a1)) <= abs(math.sin(b1)):
            return None
        ratio = math.sin(a1) / math.sin(b1)
        a2 = _uniform(rng, 0.6, math.pi - 0.6)
        sb2 = math.sin(a2) / ratio
        if not 0.0 < sb2 < 1.0:
            return None
        b2 = math.asin(sb2) if rng.random() < 0.5 else math.pi - math.asin(sb2)
        q1 = SideLengths(a1, b1, b1, a1)
        q2 = SideLengths(a2, b2, b2, a2)
        if not (_ok(q1) and _ok(q2)):
            return None
        p1, p2 = parametrize(q1), parametrize(q2)
        if not (isinstance(p1, DeltoidParam) and isinstance(p2, DeltoidParam)):
            return None
        a_1 = p1.sign * cmath.sqrt(complex(-p1.factor))
        a_2 = p2.sign * cmath.sqrt(complex(-p2.factor))
        c = a_1 / a_2
        if abs(c.imag) > 1e-9:
            return None
        c = c.real
        d1, d2 = a1, a2
    elif kind == "Con":
        s1 = None
        for _ in range(30):
            a = _uniform(rng, 0.5, math.pi - 0.5)
            g = _uniform(rng, 0.5, math.pi - 0.5)
            d = _uniform(rng, 0.5, math.pi - 0.5)
            b = a + g - d
            if not 0.2 < b < math.pi - 0.2:
                continue
            cand = SideLengths(a, b, g, d)
            if _ok(cand) and _is_tag(cand, "CONIC", DEFAULT_TOL):
                s1 = cand
                break
        if s1 is None:
            return None
        # second circumscribed quad with matching sine ratios
        r_ab = math.sin(s1.alpha) / math.sin(s1.beta)
        r_gd = math.sin(s1.gamma) / math.sin(s1.delta)

        def resid(v):
            a2, g2 = v
            sb = math.sin(a2) / r_ab
            if not 0.0 < sb < 1.0:
                return [10.0, 10.0]
            b2 = math.asin(sb)
            d2 = a2 + g2 - b2
            if not 0.05 < d2 < math.pi - 0.05:
                return [10.0, 10.0]
            return [math.sin(g2) - r_gd * math.sin(d2), 0.0]

        a2 = _uniform(rng, 0.5, math.pi - 0.5)
        gs = _bracket_solve(lambda g: resid([a2, g])[0], 0.3, math.pi - 0.3, 120)
        if not gs:
            return None
        g2 = gs[int(rng.integers(len(gs)))]
        b2 = math.asin(math.sin(a2) / r_ab)
        d2 = a2 + g2 - b2
        q2c = SideLengths(a2, b2, g2, d2)
        if not (_ok(q2c) and _is_tag(q2c, "CONIC", DEFAULT_TOL)):
            return None
        q1, q2 = s1, q2c
        par1, par2 = parametrize(q1), parametrize(q2)
        q1sq, q2sq = (par1.q**2).real, (par2.q**2).real
        if q1sq * q2sq <= 0:
            return None
        sign = 1.0 if math.sin(BarQuantities.of(q1).sigma) * math.sin(
            BarQuantities.of(q2).sigma
        ) > 0 else -1.0
        c = sign * math.sqrt(q1sq / q2sq)
        d1, d2 = q1.delta, q2.delta
    else:  # "Ell": identical elliptic pair, c = 1
        s1 = _elliptic_quad(rng)
        if s1 is None:
            return None
        q1 = q2 = s1
        c = 1.0
        d1 = d2 = s1.delta
    # upper coupling: antiisograms Q4, Q3 with kappa3 / kappa4 = c
    ysum = d1 + d2  # deltas pi - y3 and pi - y4 close the base
    if not 0.4 < ysum < TWO_PI - 0.4:
        return None
    lo = max(0.2, ysum - math.pi + 0.2)
    hi = min(math.pi - 0.2, ysum - 0.2)
    if lo >= hi:
        return None
    for _ in range(30):
        y4 = _uniform(rng, lo, hi)
        y3 = ysum - y4
        x4 = _uniform(rng, 0.3, math.pi - 0.3)
        k4 = _anti_kappas(x4, y4)[0]
        x3 = _anti_kappa_side(y3, c * k4)
        if x3 is None:
            continue
        q3, q4 = _antiisogram(x3, y3), _antiisogram(x4, y4)
        p = KokoPoly(q1, q2, q3, q4)
        if all(_ok(q) for q in p.quads()):
            return p
    return None


# ---------------------------------------------------------------------------
# linearly conjugate antideltoids


def _front_antideltoid(a: float, b: float) -> SideLengths:
    return SideLengths(a, b, math.pi - b, math.pi - a)


def _lat_antideltoid(a: float, g: float) -> SideLengths:
    return SideLengths(a, math.pi - a, g, math.pi - g)


def _gen_lin_conj_antideltoids(rng) -> KokoPoly | None:
    a1 = _uniform(rng, 0.5, math.pi - 0.5)
    b1 = _uniform(rng, 0.4, math.pi - 0.4)
    q1 = _front_antideltoid(a1, b1)
    if not _ok(q1):
        return None
    f1 = involution_factors(q1)
    if f1.mu is None or f1.zeta is None:
        return None
    g3 = _uniform(rng, 0.5, math.pi - 0.5)
    y2 = _uniform(rng, 0.4, math.pi - 0.4)
    y4 = TWO_PI - a1 - y2 - g3
    if not 0.2 < y4 < math.pi - 0.2:
        return None
    x4 = _uniform(rng, 0.3, math.pi - 0.3)
    k4 = _anti_kappas(x4, y4)[0]
    lam3 = k4 * k4 * f1.mu
    # lateral antideltoid (a3, pi-a3, g3, pi-g3): lam = sin(g3-a3)/sin(g3+a3)
    t = math.tan(g3) * (1.0 - lam3) / (1.0 + lam3)
    if t <= 0:
        return None
    a3 = math.atan(t)
    q3 = _lat_antideltoid(a3, g3)
    if not _ok(q3):
        return None
    f3 = involution_factors(q3)
    if f3.lam is None or f3.xi is None or abs(f3.xi) < 1e-9:
        return None
    k2 = k4 * f1.zeta / f3.xi
    x2 = _anti_kappa_side(y2, k2)
    if x2 is None:
        x2 = _anti_kappa_side(y2, -k2)
    if x2 is None:
        return None
    p = KokoPoly(q1, _antiisogram(x2, y2), q3, _antiisogram(x4, y4))
    return p if all(_ok(q) for q in p.quads()) else None


# ---------------------------------------------------------------------------
# orthodiagonal antiinvolutive


def _gen_ortho_antiinvolutive(rng) -> KokoPoly | None:
    """Least-squares solve of the sign-flipped factor chain."""

    def unpack(v):
        quads = []
        for i in range(4):
            al, be, ga = v[3 * i : 3 * i + 3]
            # delta from the orthodiagonality relation with beta as input
            cd = math.cos(al) * math.cos(ga) / math.cos(be)
            if abs(cd) >= 1.0 - 1e-9:
                return None
            q = SideLengths(al, be, ga, math.acos(cd))
            if not _ok(q):
                return None
            quads.append(q)
        return quads

    def resid(v):
        quads = unpack(v)
        if quads is None:
            return np.full(8, 10.0)
        try:
            facs = [involution_factors(q) for q in quads]
        except QuadError:
            return np.full(8, 10.0)
        if any(f.lam is None or f.mu is None or f.nu is None for f in facs):
            return np.full(8, 10.0)
        lam = [f.lam for f in facs]
        mu = [f.mu for f in facs]
        nu = [f.nu for f in facs]
        try:
            r = [nu[i] ** 2 / (lam[i] * mu[i]) for i in range(4)]
        except ZeroDivisionError:
            return np.full(8, 10.0)
        return np.array(
            [
                lam[0] + lam[1],
                mu[0] + mu[3],
                mu[1] + mu[2],
                lam[2] + lam[3],
                r[0] - r[2],
                r[1] - r[3],
                r[0] + r[1] - 1.0,
                sum(q.delta for q in quads) - TWO_PI,
            ]
        )

    v0 = rng.uniform(0.5, math.pi - 0.5, 12)
    try:
        sol = least_squares(
            resid, v0, bounds=(0.25, math.pi - 0.25), xtol=3e-16, ftol=3e-16,
            gtol=3e-16, max_nfev=400,
        )
    except ValueError:
        return None
    if np.max(np.abs(sol.fun)) > 1e-12:
        return None
    quads = unpack(sol.x)
    if quads is None:
        return None
    for q in quads:
        try:
            if grashof_solutions(q):
                return None
        except QuadError:
            return None
    return KokoPoly(*quads)


# ---------------------------------------------------------------------------
# chimera helpers


def _deltoid_amp_sq(s: SideLengths) -> float | None:
    try:
        par = parametrize(s)
    except (QuadError, EllipticError):
        return None
    if not isinstance(par, DeltoidParam):
        return None
    return (par.amplitude**2).real


def _conic_data(s: SideLengths) -> ConicParam | None:
    try:
        par = parametrize(s)
    except (QuadError, EllipticError):
        return None
    return par if isinstance(par, ConicParam) else None


def _solve_front_antideltoid_amp(a: float, target_psq: float) -> list[float]:
    """Values of b with the frontal antideltoid (a, b) inner amplitude target."""

    def f(b):
        amp = _deltoid_amp_sq(_front_antideltoid(a, b))
        if amp is None:
            raise ValueError("no deltoid parametrization")
        return amp - target_psq

    return _bracket_solve(f, 0.15, math.pi - 0.15, 160)


def _solve_lat_antideltoid_amp(a: float, target_qsq: float) -> list[float]:
    def f(g):
        amp = _deltoid_amp_sq(_lat_antideltoid(a, g))
        if amp is None:
            raise ValueError("no deltoid parametrization")
        return amp - target_qsq

    return _bracket_solve(f, 0.15, math.pi - 0.15, 160)


def _mu_of(s: SideLengths) -> float | None:
    try:
        f = involution_factors(s)
    except QuadError:
        return None
    return f.mu


def _chimera_conic_deltoid(rng) -> KokoPoly | None:
    q2 = _perim_conic(rng)
    if q2 is None:
        return None
    c2 = _conic_data(q2)
    if c2 is None:
        return None
    # partner conic with the same outer amplitude and shift segment
    a3 = _uniform(rng, 0.5, math.pi - 0.5)
    b3 = _uniform(rng, 0.5, math.pi - 0.5)

    def f(g3):
        d3 = TWO_PI - a3 - b3 - g3
        if not 0.2 < d3 < math.pi - 0.2:
            raise ValueError("delta out of range")
        s = SideLengths(a3, b3, g3, d3)
        if not _ok(s):
            raise ValueError("invalid")
        c3 = _conic_data(s)
        if c3 is None:
            raise ValueError("not conic")
        return (c3.q**2 - c2.q**2).real

    roots = _bracket_solve(f, 0.3, math.pi - 0.3, 160)
    for g3 in roots:
        d3 = TWO_PI - a3 - b3 - g3
        q3 = SideLengths(a3, b3, g3, d3)
        if not _ok(q3):
            continue
        c3 = _conic_data(q3)
        if c3 is None:
            continue
        if abs(c3.t0.t0.real - c2.t0.t0.real) > 1e-9 and abs(
            abs(c3.t0.t0.real - c2.t0.t0.real) - math.pi
        ) > 1e-9:
            continue
        # remaining unknowns: the two frontal antideltoids
        ssum = q2.delta + d3
        p2sq, p3sq = (c2.p**2).real, (c3.p**2).real

        def resid(v):
            a1, b1, a4, b4 = v
            s1 = _front_antideltoid(a1, b1)
            s4 = _front_antideltoid(a4, b4)
            if not (_ok(s1) and _ok(s4)):
                return np.full(4, 10.0)
            amp1, amp4 = _deltoid_amp_sq(s1), _deltoid_amp_sq(s4)
            mu1, mu4 = _mu_of(s1), _mu_of(s4)
            if None in (amp1, amp4, mu1, mu4) or mu1 * mu4 <= 0:
                return np.full(4, 10.0)
            shift = cmath.exp(1j * (c2.t0.t0 - c3.t0.t0))
            phase = (abs(shift)) ** 2
            return np.array(
                [
                    amp1 - p2sq,
                    amp4 - p3sq,
                    mu1 - mu4 * phase,
                    a1 + a4 - ssum,
                ]
            )

        v0 = np.clip(
            [ssum / 2.0, _uniform(rng, 0.5, 2.0), ssum / 2.0, _uniform(rng, 0.5, 2.0)],
            0.3,
            math.pi - 0.3,
        )
        try:
            sol = least_squares(
                resid, v0, bounds=(0.15, math.pi - 0.15), xtol=3e-16,
                ftol=3e-16, gtol=3e-16, max_nfev=300,
            )
        except ValueError:
            continue
        if np.max(np.abs(sol.fun)) > 1e-12:
            continue
        a1, b1, a4, b4 = sol.x
        s1, s4 = _front_antideltoid(a1, b1), _front_antideltoid(a4, b4)
        try:
            par1, par4 = parametrize(s1), parametrize(s4)
        except (QuadError, EllipticError):
            continue
        if not (isinstance(par1, DeltoidParam) and isinstance(par4, DeltoidParam)):
            continue
        amp1 = par1.sign * cmath.sqrt(complex(-par1.factor))
        amp4 = par4.sign * cmath.sqrt(complex(-par4.factor))
        ratio = amp1 / (amp4 * cmath.exp(1j * (c2.t0.t0 - c3.t0.t0)))
        if abs(ratio - 1.0) > 1e-9:
            continue  # wrong relative orientation of the two circle factors
        p = KokoPoly(s1, q2, q3, s4)
        if all(_ok(q) for q in p.quads()):
            return p
    return None


def _gen_chimera_ortho_isogram_1(rng) -> KokoPoly | None:
    q1 = None
    for _ in range(30):
        al = _uniform(rng, 0.6, 1.4)
        be = _uniform(rng, 0.6, 1.4)
        ga = _uniform(rng, 0.6, 1.4)
        cd = math.cos(al) * math.cos(ga) / math.cos(be)
        if abs(cd) >= 1.0 - 1e-9:
            continue
        cand = SideLengths(al, be, ga, math.acos(cd))
        if not _ok(cand):
            continue
        try:
            if grashof_solutions(cand):
                continue
        except QuadError:
            continue
        q1 = cand
        break
    if q1 is None:
        return None
    f1 = involution_factors(q1)
    if f1.lam is None or f1.mu is None or f1.nu is None:
        return None
    # Q2: lateral antideltoid with the shared factor
    g2 = _uniform(rng, 0.5, math.pi - 0.5)
    t = math.tan(g2) * (1.0 - f1.lam) / (1.0 + f1.lam)
    if t <= 0:
        return None
    a2 = math.atan(t)
    q2 = _lat_antideltoid(a2, g2)
    if not _ok(q2):
        return None
    # Q4: frontal antideltoid with mu matching
    a4 = _uniform(rng, 0.4, math.pi - 0.4)

    def f(b4):
        mu = _mu_of(_front_antideltoid(a4, b4))
        if mu is None:
            raise ValueError("mu undefined")
        return mu - f1.mu

    roots = _bracket_solve(f, 0.15, math.pi - 0.15, 160)
    for b4 in roots:
        q4 = _front_antideltoid(a4, b4)
        if not _ok(q4):
            continue
        f2 = involution_factors(q2)
        f4 = involution_factors(q4)
        if f2.xi is None or f4.zeta is None:
            continue
        b3 = TWO_PI - q1.delta - q2.delta - q4.delta
        if not 0.2 < b3 < math.pi - 0.2:
            continue
        denom = f2.xi * f4.zeta
        if abs(denom) < 1e-9:
            continue
        k3 = f1.nu / denom
        if not 0.05 < abs(k3) < 20.0:
            continue
        a3 = _iso_kappa_side(b3, k3)
        if a3 is None:
            continue
        q3 = _isogram(a3, b3)
        p = KokoPoly(q1, q2, q3, q4)
        if all(_ok(q) for q in p.quads()):
            return p
    return None


def _iso_kappa_side(y: float, kappa: float) -> float | None:
    """Side x of the isogram (x, y, x, y) whose linear slope is kappa."""
    return _anti_kappa_side(y, kappa)


def _gen_chimera_ortho_isogram_2(rng) -> KokoPoly | None:
    q1 = None
    for _ in range(30):
        al = _uniform(rng, 0.6, 1.4)
        be = _uniform(rng, 0.6, 1.4)
        ga = _uniform(rng, 0.6, 1.4)
        cd = math.cos(al) * math.cos(ga) / math.cos(be)
        if abs(cd) >= 1.0 - 1e-9:
            continue
        cand = SideLengths(al, be, ga, math.acos(cd))
        if not _ok(cand):
            continue
        try:
            if grashof_solutions(cand):
                continue
        except QuadError:
            continue
        q1 = cand
        break
    if q1 is None:
        return None
    f1 = involution_factors(q1)
    if f1.lam is None or f1.mu is None or f1.nu is None:
        return None
    g2 = _uniform(rng, 0.5, math.pi - 0.5)
    t = math.tan(g2) * (1.0 - f1.lam) / (1.0 + f1.lam)
    if t <= 0:
        return None
    a2 = math.atan(t)
    q2 = _lat_antideltoid(a2, g2)
    if not _ok(q2):
        return None
    f2 = involution_factors(q2)
    if f2.xi is None:
        return None
    y4 = _uniform(rng, 0.4, math.pi - 0.4)
    g3 = TWO_PI - q1.delta - q2.delta - (math.pi - y4)
    if not 0.25 < g3 < math.pi - 0.25:
        return None

    roots = _bracket_solve(
        lambda x4: _anti_kappas(x4, y4)[0] * f1.nu
        + f2.xi * _xi3_of(x4, y4, g3, f1.mu),
        0.2,
        math.pi - 0.2,
        160,
    )
    for x4 in roots:
        k4 = _anti_kappas(x4, y4)[0]
        lam3 = k4 * k4 * f1.mu
        tt = math.tan(g3) * (lam3 - 1.0) / (lam3 + 1.0)
        if tt <= 0:
            continue
        a3 = math.atan(tt)
        q3 = SideLengths(a3, a3, g3, g3)
        p = KokoPoly(q1, q2, q3, _antiisogram(x4, y4))
        if all(_ok(q) for q in p.quads()):
            return p
    return None


def _xi3_of(x4: float, y4: float, g3: float, mu1: float) -> float:
    k4 = _anti_kappas(x4, y4)[0]
    lam3 = k4 * k4 * mu1
    tt = math.tan(g3) * (lam3 - 1.0) / (lam3 + 1.0)
    if tt <= 0:
        raise ValueError("no deltoid side")
    a3 = math.atan(tt)
    q3 = SideLengths(a3, a3, g3, g3)
    if not _ok(q3):
        raise ValueError("invalid deltoid")
    f3 = involution_factors(q3)
    if f3.xi is None:
        raise ValueError("xi undefined")
    return f3.xi


def _gen_chimera_conic_isogram(rng, anti: bool) -> KokoPoly | None:
    q2 = _perim_conic(rng)
    if q2 is None:
        return None
    c2 = _conic_data(q2)
    if c2 is None:
        return None
    p2sq = (c2.p**2).real
    q2sq = (c2.q**2).real
    t2 = c2.t0.t0
    a1 = _uniform(rng, 0.4, math.pi - 0.4)
    a3 = _uniform(rng, 0.4, math.pi - 0.4)
    want = "ChimeraConicAntiisogram" if anti else "ChimeraConicIsogram"
    for b1 in _solve_front_antideltoid_amp(a1, p2sq):
        q1 = _front_antideltoid(a1, b1)
        if not _ok(q1):
            continue
        par1 = parametrize(q1)
        if not isinstance(par1, DeltoidParam):
            continue
        a_1 = par1.sign * cmath.sqrt(complex(-par1.factor))
        for g3 in _solve_lat_antideltoid_amp(a3, q2sq):
            q3 = _lat_antideltoid(a3, g3)
            if not _ok(q3):
                continue
            par3 = parametrize(q3)
            if not isinstance(par3, DeltoidParam):
                continue
            a_3 = par3.sign * cmath.sqrt(complex(-par3.factor))
            rest = TWO_PI - q1.delta - q2.delta - q3.delta
            y4 = math.pi - rest if anti else rest
            if not 0.15 < y4 < math.pi - 0.15:
                continue
            # Q4 must carry the circle chained around the other three quads:
            # its component through (u, w1) = (1, m) closes the cycle.
            targets: list[float] = []
            for sgn in (1.0, -1.0):
                phase = cmath.exp(sgn * 1j * t2)
                m = a_1 / (a_3 * phase) if anti else -a_1 * a_3 * phase
                if abs(m.imag) > 1e-9 * max(1.0, abs(m)):
                    continue
                for pm in (1.0, -1.0):
                    val = pm * m.real
                    if all(abs(val - v) > 1e-12 for v in targets):
                        targets.append(val)
            for m_val in targets:
                if not 1e-6 < abs(m_val) < 1e6:
                    continue

                def f(x4: float) -> float:
                    q4 = _antiisogram(x4, y4) if anti else _isogram(x4, y4)
                    c4 = conf_coeffs(q4)
                    scale = max(
                        abs(c4.c22), abs(c4.c20), abs(c4.c02), abs(c4.c11), abs(c4.c00)
                    )
                    return complex(c4.eval(1.0, m_val)).real / scale

                for x4 in _bracket_solve(f, 0.1, math.pi - 0.1, 200):
                    q4 = _antiisogram(x4, y4) if anti else _isogram(x4, y4)
                    p = KokoPoly(q1, q2, q3, q4)
                    if not all(_ok(qq) for qq in p.quads()):
                        continue
                    v = classify_poly(p)
                    if v.status is FlexStatus.FLEXIBLE and v.class_tag == want:
                        return p
    return None


def _gen_chimera_conic_delt_vs_isogram_delt(rng) -> KokoPoly | None:
    q3 = _perim_conic(rng)
    if q3 is None:
        return None
    c3 = _conic_data(q3)
    if c3 is None:
        return None
    if abs(math.remainder(c3.t0.t0.real, math.pi)) > 1e-9:
        return None
    p3sq = (c3.p**2).real
    a4 = _uniform(rng, 0.4, math.pi - 0.4)
    for b4 in _solve_front_antideltoid_amp(a4, p3sq):
        q4 = _front_antideltoid(a4, b4)
        if not _ok(q4):
            continue
        par4 = parametrize(q4)
        mu4 = _mu_of(q4)
        if mu4 is None or not isinstance(par4, DeltoidParam):
            continue
        a_4 = par4.sign * cmath.sqrt(complex(-par4.factor))
        for sgn in (1.0, -1.0):
            phase2 = cmath.exp(sgn * 2j * c3.t0.t0)
            if abs(phase2.imag) > 1e-9:
                continue
            mu1_target = mu4 * phase2.real
            a1 = _uniform(rng, 0.4, math.pi - 0.4)

            def f(b1):
                mu = _mu_of(_front_antideltoid(a1, b1))
                if mu is None:
                    raise ValueError("mu undefined")
                return mu - mu1_target

            for b1 in _bracket_solve(f, 0.15, math.pi - 0.15, 160):
                q1 = _front_antideltoid(a1, b1)
                if not _ok(q1):
                    continue
                f1 = involution_factors(q1)
                if f1.zeta is None:
                    continue
                y2 = TWO_PI - q1.delta - q3.delta - q4.delta
                y2 = math.pi - y2
                if not 0.15 < y2 < math.pi - 0.15:
                    continue
                num = f1.zeta * c3.q
                den = 2j * a_4 * cmath.exp(sgn * 1j * c3.t0.t0)
                if abs(den) < 1e-12:
                    continue
                c2c = num / den
                if abs(c2c.imag) > 1e-9 * max(1.0, abs(c2c)):
                    continue
                x2 = _anti_kappa_side(y2, -c2c.real)
                if x2 is None:
                    continue
                p = KokoPoly(q1, _antiisogram(x2, y2), q3, q4)
                if all(_ok(q) for q in p.quads()):
                    return p
    return None


def _gen_chimera_three_conics(rng) -> KokoPoly | None:
    q1 = _perim_conic(rng)
    if q1 is None:
        return None
    c1 = _conic_data(q1)
    q1sq = (c1.q**2).real
    # Q4 with matching outer amplitude
    a4 = _uniform(rng, 0.5, math.pi - 0.5)
    b4 = _uniform(rng, 0.5, math.pi - 0.5)

    def f4(g4):
        d4 = TWO_PI - a4 - b4 - g4
        if not 0.2 < d4 < math.pi - 0.2:
            raise ValueError("bad delta")
        s = SideLengths(a4, b4, g4, d4)
        if not _ok(s):
            raise ValueError("invalid")
        c4 = _conic_data(s)
        if c4 is None:
            raise ValueError("not conic")
        return (c4.q**2).real - q1sq

    for g4 in _bracket_solve(f4, 0.3, math.pi - 0.3, 160):
        q4 = SideLengths(a4, b4, g4, TWO_PI - a4 - b4 - g4)
        if not _ok(q4):
            continue
        c4 = _conic_data(q4)
        if c4 is None:
            continue
        p4sq = (c4.p**2).real

        # Q3: match p and the phase chain t1 + t3 - t4 = 0 mod pi
        def resid(v):
            a3, b3, g3 = v
            d3 = TWO_PI - a3 - b3 - g3
            if not 0.1 < d3 < math.pi - 0.1:
                return np.full(3, 10.0)
            s = SideLengths(a3, b3, g3, d3)
            if not _ok(s):
                return np.full(3, 10.0)
            c3 = _conic_data(s)
            if c3 is None:
                return np.full(3, 10.0)
            combo = c1.t0.t0 + c3.t0.t0 - c4.t0.t0
            return np.array(
                [
                    (c3.p**2).real - p4sq,
                    math.remainder(combo.real, math.pi),
                    combo.imag,
                ]
            )

        v0 = rng.uniform(0.6, math.pi - 0.6, 3)
        try:
            sol = least_squares(
                resid, v0, bounds=(0.15, math.pi - 0.15), xtol=3e-16,
                ftol=3e-16, gtol=3e-16, max_nfev=300,
            )
        except ValueError:
            continue
        if np.max(np.abs(sol.fun)) > 1e-12:
            continue
        a3, b3, g3 = sol.x
        q3 = SideLengths(a3, b3, g3, TWO_PI - a3 - b3 - g3)
        c3 = _conic_data(q3)
        if c3 is None:
            continue
        q3sq = (c3.q**2).real
        p1sq = (c1.p**2).real
        if q3sq * p1sq <= 0:
            continue
        k2mag = math.sqrt(q3sq / p1sq)
        combo = c1.t0.t0 + c3.t0.t0 - c4.t0.t0
        parity = round(combo.real / math.pi) % 2
        kk = k2mag if parity == 0 else -k2mag
        y2 = TWO_PI - q1.delta - q3.delta - q4.delta
        y2 = math.pi - y2
        if not 0.15 < y2 < math.pi - 0.15:
            continue
        x2 = _anti_kappa_side(y2, kk)
        if x2 is None:
            continue
        p = KokoPoly(q1, _antiisogram(x2, y2), q3, q4)
        if all(_ok(q) for q in p.quads()):
            return p
    return None


def _gen_chimera_three_elliptics(rng) -> KokoPoly | None:
    q1 = _elliptic_quad(rng)
    if q1 is None:
        return None
    try:
        e1 = parametrize(q1)
    except (QuadError, EllipticError):
        return None
    if not isinstance(e1, EllipticParam):
        return None
    m1 = BarQuantities.of(q1).M
    lat = e1.t0.lattice
    twoK = 2.0 * e1.modulus.K

    def params_of(v):
        a, b, g, d = v
        s = SideLengths(a, b, g, d)
        if not _ok(s):
            return None, None
        try:
            if grashof_solutions(s):
                return None, None
            par = parametrize(s)
        except (QuadError, EllipticError):
            return None, None
        if not isinstance(par, EllipticParam) or par.family is not e1.family:
            return None, None
        return s, par

    def resid2(v):
        a4, b4, g4, d4, a3, b3, g3, d3 = v
        s4, p4 = params_of((a4, b4, g4, d4))
        s3, p3 = params_of((a3, b3, g3, d3))
        if s4 is None or s3 is None:
            return np.full(8, 10.0)
        m4 = BarQuantities.of(s4).M
        m3 = BarQuantities.of(s3).M
        combo = e1.t0.t0 + p3.t0.t0 - p4.t0.t0
        r0 = lat.reduce(combo)
        r1 = lat.reduce(combo - twoK)
        rr = r0 if abs(r0) <= abs(r1) else r1
        y2 = math.pi - (TWO_PI - q1.delta - d3 - d4)
        return np.array(
            [
                m4 - m1,
                m3 - m1,
                (p3.p**2 - p4.p**2).real,
                (p4.q**2 - e1.q**2).real,
                rr.real,
                rr.imag,
                min(0.0, y2 - 0.15) + max(0.0, y2 - (math.pi - 0.15)),
                (p3.p**2 - p4.p**2).imag,
            ]
        )

    v0 = np.concatenate(
        [
            np.array(q1.as_tuple()) + rng.uniform(-0.15, 0.15, 4),
            np.array(q1.as_tuple()) + rng.uniform(-0.15, 0.15, 4),
        ]
    )
    v0 = np.clip(v0, 0.35, math.pi - 0.35)
    try:
        sol = least_squares(
            resid2, v0, bounds=(0.3, math.pi - 0.3), xtol=3e-16, ftol=3e-16,
            gtol=3e-16, max_nfev=500,
        )
    except ValueError:
        return None
    if np.max(np.abs(sol.fun)) > 1e-12:
        return None
    a4, b4, g4, d4, a3, b3, g3, d3 = sol.x
    q4 = SideLengths(a4, b4, g4, d4)
    q3 = SideLengths(a3, b3, g3, d3)
    s3, p3 = params_of(sol.x[4:])
    s4, p4 = params_of(sol.x[:4])
    if s3 is None or s4 is None:
        return None
    q3sq = (p3.q**2).real
    p1sq = (e1.p**2).real
    if q3sq * p1sq <= 0:
        return None
    k2mag = math.sqrt(p1sq / q3sq)
    combo = e1.t0.t0 + p3.t0.t0 - p4.t0.t0
    near_zero = abs(lat.reduce(combo)) <= abs(lat.reduce(combo - twoK))
    kk = k2mag if near_zero else -k2mag
    y2 = math.pi - (TWO_PI - q1.delta - d3 - d4)
    if not 0.1 < y2 < math.pi - 0.1:
        return None
    x2 = _anti_kappa_side(y2, kk)
    if x2 is None:
        return None
    p = KokoPoly(q1, _antiisogram(x2, y2), q3, q4)
    return p if all(_ok(q) for q in p.quads()) else None


def _gen_chimera_delt_antidelt_ell(rng) -> KokoPoly | None:
    """Frontal deltoid and antideltoid over an sn-elliptic pair."""

    def params_of(v):
        a, b, g, d = v
        s = SideLengths(a, b, g, d)
        if not _ok(s):
            return None, None
        try:
            if grashof_solutions(s):
                return None, None
            par = parametrize(s)
        except (QuadError, EllipticError):
            return None, None
        if not isinstance(par, EllipticParam) or par.family.name != "SN":
            return None, None
        return s, par

    def resid(v):
        s3, p3 = params_of(v[:4])
        s4, p4 = params_of(v[4:])
        if s3 is None or s4 is None:
            return np.full(6, 10.0)
        m3 = BarQuantities.of(s3).M
        m4 = BarQuantities.of(s4).M
        lat = p3.t0.lattice
        mod = p3.modulus
        combo = p3.t0.t0 - p4.t0.t0
        best = None
        for l in range(4):
            rr = lat.reduce(combo - complex(l * mod.K, 0.5 * mod.Kp))
            if best is None or abs(rr) < abs(best):
                best = rr
        # the two deltoid factors must have opposite signs, so one elliptic
        # outer amplitude must be real and the other imaginary
        q3sq = (p3.q**2).real
        q4sq = (p4.q**2).real
        pen = 0.0 if q3sq * q4sq < 0 else 1.0
        return np.array(
            [
                m3 - m4,
                (p3.p**2 - p4.p**2).real,
                (p3.p**2 - p4.p**2).imag,
                best.real,
                best.imag,
                pen,
            ]
        )

    v0 = rng.uniform(0.5, math.pi - 0.5, 8)
    try:
        sol = least_squares(
            resid, v0, bounds=(0.35, math.pi - 0.35), xtol=3e-16, ftol=3e-16,
            gtol=3e-16, max_nfev=600,
        )
    except ValueError:
        return None
    if np.max(np.abs(sol.fun)) > 1e-12:
        return None
    s3, p3 = params_of(sol.x[:4])
    s4, p4 = params_of(sol.x[4:])
    if s3 is None or s4 is None:
        return None
    mod = p3.modulus
    lat = p3.t0.lattice
    combo = p3.t0.t0 - p4.t0.t0
    chosen = min(
        range(4), key=lambda l: abs(lat.reduce(combo - complex(l * mod.K, 0.5 * mod.Kp)))
    )
    k = mod.k
    qa = p4.q  # outer amplitude at the psi1 edge, shared with Q1
    qb = p3.q  # outer amplitude at the psi2 edge, shared with Q2
    sign_mu = 1.0 if chosen in (0, 2) else -1.0
    mu1_t = (sign_mu * qa**2 / k).real
    mu2_t = (sign_mu * qb**2 / k).real
    if mu1_t >= 0 or mu2_t <= 0:
        # Q1 must be a deltoid (negative factor), Q2 an antideltoid
        mu1_t, mu2_t = mu2_t, mu1_t
        s3, s4, p3, p4, qa, qb = s4, s3, p4, p3, qb, qa
        if mu1_t >= 0 or mu2_t <= 0:
            return None
    if chosen == 0:
        zz_target = 2.0 * (1.0 + k) / (k * math.sqrt(k)) * qa * qb
    elif chosen == 1:
        zz_target = 2j * (1.0 - k) / (k * math.sqrt(k)) * qa * qb
    elif chosen == 2:
        zz_target = -2.0 * (1.0 + k) / (k * math.sqrt(k)) * qa * qb
    else:
        zz_target = -2j * (1.0 - k) / (k * math.sqrt(k)) * qa * qb
    if abs(zz_target.imag) > 1e-9 * max(1.0, abs(zz_target)):
        return None
    zz_t = zz_target.real
    d34 = s3.delta + s4.delta

    roots = []
    for target_sign in (1.0, -1.0):
        roots += _bracket_solve(
            lambda a1: _f_delt_ell(a1, d34, mu1_t, mu2_t, target_sign * zz_t),
            0.2,
            math.pi - 0.2,
            200,
        )
    for a1 in roots:
        for b1 in _bracket_solve(
            lambda b: _mu_front_deltoid(a1, b) - mu1_t, 0.1, math.pi - 0.1, 120
        ):
            s1 = SideLengths(a1, b1, b1, a1)
            if not _ok(s1):
                continue
            a2 = a1 + d34 - math.pi
            if not 0.12 < a2 < math.pi - 0.12:
                continue
            for b2 in _bracket_solve(
                lambda b: (_mu_of(_front_antideltoid(a2, b)) or 1e9) - mu2_t,
                0.1,
                math.pi - 0.1,
                120,
            ):
                s2 = _front_antideltoid(a2, b2)
                if not _ok(s2):
                    continue
                # irreducibility of the deltoid pair
                amp1 = _deltoid_amp_sq(s1)
                amp2 = _deltoid_amp_sq(s2)
                if amp1 is None or amp2 is None or abs(amp1 - amp2) < 1e-3:
                    continue
                p = KokoPoly(s1, s2, s3, s4)
                if all(_ok(q) for q in p.quads()):
                    return p
    return None


def _mu_front_deltoid(a: float, b: float) -> float:
    mu = _mu_of(SideLengths(a, b, b, a))
    if mu is None:
        raise ValueError("mu undefined")
    return mu


def _f_delt_ell(a1, d34, mu1_t, mu2_t, zz_t):
    a2 = a1 + d34 - math.pi
    if not 0.12 < a2 < math.pi - 0.12:
        raise ValueError("a2 out of range")
    z1 = (mu1_t - 1.0) / math.cos(a1)
    z2 = (mu2_t - 1.0) / (-math.cos(a2))
    return z1 * z2 - zz_t


def _gen_chimera_ortho_antidelt_vs_conic_delt(rng) -> KokoPoly | None:
    # circumscribed conic Q3
    q3 = None
    for _ in range(30):
        a = _uniform(rng, 0.5, math.pi - 0.5)
        g = _uniform(rng, 0.5, math.pi - 0.5)
        d = _uniform(rng, 0.5, math.pi - 0.5)
        b = a + g - d
        if not 0.2 < b < math.pi - 0.2:
            continue
        cand = SideLengths(a, b, g, d)
        if not _ok(cand):
            continue
        try:
            if len(grashof_solutions(cand)) != 1:
                continue
        except QuadError:
            continue
        q3 = cand
        break
    if q3 is None:
        return None
    c3 = _conic_data(q3)
    if c3 is None or abs(math.remainder(c3.t0.t0.real, math.pi)) > 1e-9:
        return None
    p3sq = (c3.p**2).real
    # frontal deltoid Q4 (a4, b4, b4, a4): inner amplitude matches Q3
    a4 = _uniform(rng, 0.4, math.pi - 0.4)
    b4s = _bracket_solve(
        lambda b: (_deltoid_amp_sq(SideLengths(a4, b, b, a4)) or 1e9) - p3sq,
        0.12,
        math.pi - 0.12,
        160,
    )
    for b4 in b4s:
        q4 = SideLengths(a4, b4, b4, a4)
        if not _ok(q4):
            continue
        par4 = parametrize(q4)
        mu4 = _mu_of(q4)
        if mu4 is None or not isinstance(par4, DeltoidParam):
            continue
        a_4 = par4.sign * cmath.sqrt(complex(-par4.factor))
        for sgn in (1.0, -1.0):
            phase2 = cmath.exp(sgn * 2j * c3.t0.t0)
            if abs(phase2.imag) > 1e-9:
                continue
            mu1_t = mu4 * phase2.real
            t2c = 2j * a_4 * cmath.exp(sgn * 1j * c3.t0.t0) / c3.q
            if abs(t2c.imag) > 1e-9 * max(1.0, abs(t2c)):
                continue
            t2 = t2c.real

            def resid(v):
                al, be, ga, g2 = v
                cd = math.cos(al) * math.cos(ga) / math.cos(be)
                if abs(cd) >= 1.0 - 1e-9:
                    return np.full(4, 10.0)
                s1 = SideLengths(al, be, ga, math.acos(cd))
                if not _ok(s1):
                    return np.full(4, 10.0)
                try:
                    f1 = involution_factors(s1)
                except QuadError:
                    return np.full(4, 10.0)
                if f1.lam is None or f1.mu is None or f1.nu is None:
                    return np.full(4, 10.0)
                t = math.tan(g2) * (1.0 - f1.lam) / (1.0 + f1.lam)
                if t <= 0:
                    return np.full(4, 10.0)
                a2 = math.atan(t)
                s2 = _lat_antideltoid(a2, g2)
                if not _ok(s2):
                    return np.full(4, 10.0)
                f2 = involution_factors(s2)
                if f2.xi is None:
                    return np.full(4, 10.0)
                return np.array(
                    [
                        f1.mu - mu1_t,
                        min(abs(f1.nu - f2.xi * t2), abs(f1.nu + f2.xi * t2)),
                        s1.delta + s2.delta + q3.delta + q4.delta - TWO_PI,
                        0.0,
                    ]
                )

            v0 = rng.uniform(0.6, 1.4, 4)
            try:
                sol = least_squares(
                    resid, v0, bounds=(0.2, math.pi - 0.2), xtol=3e-16,
                    ftol=3e-16, gtol=3e-16, max_nfev=400,
                )
            except ValueError:
                continue
            if np.max(np.abs(sol.fun)) > 1e-12:
                continue
            al, be, ga, g2 = sol.x
            cd = math.cos(al) * math.cos(ga) / math.cos(be)
            q1 = SideLengths(al, be, ga, math.acos(cd))
            f1 = involution_factors(q1)
            t = math.tan(g2) * (1.0 - f1.lam) / (1.0 + f1.lam)
            q2 = _lat_antideltoid(math.atan(t), g2)
            try:
                if grashof_solutions(q1):
                    continue
            except QuadError:
                continue
            p = KokoPoly(q1, q2, q3, q4)
            if all(_ok(q) for q in p.quads()):
                return p
    return None


# ---------------------------------------------------------------------------
# rigid instances


def _gen_rigid(rng) -> KokoPoly | None:
    from .classifier import FlexStatus, classify_poly

    ds = rng.uniform(0.9, 1.7, 4)
    ds = ds / ds.sum() * TWO_PI
    quads = []
    for i in range(4):
        for _ in range(40):
            a, b, g = rng.uniform(0.5, 2.2, 3)
            s = SideLengths(float(a), float(b), float(g), float(ds[i]))
            if not _ok(s):
                continue
            # healthy margins from every sign equation
            margins = []
            for sa in (1, -1):
                for sb in (1, -1):
                    for sg in (1, -1):
                        v = s.alpha + sa * s.beta + sb * s.gamma + sg * s.delta
                        margins.append(abs(math.remainder(v, TWO_PI)))
            if min(margins) < 0.05:
                continue
            quads.append(s)
            break
        else:
            return None
    p = KokoPoly(*quads)
    verdict = classify_poly(p)
    if verdict.status is not FlexStatus.RIGID:
        return None
    return p


# ---------------------------------------------------------------------------
# public API


def _fail_conjugate_modular(rng):
    raise GenerationFailed(
        "the conjugate-modular amplitude ratios are imaginary, which no real "
        "spherical quadrilateral attains; the class contains no polyhedra"
    )


_GENERATORS = {
    "Isogonal": _gen_isogonal,
    "OrthodiagonalInvolutive": _gen_ortho_involutive,
    "OrthodiagonalAntiinvolutive": _gen_ortho_antiinvolutive,
    "EquimodularElliptic": _gen_equimodular_elliptic,
    "EquimodularConic": _gen_equimodular_conic,
    "LinearlyConjugateAntideltoids": _gen_lin_conj_antideltoids,
    "LinearlyConjugateConics": _gen_lin_conj_conics,
    "LinearlyConjugateElliptics": _gen_lin_conj_elliptics,
    "ChimeraConicDeltoid": _chimera_conic_deltoid,
    "ChimeraOrthoIsogram1": _gen_chimera_ortho_isogram_1,
    "ChimeraOrthoIsogram2": _gen_chimera_ortho_isogram_2,
    "ChimeraConicIsogram": lambda rng: _gen_chimera_conic_isogram(rng, False),
    "ChimeraConicAntiisogram": lambda rng: _gen_chimera_conic_isogram(rng, True),
    "ChimeraDeltAntideltEll": _gen_chimera_delt_antidelt_ell,
    "ChimeraConicDeltVsIsogramDelt": _gen_chimera_conic_delt_vs_isogram_delt,
    "ChimeraThreeConicsIsogram": _gen_chimera_three_conics,
    "ChimeraThreeEllipticsIsogram": _gen_chimera_three_elliptics,
    "ChimeraOrthoAntideltVsConicDelt": _gen_chimera_ortho_antidelt_vs_conic_delt,
    "Rigid": _gen_rigid,
}

_LINEAR_KINDS = ("Iso", "LatDelt", "FrontDelt", "Ell", "Con")


def gen(class_tag: str, seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> KokoPoly:
    """A polyhedron in the requested class, deterministic in the seed."""
    if class_tag in ("ConjugateModular1", "ConjugateModular2"):
        _fail_conjugate_modular(None)
    if class_tag.startswith("LinearCompound"):
        if "(" in class_tag:
            kind = class_tag.split("(")[1].split(",")[0].strip().rstrip(")")
        else:
            kind = _LINEAR_KINDS[seed % len(_LINEAR_KINDS)]
        return _retrying(lambda rng: _gen_linear_compound(rng, kind), seed)
    fn = _GENERATORS.get(class_tag)
    if fn is None:
        raise GenerationFailed(f"unknown class tag {class_tag!r}")
    return _retrying(fn, seed)


def _named_miura() -> KokoPoly:
    q = _antiisogram(math.pi / 3.0, math.pi / 2.0)
    return KokoPoly(q, q, q, q)


def _named_voss() -> KokoPoly:
    angs = [1.3, 1.5, 1.7, TWO_PI - 4.5]
    quads = [SideLengths(a, math.pi - a, a, math.pi - a) for a in angs]
    return KokoPoly(*quads)


def _named_tsurface() -> KokoPoly:
    return gen("OrthodiagonalInvolutive", seed=7)


def _named_origami() -> KokoPoly:
    # all perimeters 2*pi, deltas pi/2
    s = SideLengths(1.0, 1.6, 3.0 * math.pi / 2.0 - 2.6, math.pi / 2.0)
    return KokoPoly(s, s, s, s)


CATALOG = {
    "miura_ori": _named_miura,
    "voss_sample": _named_voss,
    "t_surface_sample": _named_tsurface,
    "origami_sample": _named_origami,
    "chimera_conic_deltoid": lambda: gen("ChimeraConicDeltoid", seed=1),
    "chimera_ortho_isogram_1": lambda: gen("ChimeraOrthoIsogram1", seed=1),
    "chimera_ortho_isogram_2": lambda: gen("ChimeraOrthoIsogram2", seed=1),
    "chimera_conic_isogram": lambda: gen("ChimeraConicIsogram", seed=1),
    "chimera_conic_antiisogram": lambda: gen("ChimeraConicAntiisogram", seed=1),
    "chimera_delt_antidelt_ell": lambda: gen("ChimeraDeltAntideltEll", seed=1),
    "chimera_conic_delt_vs_isogram_delt": lambda: gen(
        "ChimeraConicDeltVsIsogramDelt", seed=1
    ),
    "chimera_three_conics_isogram": lambda: gen("ChimeraThreeConicsIsogram", seed=1),
    "chimera_three_elliptics_isogram": lambda: gen(
        "ChimeraThreeEllipticsIsogram", seed=1
    ),
}


def named(name: str) -> KokoPoly:
    """Catalog lookup of canonical examples."""
    try:
        builder = CATALOG[name]
    except KeyError:
        raise GenerationFailed(f"unknown catalog name {name!r}") from None
    return builder()
