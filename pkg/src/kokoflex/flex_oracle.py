"""Numerical flexion oracle: solve, trace, and reconstruct the linkage.

The four dihedral angles along the interior edges of the polyhedron satisfy
one biquadratic per corner quadrilateral.  This module finds real solutions
of the coupled system, follows the solution set by pseudo-arclength
continuation, decides flexibility from the traced arc length, and rebuilds
3D frames of the deforming polyhedron for export.

Everything here is independent of the symbolic classifier: agreement of the
two on a shared corpus is the main cross-check of the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .classifier import KokoPoly, validate_poly
from .config import DEFAULT_TOL, Tolerances
from .quad import ConfCoeffs, conf_coeffs

TWO_PI = 2.0 * math.pi


class SingularJacobian(RuntimeError):
    """Jacobian rank collapsed below the branch-point case."""


class BaseDegenerate(ValueError):
    """The base angles admit no planar quadrilateral with positive edges."""


# ---------------------------------------------------------------------------
# the angle system


@dataclass(frozen=True)
class LinkageState:
    """One configuration of the linkage, in dihedral angle coordinates."""

    psi1: float
    phi: float
    psi2: float
    theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.psi1, self.phi, self.psi2, self.theta])

    @classmethod
    def from_array(cls, x) -> "LinkageState":
        return cls(*(float(v) % TWO_PI for v in x))

    def to_dict(self) -> dict:
        return {
            "psi1": self.psi1,
            "phi": self.phi,
            "psi2": self.psi2,
            "theta": self.theta,
        }


def _eval_grad(c: ConfCoeffs, phi: float, psi: float) -> tuple[float, float, float]:
    """Angle-form biquadratic value and its two partial derivatives."""
    sz, cz = math.sin(0.5 * phi), math.cos(0.5 * phi)
    sw, cw = math.sin(0.5 * psi), math.cos(0.5 * psi)
    sz2, cz2, sw2, cw2 = sz * sz, cz * cz, sw * sw, cw * cw
    val = (
        c.c22 * sz2 * sw2
        + c.c20 * sz2 * cw2
        + c.c02 * cz2 * sw2
        + 2.0 * c.c11 * sz * cz * sw * cw
        + c.c00 * cz2 * cw2
    )
    dphi = 0.5 * math.sin(phi) * (
        c.c22 * sw2 + c.c20 * cw2 - c.c02 * sw2 - c.c00 * cw2
    ) + c.c11 * sw * cw * math.cos(phi)
    dpsi = 0.5 * math.sin(psi) * (
        c.c22 * sz2 + c.c02 * cz2 - c.c20 * sz2 - c.c00 * cz2
    ) + c.c11 * sz * cz * math.cos(psi)
    return val, dphi, dpsi


@dataclass
class LinkageSystem:
    """The four coupled biquadratics in angle coordinates.

    Equation order: Q1(phi, psi1), Q2(phi, psi2), Q3(theta, psi2),
    Q4(theta, psi1).  Variable order: (psi1, phi, psi2, theta).
    """

    coeffs: list[ConfCoeffs]
    scales: list[float]

    # (inner variable index, outer variable index) per equation
    _PAIRS = ((1, 0), (1, 2), (3, 2), (3, 0))

    def residual(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(4)
        for i, (ii, oi) in enumerate(self._PAIRS):
            out[i] = _eval_grad(self.coeffs[i], x[ii], x[oi])[0] / self.scales[i]
        return out

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        jac = np.zeros((4, 4))
        for i, (ii, oi) in enumerate(self._PAIRS):
            _, dphi, dpsi = _eval_grad(self.coeffs[i], x[ii], x[oi])
            jac[i, ii] = dphi / self.scales[i]
            jac[i, oi] = dpsi / self.scales[i]
        return jac


def build_system(p: KokoPoly) -> LinkageSystem:
    """Assemble the coupled system from the four corner quadrilaterals."""
    validate_poly(p)
    coeffs = [conf_coeffs(q) for q in p.quads()]
    scales = [max(c.scale(), 1e-300) for c in coeffs]
    return LinkageSystem(coeffs=coeffs, scales=scales)


# ---------------------------------------------------------------------------
# finding solutions


def _solve_outer_angles(c: ConfCoeffs, phi: float) -> list[float]:
    """Real angles psi with the biquadratic zero at fixed inner angle phi."""
    sz, cz = math.sin(0.5 * phi), math.cos(0.5 * phi)
    a = c.c22 * sz * sz + c.c02 * cz * cz
    b = c.c11 * sz * cz
    cc = c.c20 * sz * sz + c.c00 * cz * cz
    scale = max(abs(a), abs(b), abs(cc), 1e-300)
    out: list[float] = []
    if abs(a) < 1e-12 * scale:
        out.append(math.pi)
        if abs(b) > 1e-12 * scale:
            out.append(2.0 * math.atan(-cc / (2.0 * b)))
        return out
    disc = b * b - a * cc
    if disc < 0.0:
        return out
    r = math.sqrt(disc)
    for t in ((-b + r) / a, (-b - r) / a):
        out.append(2.0 * math.atan(t))
    return out


def _newton(sys: LinkageSystem, x0: np.ndarray, max_iter: int = 40) -> np.ndarray | None:
    """Damped Newton with a least-squares step; None if it fails to converge."""
    x = x0.copy()
    res = sys.residual(x)
    nrm = float(np.max(np.abs(res)))
    for _ in range(max_iter):
        if nrm < 1e-13:
            return x
        jac = sys.jacobian(x)
        step, *_ = np.linalg.lstsq(jac, -res, rcond=1e-12)
        lam = 1.0
        for _ in range(20):
            xn = x + lam * step
            rn = sys.residual(xn)
            nn = float(np.max(np.abs(rn)))
            if nn < nrm:
                x, res, nrm = xn, rn, nn
                break
            lam *= 0.5
        else:
            return None
    return x if nrm < 1e-12 else None


def _find_starts(
    p: KokoPoly, grid: int = 24, tol: Tolerances = DEFAULT_TOL
) -> tuple[list[LinkageState], int]:
    """Distinct refined on-curve states and the count of seeded grid cells.

    Sweeps phi over a grid, solves the two quadrilaterals touching phi for
    their outer angles, the third for theta, and scores the remaining
    equation; every candidate is polished by damped Newton.
    """
    sys = build_system(p)
    starts: list[LinkageState] = []
    arrays: list[np.ndarray] = []
    seeded = 0
    for k in range(grid):
        phi = (k + 0.5) * TWO_PI / grid
        psi1s = _solve_outer_angles(sys.coeffs[0], phi)
        psi2s = _solve_outer_angles(sys.coeffs[1], phi)
        cell_hit = False
        for psi1 in psi1s:
            for psi2 in psi2s:
                thetas = _solve_outer_angles(
                    # Q3 relates (theta, psi2); its inner variable is theta,
                    # so solve the transposed problem by swapping roles
                    _transpose(sys.coeffs[2]),
                    psi2,
                )
                for theta in thetas:
                    x0 = np.array([psi1, phi, psi2, theta])
                    if abs(sys.residual(x0)[3]) > 0.5:
                        continue
                    x = _newton(sys, x0)
                    if x is None:
                        continue
                    x = np.mod(x, TWO_PI)
                    if any(_torus_dist(x, y) < 1e-6 for y in arrays):
                        cell_hit = True
                        continue
                    arrays.append(x)
                    starts.append(LinkageState.from_array(x))
                    cell_hit = True
        if cell_hit:
            seeded += 1
    return starts, seeded


def _transpose(c: ConfCoeffs) -> ConfCoeffs:
    return ConfCoeffs(c22=c.c22, c20=c.c02, c02=c.c20, c11=c.c11, c00=c.c00)


def _torus_dist(x: np.ndarray, y: np.ndarray) -> float:
    d = np.abs(np.remainder(x - y + math.pi, TWO_PI) - math.pi)
    return float(np.max(d))


def find_start(
    p: KokoPoly, attempts: int = 24, tol: Tolerances = DEFAULT_TOL
) -> LinkageState | None:
    """First on-curve state found by the grid sweep, or None."""
    starts, _ = _find_starts(p, grid=max(4, attempts), tol=tol)
    return starts[0] if starts else None


# ---------------------------------------------------------------------------
# continuation


@dataclass
class TraceOpts:
    h0: float = 1e-3
    h_min: float = 1e-6
    h_max: float = 1e-2
    max_steps: int = 4000
    closure_tol: float = 1e-6
    residual_tol: float = 1e-10
    branch_tol: float = 1e-7
    arc_stop: float | None = None


@dataclass
class FlexTrace:
    states: list[LinkageState]
    arc_length: float
    closed: bool
    residuals: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "states": [s.to_dict() for s in self.states],
            "residuals": self.residuals,
            "arc_length": self.arc_length,
            "closed": self.closed,
        }


def _tangent(
    jac: np.ndarray, prev: np.ndarray | None, branch_tol: float
) -> np.ndarray:
    """Unit kernel direction of the Jacobian, aligned with the previous one.

    At a branch point (two small singular values) the kernel vector closest
    in direction to the previous tangent is taken, which steps traces around
    the crossing instead of stopping there.
    """
    _, svals, vt = np.linalg.svd(jac)
    candidates = [vt[3]]
    if svals[2] < branch_tol * max(1.0, svals[0]):
        candidates.append(vt[2])
    if prev is None:
        return candidates[0]
    best = max(candidates, key=lambda v: abs(float(v @ prev)))
    return best if float(best @ prev) >= 0.0 else -best


def _correct(
    sys: LinkageSystem, x_pred: np.ndarray, tang: np.ndarray, opts: TraceOpts
) -> np.ndarray | None:
    """Newton corrector in the hyperplane orthogonal to the tangent."""
    x = x_pred.copy()
    for _ in range(12):
        res = sys.residual(x)
        extra = float(tang @ (x - x_pred))
        nrm = max(float(np.max(np.abs(res))), abs(extra))
        if nrm < opts.residual_tol:
            return x
        jac = np.vstack([sys.jacobian(x), tang])
        rhs = -np.concatenate([res, [extra]])
        step, *_ = np.linalg.lstsq(jac, rhs, rcond=1e-12)
        if not np.all(np.isfinite(step)):
            return None
        x = x + step
    res = sys.residual(x)
    return x if float(np.max(np.abs(res))) < opts.residual_tol else None


def trace(
    p: KokoPoly,
    start: LinkageState,
    opts: TraceOpts | None = None,
    direction: float = 1.0,
) -> FlexTrace:
    """Pseudo-arclength continuation from an on-curve start.

    Stops on closure (return to the start), a stall (isolated solution), or
    the step cap.  Angles live on the torus, so there is no domain exit.
    """
    opts = opts or TraceOpts()
    sys = build_system(p)
    x0 = start.as_array()
    x = _newton(sys, x0)
    if x is None:
        return FlexTrace(states=[start], arc_length=0.0, closed=False, residuals=[])
    states = [LinkageState.from_array(x)]
    residuals = [float(np.max(np.abs(sys.residual(x))))]
    arc = 0.0
    h = opts.h0
    prev_t: np.ndarray | None = None
    stall = 0
    for step_no in range(opts.max_steps):
        jac = sys.jacobian(x)
        tang = _tangent(jac, prev_t, opts.branch_tol)
        if prev_t is None:
            tang = direction * tang
        xn = None
        while h >= opts.h_min:
            xn = _correct(sys, x + h * tang, tang, opts)
            if xn is not None:
                break
            h *= 0.5
        if xn is None:
            break
        moved = _torus_dist(xn, x)
        arc += float(np.linalg.norm(
            np.remainder(xn - x + math.pi, TWO_PI) - math.pi
        ))
        if moved < 1e-3 * h:
            stall += 1
            if stall >= 5:
                break
        else:
            stall = 0
        prev_t = tang
        x = xn
        states.append(LinkageState.from_array(x))
        residuals.append(float(np.max(np.abs(sys.residual(x)))))
        h = min(opts.h_max, 1.4 * h)
        if opts.arc_stop is not None and arc > opts.arc_stop:
            break
        if step_no > 10 and _torus_dist(x, x0) < opts.closure_tol and arc > 10 * opts.h0:
            return FlexTrace(states=states, arc_length=arc, closed=True, residuals=residuals)
    return FlexTrace(states=states, arc_length=arc, closed=False, residuals=residuals)


def constant_coordinates(tr: FlexTrace, tol: float = 1e-9) -> list[str]:
    """Coordinates that stay constant along the trace (a pinned-angle flex)."""
    if len(tr.states) < 2:
        return []
    arr = np.array([s.as_array() for s in tr.states])
    names = ["psi1", "phi", "psi2", "theta"]
    out = []
    for j, name in enumerate(names):
        col = arr[:, j]
        spread = np.max(np.abs(np.remainder(col - col[0] + math.pi, TWO_PI) - math.pi))
        if spread < tol:
            out.append(name)
    return out


# ---------------------------------------------------------------------------
# flexibility decision


@dataclass
class OracleResult:
    verdict: str  # "Yes" | "No" | "Inconclusive"
    trace: FlexTrace | None
    n_starts: int
    best_arc: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "n_starts": self.n_starts,
            "best_arc": self.best_arc,
        }


def is_flexible_numeric(
    p: KokoPoly,
    grid: int = 24,
    max_traces: int = 12,
    tol: Tolerances = DEFAULT_TOL,
    opts: TraceOpts | None = None,
) -> OracleResult:
    """Decide flexibility by continuation from grid-found solutions.

    Yes when some trace accumulates more than the flexibility arc length;
    No when the grid sweep was dense and every start stalls (or the system
    has no real solutions at all); Inconclusive in between.
    """
    starts, seeded = _find_starts(p, grid=grid, tol=tol)
    if opts is None:
        opts = TraceOpts(arc_stop=2.0 * tol.arc_flexible, max_steps=600)
    best_arc = 0.0
    best_trace: FlexTrace | None = None
    for start in starts[:max_traces]:
        for direction in (1.0, -1.0):
            tr = trace(p, start, opts, direction=direction)
            if tr.arc_length > best_arc:
                best_arc, best_trace = tr.arc_length, tr
            if best_arc > tol.arc_flexible:
                return OracleResult("Yes", best_trace, len(starts), best_arc)
    if not starts:
        return OracleResult("No", None, 0, 0.0)
    if best_arc < tol.arc_rigid:
        return OracleResult("No", best_trace, len(starts), best_arc)
    return OracleResult("Inconclusive", best_trace, len(starts), best_arc)


# ---------------------------------------------------------------------------
# 3D reconstruction


@dataclass
class Mesh:
    """Vertices A1..A4, B1..B4, C1..C4 and faces of one frame."""

    vertices: np.ndarray  # (12, 3)
    faces: list[list[int]]


def _base_polygon(deltas: list[float]) -> list[np.ndarray]:
    """Planar quadrilateral with the given interior angles, first edge unit."""
    h = [0.0]
    for i in range(1, 4):
        h.append(h[-1] + math.pi - deltas[i])
    e = [np.array([math.cos(a), math.sin(a)]) for a in h]
    # 1*e0 + L2 e1 + L3 e2 + L4 e3 = 0, one free ratio fixed by positivity
    mat = np.column_stack([e[1], e[2]])
    det = float(np.linalg.det(mat))
    best = None
    if abs(det) > 1e-12:
        for l4 in np.linspace(0.05, 25.0, 600):
            rhs = -e[0] - l4 * e[3]
            l2, l3 = np.linalg.solve(mat, rhs)
            m = min(l2, l3, l4)
            if best is None or m > best[0]:
                best = (m, l2, l3, l4)
    if best is None or best[0] <= 1e-6:
        raise BaseDegenerate(f"no positive edge lengths for base angles {deltas}")
    _, l2, l3, l4 = best
    lengths = [1.0, float(l2), float(l3), float(l4)]
    pts = [np.array([0.0, 0.0])]
    for i in range(3):
        pts.append(pts[-1] + lengths[i] * e[i])
    verts = [np.array([q[0], q[1], 0.0]) for q in pts]
    return verts


def _wing_vectors(
    p: KokoPoly, base: list[np.ndarray], state: LinkageState, flip: bool
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Unit edge vectors B - A and C - A at each base vertex.

    The B edge separates the side face over the outgoing base edge from the
    corner face, the C edge the corner face from the side face over the
    incoming base edge.
    """
    up = np.array([0.0, 0.0, -1.0 if flip else 1.0])
    # the linkage angles are the spherical-image angles, which complement the
    # geometric dihedral angles at the base edges
    dihedral = {
        0: math.pi - state.phi,
        1: math.pi - state.psi2,
        2: math.pi - state.theta,
        3: math.pi - state.psi1,
    }
    quads = p.quads()
    fs, gs = [], []
    for i in range(4):
        a = base[i]
        t_next = base[(i + 1) % 4] - a
        t_next /= np.linalg.norm(t_next)
        t_prev = base[(i - 1) % 4] - a
        t_prev /= np.linalg.norm(t_prev)
        m_next = np.cross(up, t_next)
        m_prev = -np.cross(up, t_prev)
        th_next = dihedral[i]
        th_prev = dihedral[(i - 1) % 4]
        d_next = math.cos(th_next) * m_next + math.sin(th_next) * up
        d_prev = math.cos(th_prev) * m_prev + math.sin(th_prev) * up
        s = quads[i]
        if i % 2 == 0:
            ang_next, ang_prev = s.alpha, s.gamma
        else:
            ang_next, ang_prev = s.gamma, s.alpha
        fs.append(math.cos(ang_next) * t_next + math.sin(ang_next) * d_next)
        gs.append(math.cos(ang_prev) * t_prev + math.sin(ang_prev) * d_prev)
    return fs, gs


def _corner_residual(p: KokoPoly, fs, gs) -> float:
    res = 0.0
    for i in range(4):
        cosb = float(np.clip(np.dot(fs[i], gs[i]), -1.0, 1.0))
        res = max(res, abs(math.acos(cosb) - p.quads()[i].beta))
    return res


def reconstruct_frames(
    p: KokoPoly, tr: FlexTrace, angle_tol: float = 1e-7
) -> list[Mesh]:
    """One 12-vertex mesh per traced state.

    The base is a fixed planar quadrilateral with the interior angles
    delta_i and unit first edge; the wings are erected from the planar
    angles and the traced dihedral angles.  States whose wings fail the
    corner-angle closure are skipped (they belong to the mirror branch).
    """
    validate_poly(p)
    deltas = [q.delta for q in p.quads()]
    base = _base_polygon(deltas)
    area2 = 0.0
    for i in range(4):
        a, b = base[i], base[(i + 1) % 4]
        area2 += a[0] * b[1] - b[0] * a[1]
    flip = area2 < 0.0
    faces = [
        [0, 1, 2, 3],  # base
        [0, 1, 9, 4],  # side over A1A2: A1, A2, C2, B1
        [1, 2, 10, 5],
        [2, 3, 11, 6],
        [3, 0, 8, 7],
        [0, 4, 8],  # corner at A1: A1, B1, C1
        [1, 5, 9],
        [2, 6, 10],
        [3, 7, 11],
    ]
    meshes = []
    for st in tr.states:
        candidates = [
            st,
            LinkageState(
                TWO_PI - st.psi1, TWO_PI - st.phi, TWO_PI - st.psi2, TWO_PI - st.theta
            ),
        ]
        best = None
        for cand in candidates:
            fs, gs = _wing_vectors(p, base, cand, flip)
            r = _corner_residual(p, fs, gs)
            if best is None or r < best[0]:
                best = (r, fs, gs)
        r, fs, gs = best
        if r > angle_tol:
            continue
        verts = np.zeros((12, 3))
        for i in range(4):
            verts[i] = base[i]
            verts[4 + i] = base[i] + fs[i]
            verts[8 + i] = base[i] + gs[i]
        meshes.append(Mesh(vertices=verts, faces=[list(f) for f in faces]))
    return meshes


def measure_dihedrals(p: KokoPoly, mesh: Mesh) -> LinkageState:
    """Dihedral angles at the four base edges, read off the mesh."""
    v = mesh.vertices
    angles = []
    for i in range(4):
        a, b = v[i], v[(i + 1) % 4]
        edge = b - a
        edge /= np.linalg.norm(edge)
        inside = v[(i + 2) % 4] - a
        base_dir = inside - np.dot(inside, edge) * edge
        base_dir /= np.linalg.norm(base_dir)
        wing = v[4 + i] - a  # B_i lies in the side face over this edge
        wing_dir = wing - np.dot(wing, edge) * edge
        nw = np.linalg.norm(wing_dir)
        if nw < 1e-12:
            # B edge parallel to the base edge; use the far wing point
            wing = v[8 + (i + 1) % 4] - a
            wing_dir = wing - np.dot(wing, edge) * edge
            nw = np.linalg.norm(wing_dir)
        wing_dir /= nw
        cosang = float(np.clip(np.dot(base_dir, wing_dir), -1.0, 1.0))
        ang = math.acos(cosang)
        if float(np.dot(np.cross(base_dir, wing_dir), edge)) < 0.0:
            ang = TWO_PI - ang
        angles.append((math.pi - ang) % TWO_PI)
    phi, psi2, theta, psi1 = angles
    return LinkageState(psi1=psi1, phi=phi, psi2=psi2, theta=theta)


def planarity_residual(mesh: Mesh) -> float:
    """Largest out-of-plane deviation over all faces, relative to edge 1."""
    worst = 0.0
    for f in mesh.faces:
        pts = mesh.vertices[f]
        if len(f) < 4:
            continue
        centered = pts - pts.mean(axis=0)
        svals = np.linalg.svd(centered, compute_uv=False)
        worst = max(worst, float(svals[-1]))
    return worst


# ---------------------------------------------------------------------------
# export


def resample_trace(tr: FlexTrace, frames: int) -> FlexTrace:
    """Evenly spaced (by arc length) subsequence with the endpoints kept."""
    if len(tr.states) <= frames:
        return tr
    arr = np.array([s.as_array() for s in tr.states])
    seg = np.linalg.norm(
        np.remainder(np.diff(arr, axis=0) + math.pi, TWO_PI) - math.pi, axis=1
    )
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, cum[-1], frames)
    idx = sorted({int(np.searchsorted(cum, t)) for t in targets} | {0, len(tr.states) - 1})
    idx = [min(i, len(tr.states) - 1) for i in idx]
    return FlexTrace(
        states=[tr.states[i] for i in idx],
        arc_length=tr.arc_length,
        closed=tr.closed,
        residuals=[tr.residuals[i] for i in idx] if tr.residuals else [],
    )


def write_obj(path: str, mesh: Mesh) -> None:
    lines = ["# kokoflex frame"]
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.12f} {v[1]:.12f} {v[2]:.12f}")
    for f in mesh.faces:
        lines.append("f " + " ".join(str(i + 1) for i in f))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_trace_json(path: str, tr: FlexTrace) -> None:
    with open(path, "w") as fh:
        json.dump(tr.to_dict(), fh, indent=2)
