"""Command-line surface for classification, tracing, generation, and audits.

All commands read and write a single JSON schema: a polyhedron is the object
``{"q1": {"alpha": ..., "beta": ..., "gamma": ..., "delta": ...}, ...,
"q4": {...}}`` with angles in radians.  Machine-readable results go to
stdout, human diagnostics to stderr.  Exit codes for verdict commands:
0 flexible (including trivially), 1 rigid, 2 undetermined, 3 input error.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from dataclasses import replace

import click

from .classifier import (
    FlexStatus,
    KokoPoly,
    PolyError,
    classify_poly,
    validate_poly,
)
from .config import DEFAULT_TOL, Tolerances
from .coupling import analyze_coupling
from .flex_oracle import (
    BaseDegenerate,
    TraceOpts,
    is_flexible_numeric,
    measure_dihedrals,
    reconstruct_frames,
    resample_trace,
    write_obj,
    write_trace_json,
)
from .generators import CATALOG, GenerationFailed, gen, named
from .quad import QuadError, SideLengths, classify, conf_coeffs

EXIT_FLEXIBLE = 0
EXIT_RIGID = 1
EXIT_UNDETERMINED = 2
EXIT_INPUT = 3


def _tolerances(tol: float | None) -> Tolerances:
    if tol is None:
        return DEFAULT_TOL
    if tol <= 0:
        raise click.BadParameter("tolerance must be positive")
    return replace(DEFAULT_TOL, tol_class=tol, tol_residual=tol)


def _fail_input(msg: str) -> None:
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_INPUT)


def _load_poly(source: str | None, name: str | None) -> KokoPoly:
    """Polyhedron from a catalog name, a JSON file path, inline JSON, or stdin."""
    if name is not None:
        try:
            return named(name)
        except GenerationFailed as exc:
            _fail_input(str(exc))
    if source is None:
        _fail_input("no input: pass a JSON file, inline JSON, '-', or --name")
    if source == "-":
        raw = sys.stdin.read()
    elif source.lstrip().startswith("{"):
        raw = source
    else:
        try:
            with open(source) as fh:
                raw = fh.read()
        except OSError as exc:
            _fail_input(f"cannot read {source}: {exc}")
    try:
        data = json.loads(raw)
        p = KokoPoly.from_dict(data)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        _fail_input(f"malformed polyhedron JSON: {exc}")
    try:
        validate_poly(p)
    except (PolyError, QuadError) as exc:
        _fail_input(str(exc))
    return p


def _verdict_exit(status: FlexStatus) -> int:
    if status in (FlexStatus.FLEXIBLE, FlexStatus.TRIVIALLY_FLEXIBLE):
        return EXIT_FLEXIBLE
    if status is FlexStatus.RIGID:
        return EXIT_RIGID
    return EXIT_UNDETERMINED


@click.group()
def main() -> None:
    """Flexibility analysis of Kokotsakis polyhedra with quadrangular base."""


@main.command("classify")
@click.argument("source", required=False)
@click.option("--name", default=None, help="Catalog example instead of JSON input.")
@click.option("--tol", type=float, default=None, help="Class condition tolerance.")
def cmd_classify(source: str | None, name: str | None, tol: float | None) -> None:
    """Classify a polyhedron and print the verdict JSON."""
    p = _load_poly(source, name)
    verdict = classify_poly(p, _tolerances(tol))
    click.echo(json.dumps(verdict.to_dict(), indent=2))
    sys.exit(_verdict_exit(verdict.status))


@main.command("flex")
@click.argument("source", required=False)
@click.option("--name", default=None, help="Catalog example instead of JSON input.")
@click.option("--tol", type=float, default=None, help="Class condition tolerance.")
@click.option("--frames", type=int, default=24, show_default=True)
@click.option(
    "--out",
    "outdir",
    default="flex_out",
    show_default=True,
    help="Output directory for frame_%04d.obj and trace.json.",
)
def cmd_flex(
    source: str | None, name: str | None, tol: float | None, frames: int, outdir: str
) -> None:
    """Trace a motion and export an OBJ frame sequence."""
    if frames < 2:
        _fail_input("--frames must be at least 2")
    p = _load_poly(source, name)
    tols = _tolerances(tol)
    opts = TraceOpts(arc_stop=max(1.0, 4.0 * tols.arc_flexible), max_steps=4000)
    result = is_flexible_numeric(p, tol=tols, opts=opts)
    click.echo(f"oracle verdict: {result.verdict}", err=True)
    payload: dict = {"oracle": result.to_dict(), "frames_written": 0}
    if result.trace is not None and result.verdict == "Yes":
        os.makedirs(outdir, exist_ok=True)
        tr = resample_trace(result.trace, frames)
        try:
            meshes = reconstruct_frames(p, tr)
        except BaseDegenerate as exc:
            _fail_input(str(exc))
        for i, mesh in enumerate(meshes):
            write_obj(os.path.join(outdir, f"frame_{i:04d}.obj"), mesh)
        write_trace_json(os.path.join(outdir, "trace.json"), tr)
        payload["frames_written"] = len(meshes)
        payload["out"] = outdir
        click.echo(f"wrote {len(meshes)} frames to {outdir}", err=True)
    click.echo(json.dumps(payload, indent=2))
    if result.verdict == "Yes":
        sys.exit(EXIT_FLEXIBLE)
    sys.exit(EXIT_RIGID if result.verdict == "No" else EXIT_UNDETERMINED)


@main.command("gen")
@click.argument("class_tag")
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_gen(class_tag: str, seed: int) -> None:
    """Generate a polyhedron of the given class and print its JSON."""
    try:
        p = gen(class_tag, seed=seed)
    except GenerationFailed as exc:
        _fail_input(str(exc))
    click.echo(json.dumps(p.to_dict(), indent=2))


def _quad_report(s: SideLengths, tol: Tolerances) -> dict:
    report = {"sides": s.to_dict()}
    try:
        report["class"] = classify(s, tol).to_dict()
    except QuadError as exc:
        report["class_error"] = str(exc)
    return report


def _audit_figures(p: KokoPoly, result, outdir: str) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    written = []
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 8.0))
    for i, (s, ax) in enumerate(zip(p.quads(), axes.flat)):
        c = conf_coeffs(s)
        phis, psis = [], []
        for phi in np.linspace(-np.pi, np.pi, 720, endpoint=False):
            z = np.tan(phi / 2.0)
            for w in c.solve_w(z):
                if abs(w.imag) < 1e-9 * (1.0 + abs(w)):
                    phis.append(phi)
                    psis.append(2.0 * np.arctan(w.real))
        ax.plot(phis, psis, ".", markersize=1.5)
        ax.set_title(f"Q{i + 1} configuration curve")
        ax.set_xlabel("inner angle")
        ax.set_ylabel("outer angle")
    fig.tight_layout()
    path = os.path.join(outdir, "configuration_curves.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    if result.trace is not None and len(result.trace.states) > 1:
        arr = np.array([st.as_array() for st in result.trace.states])
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for k, label in enumerate(("psi1", "phi", "psi2", "theta")):
            ax.plot(arr[:, k], label=label)
        ax.set_xlabel("trace step")
        ax.set_ylabel("dihedral angle")
        ax.legend()
        fig.tight_layout()
        path = os.path.join(outdir, "trace_angles.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


@main.command("audit")
@click.argument("source", required=False)
@click.option("--name", default=None, help="Catalog example instead of JSON input.")
@click.option("--tol", type=float, default=None, help="Class condition tolerance.")
@click.option(
    "--out",
    "outdir",
    default=None,
    help="Also write report.json, couplings.csv, and figures here.",
)
def cmd_audit(
    source: str | None, name: str | None, tol: float | None, outdir: str | None
) -> None:
    """Full report: quad classes, couplings, classifier and oracle verdicts."""
    p = _load_poly(source, name)
    tols = _tolerances(tol)
    verdict = classify_poly(p, tols)
    result = is_flexible_numeric(p, tol=tols)
    quads = p.quads()
    pairs = [(0, 1), (1, 2), (2, 3), (3, 0)]
    couplings = []
    for i, j in pairs:
        rep = analyze_coupling(quads[i], quads[j], tols)
        couplings.append({"pair": [f"q{i + 1}", f"q{j + 1}"], **rep.to_dict()})
    classifier_flex = verdict.status in (
        FlexStatus.FLEXIBLE,
        FlexStatus.TRIVIALLY_FLEXIBLE,
    )
    agreement = (classifier_flex and result.verdict == "Yes") or (
        verdict.status is FlexStatus.RIGID and result.verdict == "No"
    )
    report = {
        "polyhedron": p.to_dict(),
        "quads": [_quad_report(s, tols) for s in quads],
        "couplings": couplings,
        "classifier": verdict.to_dict(),
        "oracle": result.to_dict(),
        "agreement": agreement,
    }
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "report.json"), "w") as fh:
            json.dump(report, fh, indent=2)
        with open(os.path.join(outdir, "couplings.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["pair", "multiplicity_1", "multiplicity_2", "reducible", "involutive"]
            )
            for c in couplings:
                writer.writerow(
                    [
                        "-".join(c["pair"]),
                        c["multiplicities"][0],
                        c["multiplicities"][1],
                        c["reducible"],
                        c["involutive"],
                    ]
                )
        figures = _audit_figures(p, result, outdir)
        report["figures"] = figures
        click.echo(f"wrote report and {len(figures)} figures to {outdir}", err=True)
    click.echo(json.dumps(report, indent=2))
    sys.exit(_verdict_exit(verdict.status))


@main.command("catalog")
@click.option("--name", default=None, help="Print this example's JSON.")
def cmd_catalog(name: str | None) -> None:
    """List catalog names, or print one example."""
    if name is None:
        click.echo(json.dumps(sorted(CATALOG), indent=2))
        return
    try:
        p = named(name)
    except GenerationFailed as exc:
        _fail_input(str(exc))
    click.echo(json.dumps(p.to_dict(), indent=2))


if __name__ == "__main__":
    main()
