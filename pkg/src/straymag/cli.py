"""Command-line front end: ``straymag field|squid|epimatch|validate``.

Exit codes: 0 success, 1 a validation check failed, 2 usage or input-file
error, 3 the computation itself failed.  Data outputs (CSV and JSON) are
byte-reproducible; every invocation also writes a run report (command, input
digests, outputs, wall time) next to the primary output, or to standard error
when writing to standard output.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import time
import warnings

import numpy as np

from . import epitaxy as ep
from . import squid as sq
from .config import parse_scene, parse_sensor
from .errors import (
    DidNotConverge,
    ParseError,
    SchemaError,
    StrayMagError,
    UnknownMaterial,
    UnknownPair,
    ValidationError,
)
from .magnetostatics import sample_grid, sample_line
from .scene import NM, UM

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_EVAL = 0, 1, 2, 3

FIELD_COLUMNS = ("s_um", "x_um", "y_um", "z_um", "Bx_T", "By_T", "Bz_T", "Bmag_T", "Bpar_T")


class UsageError(Exception):
    pass


def fmt(x):
    """Shortest round-trip decimal for a float."""
    return repr(float(x))


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    """Collects inputs/outputs for the run report."""

    def __init__(self, argv):
        self.argv = list(argv)
        self.inputs = {}
        self.outputs = []
        self.checks = []
        self.t0 = time.perf_counter()

    def input(self, path):
        if path and os.path.exists(path):
            self.inputs[path] = _digest(path)
        return path

    def write(self, path, text):
        """Write ``text`` to ``path`` (or stdout for ``None``/``-``)."""
        if path in (None, "-"):
            sys.stdout.write(text)
            return
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.outputs.append(path)

    def report(self, status, path=None, error=None):
        doc = {
            "command": ["straymag"] + self.argv,
            "exit_code": status,
            "inputs": [{"path": p, "sha256": d} for p, d in self.inputs.items()],
            "outputs": list(self.outputs),
            "checks": [{"name": f"{c.suite}/{c.name}", "passed": c.passed} for c in self.checks],
            "wall_time_s": round(time.perf_counter() - self.t0, 3),
        }
        if error:
            doc["error"] = error
        if path is None and self.outputs:
            path = self.outputs[0] + ".run.json"
        if path in (None, "-"):
            sys.stderr.write(json.dumps(doc) + "\n")
        else:
            with open(path, "w") as fh:
                fh.write(dump_json(doc))


# --------------------------------------------------------------------------
# field


def _field_csv(positions, B, axis, origin):
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    s = np.linalg.norm(positions - origin, axis=1)
    bmag = np.sqrt(np.sum(B * B, axis=1))
    bpar = B @ axis
    out = io.StringIO()
    out.write(",".join(FIELD_COLUMNS) + "\n")
    for k in range(len(positions)):
        row = (s[k] / UM, *(positions[k] / UM), *B[k], bmag[k], bpar[k])
        out.write(",".join(fmt(v) for v in row) + "\n")
    return out.getvalue()


def cmd_field(args, run):
    scene = parse_scene(run.input(args.scene))
    axis = np.array(args.axis, float)
    if not np.any(axis):
        raise UsageError("--axis must be non-zero")
    if args.mode == "line":
        if args.samples < 2:
            raise UsageError("--samples must be >= 2")
        start, stop = np.array(args.start) * UM, np.array(args.stop) * UM
        samples = sample_line(scene, start, stop, args.samples, axis, args.threads)
        pos = np.array([s.position for s in samples])
        B = np.array([s.B for s in samples])
        origin = start
    else:
        if args.n1 < 2 or args.n2 < 2:
            raise UsageError("--n1 and --n2 must be >= 2")
        origin = np.array(args.origin) * UM
        grid = sample_grid(scene, origin, np.array(args.e1) * UM, np.array(args.e2) * UM, args.n1, args.n2, axis, args.threads)
        pos, B = grid.positions.reshape(-1, 3), grid.B.reshape(-1, 3)
    run.write(args.out, _field_csv(pos, B, axis, origin))
    return EXIT_OK


# --------------------------------------------------------------------------
# squid


def _sensor(args, run):
    if args.sensor:
        sensor = parse_sensor(run.input(args.sensor))
    else:
        if args.radius_nm is None or args.height_nm is None:
            raise UsageError("give --sensor FILE or both --radius-nm and --height-nm")
        try:
            sensor = sq.SensorSpec(args.radius_nm * NM, args.height_nm * NM)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if args.psf:
        sensor = sq.SensorSpec(sensor.pickup_radius, sensor.scan_height, sq.load_psf_csv(run.input(args.psf)))
    return sensor


def _scan_grid(args):
    if args.n1 < 2 or args.n2 < 2:
        raise UsageError("--n1 and --n2 must be >= 2")
    origin = np.array([*args.origin, 0.0]) * UM
    e1 = np.array([*args.e1, 0.0]) * UM
    e2 = np.array([*args.e2, 0.0]) * UM
    return origin, e1, e2, args.n1, args.n2


def _sensor_dict(sensor):
    return {"pickup_radius_nm": round(sensor.pickup_radius / NM, 6), "scan_height_nm": round(sensor.scan_height / NM, 6),
            "psf": sensor.psf is not None}


def cmd_squid(args, run):
    sensor = _sensor(args, run)
    if args.action == "scan":
        scene = parse_scene(run.input(args.scene))
        img = sq.scan_image(scene, sensor, *_scan_grid(args), threads=args.threads)
        if args.out in (None, "-"):
            raise UsageError("squid scan needs --out for the image CSV")
        buf = io.StringIO()
        pos = img.positions().reshape(-1, 3)
        buf.write("x_um,y_um,flux_mPhi0\n")
        for p, f in zip(pos, img.flux.reshape(-1)):
            buf.write(f"{fmt(p[0] / UM)},{fmt(p[1] / UM)},{fmt(f * 1000)}\n")
        run.write(args.out, buf.getvalue())
        summary = {
            "p2p_mPhi0": sq.peak_to_peak(img),
            "max_mPhi0": float(img.flux.max() * 1000),
            "min_mPhi0": float(img.flux.min() * 1000),
            "n1": img.n1,
            "n2": img.n2,
            "pitch_um": [p / UM for p in img.pitch],
            "sensor": _sensor_dict(sensor),
            "image": args.out,
        }
        run.write(args.summary or os.path.splitext(args.out)[0] + ".summary.json", dump_json(summary))
    elif args.action == "fit":
        img = sq.read_image_csv(run.input(args.image), sensor.scan_height)
        init = sq.DipoleFit(np.array(args.init_position) * UM, np.array(args.init_moment, float), 0.0)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DidNotConverge)
            fit = sq.fit_dipole(img, sensor, init, max_iter=args.max_iter)
        for w in caught:
            sys.stderr.write(f"warning: {w.message}\n")
        doc = {
            "position_um": [float(v / UM) for v in fit.position],
            "moment_Am2": [float(v) for v in fit.moment],
            "moment_norm_Am2": float(np.linalg.norm(fit.moment)),
            "residual_norm_Phi0": fit.residual_norm,
            "initial_residual_Phi0": fit.initial_residual,
            "converged": fit.converged,
            "iterations": fit.iterations,
        }
        run.write(args.out, dump_json(doc))
    else:
        scene = parse_scene(run.input(args.scene))
        m_s = sq.estimate_moment(args.p2p, scene, sensor, *_scan_grid(args))
        doc = {"p2p_target_mPhi0": args.p2p, "m_s_muB_per_um": m_s,
               "template_m_s_muB_per_um": scene.magnets[0].m_s_muB_per_um if scene.magnets else None}
        run.write(args.out, dump_json(doc))
    return EXIT_OK


# --------------------------------------------------------------------------
# epitaxy


def _materials(args, run):
    if getattr(args, "lattice", None):
        return ep.load_lattices(run.input(args.lattice))
    return None


def cmd_epimatch(args, run):
    materials = _materials(args, run)
    if args.action == "report":
        rep = ep.interface_report(args.pair, materials)
        doc, table = rep.to_dict(), rep.table()
    else:
        table_ = materials or ep.MATERIALS
        lat_f, lat_s = ep.lattice(args.film, table_), ep.lattice(args.substrate, table_)
        try:
            dir_f, dir_s = ep.parse_direction(args.film_dir), ep.parse_direction(args.sub_dir)
            convs = [(ep.parse_convention(a), ep.parse_convention(b)) for a, b in
                     (c.split("/") if "/" in c else (c, c) for c in (args.convention or ["shortest_translation"]))]
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if args.nmax < 1:
            raise UsageError("--nmax must be >= 1")
        matches = ep.search_matches(lat_f, dir_f, lat_s, dir_s, args.nmax, convs)[: args.top]
        doc = {"film": args.film, "substrate": args.substrate, "nmax": args.nmax,
               "matches": [dm.to_dict() for dm in matches]}
        table = ep.format_table([(f"#{i + 1}", dm) for i, dm in enumerate(matches)],
                                title=f"{args.film} {dir_f} on {args.substrate} {dir_s}")
    if args.out in (None, "-"):
        sys.stdout.write(table + "\n")
    else:
        run.write(args.out, dump_json(doc))
        if args.table:
            run.write(args.table, table + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# validate


def cmd_validate(args, run):
    from .validation import SUITES, run_suites

    names = args.filter or None
    if names:
        bad = [n for n in names if n not in SUITES]
        if bad:
            raise UsageError(f"unknown suite(s) {bad}; choose from {list(SUITES)}")
    checks = run_suites(names, _materials(args, run))
    run.checks = checks
    for c in checks:
        sys.stderr.write(c.line() + "\n")
    passed = all(c.passed for c in checks)
    doc = {"passed": passed, "suites": names or list(SUITES), "checks": [c.to_dict() for c in checks]}
    run.write(args.out, dump_json(doc))
    return EXIT_OK if passed else EXIT_CHECK_FAILED


# --------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="straymag", description=__doc__.split("\n\n")[0])
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: STRAYMAG_THREADS, 0 = auto)")
    p.add_argument("--report", help="run report path (default: <output>.run.json)")
    sub = p.add_subparsers(dest="command", required=True)

    # field
    pf = sub.add_parser("field", help="sample the stray field of a scene")
    fsub = pf.add_subparsers(dest="mode", required=True)
    fl = fsub.add_parser("line", help="samples along a segment")
    fl.add_argument("--from", dest="start", nargs=3, type=float, required=True, metavar=("X", "Y", "Z"), help="um")
    fl.add_argument("--to", dest="stop", nargs=3, type=float, required=True, metavar=("X", "Y", "Z"), help="um")
    fl.add_argument("--samples", type=int, default=101)
    fm = fsub.add_parser("map", help="samples on a parallelogram grid")
    fm.add_argument("--origin", nargs=3, type=float, required=True, help="um")
    fm.add_argument("--e1", nargs=3, type=float, required=True, help="um")
    fm.add_argument("--e2", nargs=3, type=float, required=True, help="um")
    fm.add_argument("--n1", type=int, default=21)
    fm.add_argument("--n2", type=int, default=21)
    for q in (fl, fm):
        q.add_argument("--scene", required=True)
        q.add_argument("--axis", nargs=3, type=float, default=[0.0, 0.0, 1.0], help="direction for Bpar_T")
        q.add_argument("--out", help="CSV path (default stdout)")

    # squid
    ps = sub.add_parser("squid", help="scanning SQUID forward model and inversion")
    ssub = ps.add_subparsers(dest="action", required=True)
    scan = ssub.add_parser("scan", help="simulate a flux image")
    fit = ssub.add_parser("fit", help="fit a point dipole to an image CSV")
    est = ssub.add_parser("estimate", help="moment per length from a peak-to-peak value")
    for q in (scan, fit, est):
        q.add_argument("--sensor", help="sensor JSON file")
        q.add_argument("--radius-nm", type=float)
        q.add_argument("--height-nm", type=float)
        q.add_argument("--psf", help="PSF CSV file")
        q.add_argument("--out", help="output path")
    for q in (scan, est):
        q.add_argument("--scene", required=True)
        q.add_argument("--origin", nargs=2, type=float, default=[-10.0, -10.0], help="um")
        q.add_argument("--e1", nargs=2, type=float, default=[20.0, 0.0], help="um")
        q.add_argument("--e2", nargs=2, type=float, default=[0.0, 20.0], help="um")
        q.add_argument("--n1", type=int, default=41)
        q.add_argument("--n2", type=int, default=41)
    scan.add_argument("--summary", help="summary JSON (default: <out stem>.summary.json)")
    fit.add_argument("--image", required=True)
    fit.add_argument("--init-position", nargs=3, type=float, default=[0.0, 0.0, 0.0], help="um")
    fit.add_argument("--init-moment", nargs=3, type=float, default=[1e-15, 0.0, 0.0], help="A m^2")
    fit.add_argument("--max-iter", type=int, default=200)
    est.add_argument("--p2p", type=float, required=True, help="target peak-to-peak, mPhi0")

    # epitaxy
    pe = sub.add_parser("epimatch", help="domain-matching epitaxy")
    esub = pe.add_subparsers(dest="action", required=True)
    rep = esub.add_parser("report", help="named interface: " + ", ".join(ep.PAIRS))
    rep.add_argument("pair")
    mat = esub.add_parser("match", help="search n:m matches along one direction pair")
    mat.add_argument("film")
    mat.add_argument("film_dir")
    mat.add_argument("substrate")
    mat.add_argument("sub_dir")
    mat.add_argument("--nmax", type=int, default=4)
    mat.add_argument("--top", type=int, default=5)
    mat.add_argument("--convention", action="append",
                     help="FILM/SUB period conventions, e.g. shortest_translation/conventional_over(3); repeatable")
    for q in (rep, mat):
        q.add_argument("--lattice", help="lattice-constant override JSON")
        q.add_argument("--out", help="JSON path (default: table on stdout)")
        q.add_argument("--table", help="also write the text table here")

    # validate
    pv = sub.add_parser("validate", help="run the self-check suites")
    pv.add_argument("--filter", action="append", help="suite name (repeatable)")
    pv.add_argument("--lattice", help="lattice-constant override JSON")
    pv.add_argument("--out", help="JSON report path (default stdout)")
    return p


COMMANDS = {"field": cmd_field, "squid": cmd_squid, "epimatch": cmd_epimatch, "validate": cmd_validate}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None:
        os.environ["STRAYMAG_THREADS"] = str(args.threads)
    run = Run(argv)
    status, error = EXIT_OK, None
    try:
        status = COMMANDS[args.command](args, run)
    except (UsageError, ParseError, SchemaError, ValidationError, UnknownPair, UnknownMaterial) as exc:
        status, error = EXIT_USAGE, f"{type(exc).__name__}: {exc}"
    except (StrayMagError, FloatingPointError) as exc:
        status, error = EXIT_EVAL, f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        status, error = EXIT_USAGE, f"{type(exc).__name__}: {exc}"
    if error:
        sys.stderr.write(f"straymag: error: {error}\n")
    run.report(status, args.report, error)
    return status


if __name__ == "__main__":
    sys.exit(main())
