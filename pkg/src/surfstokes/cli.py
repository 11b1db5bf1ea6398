"""Command line driver: convergence studies, diagnostic suites and mesh export.

Examples::

    surfstokes study --surface ellipsoid:1.1,1.2,1.3 --levels 1..5 --out results/study
    surfstokes check --suite conformity --level 3
    surfstokes export-mesh --surface sphere:1 --level 2 --out sphere2.off

The number of BLAS/LAPACK threads is taken from ``SURFSTOKES_NUM_THREADS``.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from surfstokes.analysis import (
    diagnostics,
    eoc,
    eoc_table,
    error_norms,
    inf_sup_constant,
    interpolation_errors,
    measure_ratio_bound,
    normal_deviation,
    normal_jumps,
    tangentiality,
)
from surfstokes.assembly import assemble
from surfstokes.dofmap import build_dofmap
from surfstokes.errors import SurfStokesError
from surfstokes.geometry import LevelSetSurface, closest_point
from surfstokes.manufactured import FH_MODES, ExactSolution, ZeroSolution
from surfstokes.mesh import generate, refine, write_off
from surfstokes.solver import solve

log = logging.getLogger("surfstokes")

THREADS_ENV = "SURFSTOKES_NUM_THREADS"
MAX_LEVEL = 7
CSV_COLUMNS = [
    "level",
    "h",
    "dof_v",
    "dof_p",
    "e_energy",
    "e_l2_vel",
    "e_l2_pres",
    "rate_energy",
    "rate_l2_vel",
    "rate_l2_pres",
    "seconds",
]


@dataclass
class StudyConfig:
    surface: str = "ellipsoid:1.1,1.2,1.3"
    levels: tuple = (1, 5)
    fh_mode: str = "piola"
    quad_degree: int = 6
    solver: str = "auto"
    tol: float = 1e-10
    out: str = None
    timings: bool = True

    def validate(self):
        lo, hi = self.levels
        if not 0 <= lo <= hi <= MAX_LEVEL:
            raise ValueError(f"levels must satisfy 0 <= first <= last <= {MAX_LEVEL}, got {lo}..{hi}")
        if self.fh_mode not in FH_MODES:
            raise ValueError(f"fh-mode must be one of {FH_MODES}")
        parse_surface(self.surface)
        return self


def parse_surface(text):
    """``ellipsoid:a,b,c`` or ``sphere:r`` (``sphere`` alone is the unit sphere)."""
    kind, _, args = text.partition(":")
    vals = [float(v) for v in args.split(",")] if args else []
    if kind == "ellipsoid":
        if len(vals) != 3:
            raise ValueError("ellipsoid needs three semi-axes, e.g. ellipsoid:1.1,1.2,1.3")
        return LevelSetSurface.ellipsoid(*vals)
    if kind == "sphere":
        if len(vals) > 1:
            raise ValueError("sphere takes a single radius")
        return LevelSetSurface.sphere(vals[0] if vals else 1.0)
    raise ValueError(f"unknown surface {text!r}")


def parse_levels(text):
    """``'1..5'`` -> (1, 5); a single integer means one level."""
    lo, sep, hi = text.partition("..")
    lo = int(lo)
    hi = int(hi) if sep else lo
    if hi < lo:
        raise ValueError(f"empty level range {text!r}")
    return lo, hi


def mesh_sequence(surface, levels):
    """Meshes for an inclusive level range, each refined from the previous one."""
    lo, hi = levels
    mesh = generate(surface, lo)
    yield mesh
    for _ in range(lo, hi):
        mesh = refine(mesh)
        yield mesh


# -- study ---------------------------------------------------------------------


def run_study(config):
    """Solve on every level; returns the error reports and the EOC table rows."""
    config.validate()
    surface = parse_surface(config.surface)
    exact = ExactSolution(surface)
    reports = []
    for mesh in mesh_sequence(surface, config.levels):
        t0 = time.perf_counter()
        dofmap = build_dofmap(mesh)
        system = assemble(mesh, dofmap, exact, quad_degree=config.quad_degree, fh_mode=config.fh_mode)
        sol = solve(system, tol=config.tol, method=config.solver)
        rep = error_norms(mesh, dofmap, sol, exact, quad_degree=config.quad_degree)
        rep.seconds = time.perf_counter() - t0
        log.info(
            "level %d: h=%.4f energy=%.4e l2_vel=%.4e l2_pres=%.4e (%.1fs, %s)",
            mesh.level, rep.h, rep.e_energy, rep.e_l2_vel, rep.e_l2_pres, rep.seconds, sol.method,
        )
        reports.append(rep)
    rows = eoc_table(reports)
    if not config.timings:
        for row in rows:
            row["seconds"] = None
    return reports, rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(k)) for k in CSV_COLUMNS])
    return buf.getvalue()


def write_study(rows, config, out):
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out.with_suffix(".csv"), out.with_suffix(".json")
    csv_path.write_text(rows_to_csv(rows))
    payload = {"config": asdict(config), "rows": [{k: row.get(k) for k in CSV_COLUMNS} for row in rows]}
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


# -- checks ----------------------------------------------------------------------


def _bounded(values, factor=2.0):
    """No growth by more than ``factor`` between consecutive entries."""
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.isfinite(v)) and np.all(v[1:] <= factor * v[:-1]))


def check_geometry(surface, levels, seed=0):
    rng = np.random.default_rng(seed)
    out = {}
    if surface.kind == "sphere":
        from surfstokes.oracles import sphere_closest_point

        r = surface.semi_axes[0]
        dirs = rng.standard_normal((1000, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        x = dirs * r * (1.0 + rng.uniform(-0.4, 0.4, (1000, 1)))
        spd = closest_point(surface, x)
        p, d, nu, H = sphere_closest_point(x, r)
        err = max(
            np.abs(spd.p - p).max(), np.abs(spd.d - d).max(), np.abs(spd.nu - nu).max(), np.abs(spd.H - H).max()
        )
        out["sphere_closed_form_max_error"] = float(err)
        out["sphere_closed_form_pass"] = bool(err <= 1e-10)
    mu, nrm = [], []
    for mesh in mesh_sequence(surface, levels):
        mu.append(measure_ratio_bound(mesh))
        nrm.append(normal_deviation(mesh))
    out["levels"] = list(range(levels[0], levels[1] + 1))
    out["mu_over_h2"] = mu
    out["normal_over_h"] = nrm
    out["pass"] = _bounded(mu) and _bounded(nrm) and out.get("sphere_closed_form_pass", True)
    return out


def check_conformity(surface, level, samples=20, seed=0):
    mesh = generate(surface, level)
    dofmap = build_dofmap(mesh)
    rng = np.random.default_rng(seed)
    worst_jump, worst_tan = 0.0, tangentiality(mesh, dofmap)
    for _ in range(samples):
        v = rng.standard_normal(dofmap.n_velocity)
        jump, vmax = normal_jumps(mesh, dofmap, v)
        worst_jump = max(worst_jump, jump / vmax)
        worst_tan = max(worst_tan, tangentiality(mesh, dofmap, v))
    return {
        "level": level,
        "max_relative_normal_jump": worst_jump,
        "max_relative_normal_component": worst_tan,
        "pass": bool(worst_jump <= 1e-12 and worst_tan <= 1e-12),
    }


def check_interpolant(surface, levels):
    exact = ExactSolution(surface)
    l2, h1 = [], []
    for mesh in mesh_sequence(surface, levels):
        a, b = interpolation_errors(mesh, build_dofmap(mesh), exact)
        l2.append(a)
        h1.append(b)
    r_l2, r_h1 = eoc(l2), eoc(h1)
    ok = len(r_l2) == 0 or (1.8 <= r_l2[-1] <= 2.2 and 0.85 <= r_h1[-1] <= 1.2)
    return {
        "levels": list(range(levels[0], levels[1] + 1)),
        "l2": l2,
        "h1": h1,
        "rate_l2": r_l2.tolist(),
        "rate_h1": r_h1.tolist(),
        "pass": bool(ok),
    }


def check_infsup(surface, levels):
    betas = []
    for mesh in mesh_sequence(surface, levels):
        system = assemble(mesh, build_dofmap(mesh), ZeroSolution(surface))
        betas.append(inf_sup_constant(system))
    b = np.asarray(betas)
    variation = np.abs(np.diff(b)) / b[:-1] if len(b) > 1 else np.zeros(0)
    return {
        "levels": list(range(levels[0], levels[1] + 1)),
        "beta": betas,
        "relative_variation": variation.tolist(),
        "pass": bool(np.all(b > 0) and np.all(variation < 0.25)),
    }


def check_transfer(surface, levels):
    exact = ExactSolution(surface)
    reps = [diagnostics(mesh, exact, inf_sup=False) for mesh in mesh_sequence(surface, levels)]
    defect = [r.defect_over_h2 for r in reps]
    ratio = [r.def_transfer_ratio for r in reps]
    return {
        "levels": list(range(levels[0], levels[1] + 1)),
        "defect_over_h2": defect,
        "def_transfer_ratio": ratio,
        "pass": _bounded(defect) and _bounded(ratio),
    }


SUITES = ("geometry", "conformity", "interpolant", "infsup", "transfer")
DEFAULT_LEVELS = {
    "geometry": (2, 5),
    "interpolant": (2, 5),
    "infsup": (1, 3),
    "transfer": (2, 4),
}


def run_checks(suite, surface, level=None, levels=None):
    """Run one suite (or ``'all'``); returns a dict of verdicts keyed by suite."""
    names = SUITES if suite == "all" else (suite,)
    report = {}
    for name in names:
        if name == "conformity":
            report[name] = check_conformity(surface, 3 if level is None else level)
            continue
        lv = levels or ((level, level) if level is not None else DEFAULT_LEVELS[name])
        fn = {
            "geometry": check_geometry,
            "interpolant": check_interpolant,
            "infsup": check_infsup,
            "transfer": check_transfer,
        }[name]
        report[name] = fn(surface, lv)
    return report


# -- entry point -------------------------------------------------------------------


def _limit_threads():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return None
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover - optional dependency
        log.warning("%s set but threadpoolctl is unavailable", THREADS_ENV)
        return None
    return threadpool_limits(limits=int(n))


def build_parser():
    parser = argparse.ArgumentParser(prog="surfstokes", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("study", help="convergence study on uniformly refined meshes")
    st.add_argument("--surface", default="ellipsoid:1.1,1.2,1.3")
    st.add_argument("--levels", default="1..5", type=parse_levels)
    st.add_argument("--fh-mode", default="piola", choices=FH_MODES)
    st.add_argument("--quad-degree", default=6, type=int, choices=(2, 4, 6))
    st.add_argument("--solver", default="auto", choices=("auto", "direct", "iterative"))
    st.add_argument("--tol", default=1e-10, type=float)
    st.add_argument("--out", default=None, help="output path prefix; writes <out>.csv and <out>.json")
    st.add_argument("--no-timings", action="store_true", help="leave the seconds column empty")

    ck = sub.add_parser("check", help="numerical checks of the geometric and discrete estimates")
    ck.add_argument("--suite", default="all", choices=SUITES + ("all",))
    ck.add_argument("--surface", default="ellipsoid:1.1,1.2,1.3")
    ck.add_argument("--level", type=int, default=None)
    ck.add_argument("--levels", type=parse_levels, default=None)
    ck.add_argument("--out", default=None, help="write the JSON verdicts to this file")

    ex = sub.add_parser("export-mesh", help="write a mesh in OFF format")
    ex.add_argument("--surface", default="ellipsoid:1.1,1.2,1.3")
    ex.add_argument("--level", type=int, default=3)
    ex.add_argument("--out", required=True)
    return parser


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    limiter = _limit_threads()
    try:
        if args.command == "study":
            config = StudyConfig(
                surface=args.surface,
                levels=args.levels,
                fh_mode=args.fh_mode,
                quad_degree=args.quad_degree,
                solver=args.solver,
                tol=args.tol,
                out=args.out,
                timings=not args.no_timings,
            )
            _, rows = run_study(config)
            if args.out:
                write_study(rows, config, args.out)
            sys.stdout.write(rows_to_csv(rows))
            return 0
        if args.command == "check":
            report = run_checks(args.suite, parse_surface(args.surface), args.level, args.levels)
            text = json.dumps(report, indent=2, default=_json_default)
            if args.out:
                Path(args.out).write_text(text + "\n")
            print(text)
            return 0 if all(r["pass"] for r in report.values()) else 1
        if args.command == "export-mesh":
            mesh = generate(parse_surface(args.surface), args.level)
            write_off(mesh, args.out)
            print(f"wrote {mesh.n_vertices} vertices, {mesh.n_faces} faces to {args.out}")
            return 0
    except (SurfStokesError, ValueError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        diag = getattr(exc, "diagnostics", None)
        if diag:
            err["diagnostics"] = diag
        print(json.dumps(err, default=_json_default), file=sys.stderr)
        return 2
    finally:
        if limiter is not None:
            limiter.unregister()
    return 2  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
