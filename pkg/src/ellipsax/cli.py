"""Command-line front end.

Subcommands:

* ``simulate``     integrate a geodesic and optionally write a CSV trace
* ``lax-verify``   check eigenvalue constancy and the Lax bracket along a run
* ``focal-scan``   scan a base point for a common return time
* ``return-map``   tabulate the angular return map at a base point (n = 3)
* ``umbilic``      print the umbilic points of a triaxial ellipsoid
* ``rosochatius``  umbilic return experiment over a grid of j values
* ``suite``        run the numbered verification battery

Exit codes: 0 on success, 1 when ``suite`` has a failing criterion,
2 for usage / invalid input, 3 for a numerical failure at run time.

A ``--config FILE`` of ``key = value`` lines supplies defaults for any
long flag (keys may use ``-`` or ``_``); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__, acceptance, focal, lax, rosochatius
from ._kernel import BACKEND
from .errors import EllipsaxError, InvalidInputError
from .flow import (
    IntegratorOptions,
    integrate_geodesic,
    write_trajectory_csv,
)
from .geometry import (
    Ellipsoid,
    project_to_ellipsoid,
    random_unit_tangent,
    tangent_frame,
)

SCHEMA_VERSION = 1


def _floats(text):
    try:
        return np.array([float(p) for p in text.split(",") if p.strip() != ""])
    except ValueError:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}")


def _build_ellipsoid(args) -> Ellipsoid:
    vals = _floats(args.axes)
    if args.squared:
        return Ellipsoid(vals)
    return Ellipsoid.from_semi_axes(vals)


def _resolve_point(E, spec, seed):
    """A point: ``umbilic``, ``special``, ``random`` or explicit coordinates."""
    if spec == "umbilic":
        return focal.umbilic_points(E)[0]
    if spec == "special":
        return focal.special_focal_point(E)
    if spec == "random":
        rng = np.random.default_rng(seed)
        return project_to_ellipsoid(E, rng.standard_normal(E.n))
    return project_to_ellipsoid(E, _floats(spec))


def _resolve_direction(E, x, spec, seed):
    if spec == "random":
        return random_unit_tangent(E, x, seed=seed)
    d = _floats(spec)
    if d.size != E.n:
        raise InvalidInputError(
            f"direction needs {E.n} components, got {d.size}")
    from .geometry import project_to_tangent
    d = project_to_tangent(E, x, d)
    nd = np.linalg.norm(d)
    if nd < 1e-12:
        raise InvalidInputError("direction is normal to the surface")
    return d / nd


def _options(args) -> IntegratorOptions:
    return IntegratorOptions(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _j_grid(text):
    """Either ``a,b,c`` explicit values or ``start:stop:num`` (inclusive)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidInputError(f"bad j grid {text!r}; use start:stop:num")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 1:
            raise InvalidInputError("j grid needs at least one value")
        return np.linspace(start, stop, num)
    return _floats(text)


def _config_echo(args):
    skip = {"func", "out"}
    echo = {}
    for k, v in vars(args).items():
        if k in skip:
            continue
        if isinstance(v, np.ndarray):
            v = [float(q) for q in v]
        echo[k] = v
    return echo


def _emit(args, payload, command):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": "ellipsax",
        "version": __version__,
        "backend": BACKEND,
        "command": command,
        "config": _config_echo(args),
        "results": payload,
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)


def _read_config(path):
    cfg = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidInputError(
                        f"{path}:{lineno}: expected key = value")
                key, val = line.split("=", 1)
                cfg[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}")
    return cfg


def _apply_config(args, argv, sub):
    if not getattr(args, "config", None):
        return
    cfg = _read_config(args.config)
    explicit = set()
    for tok in argv:
        if tok.startswith("--"):
            explicit.add(tok.split("=", 1)[0][2:].replace("-", "_"))
    for act in sub._actions:
        if not act.option_strings or act.dest not in cfg:
            continue
        if act.dest in explicit:
            continue
        raw = cfg[act.dest]
        if isinstance(act, argparse._StoreTrueAction):
            val = raw.lower() in ("1", "true", "yes", "on")
        elif act.type is int:
            val = int(raw)
        elif act.type is float:
            val = float(raw)
        else:
            val = raw
        setattr(args, act.dest, val)


def _common_flags(sub, axes_default="3,2,1"):
    sub.add_argument("--axes", default=axes_default,
                     help="comma-separated semi-axes (largest first)")
    sub.add_argument("--squared", action="store_true",
                     help="interpret --axes as squared semi-axes")
    sub.add_argument("--rel-tol", type=float, default=1e-11,
                     help="integrator relative tolerance")
    sub.add_argument("--abs-tol", type=float, default=1e-13,
                     help="integrator absolute tolerance")
    sub.add_argument("--seed", type=int, default=0, help="RNG seed")
    sub.add_argument("--out", default=None, help="output file path")
    sub.add_argument("--config", default=None,
                     help="key = value file of flag defaults")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    E = _build_ellipsoid(args)
    x0 = _resolve_point(E, args.point, args.seed)
    xi0 = _resolve_direction(E, x0, args.direction, args.seed)
    try:
        traj = integrate_geodesic(E, x0, xi0, args.t_max,
                                  options=_options(args))
    except EllipsaxError as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None and args.out:
            write_trajectory_csv(partial, args.out,
                                 sample_dt=args.sample_dt)
            print(f"wrote partial trajectory to {args.out} "
                  f"(t_end = {partial.t_end:g})", file=sys.stderr)
        raise
    cres = float(np.max(np.abs(traj.constraint_residuals())))
    sres = float(np.max(np.abs(traj.speed_residuals())))
    if args.out:
        write_trajectory_csv(traj, args.out, sample_dt=args.sample_dt)
        print(f"wrote {args.out}")
    print(f"backend {BACKEND}, status {traj.status_label}")
    print(f"steps {traj.num_steps}, t_end {traj.t_end:g}")
    print(f"max constraint residual {cres:.3e}")
    print(f"max speed residual {sres:.3e}")
    return 0


def cmd_lax_verify(args):
    E = _build_ellipsoid(args)
    x0 = _resolve_point(E, args.point, args.seed)
    xi0 = _resolve_direction(E, x0, args.direction, args.seed)
    traj = integrate_geodesic(E, x0, xi0, args.t_max, options=_options(args))
    times = np.linspace(0.0, traj.t_end, args.samples)
    lam = lax.nonzero_eigenvalues_along(E, traj, times)
    drift = float(np.max(np.abs(lam - lam[0]) / np.abs(lam[0])))
    inner = times[(times > 0.05 * traj.t_end) & (times < 0.95 * traj.t_end)]
    bracket = max(lax.lax_residual(E, traj, float(t))
                  for t in inner[:: max(1, len(inner) // 8)])
    ok = drift < args.drift_tol and bracket < args.bracket_tol
    payload = {
        "eigenvalues_t0": [float(v) for v in lam[0]],
        "relative_drift": drift,
        "bracket_residual": bracket,
        "drift_tol": args.drift_tol,
        "bracket_tol": args.bracket_tol,
        "passed": ok,
    }
    _emit(args, payload, "lax-verify")
    if not ok:
        print(f"FAIL: drift {drift:.3e} (tol {args.drift_tol:g}), "
              f"bracket {bracket:.3e} (tol {args.bracket_tol:g})",
              file=sys.stderr)
        return 3
    print(f"ok: drift {drift:.3e}, bracket residual {bracket:.3e}")
    return 0


def cmd_focal_scan(args):
    E = _build_ellipsoid(args)
    x0 = _resolve_point(E, args.point, args.seed)
    rep = focal.scan_self_focal(
        E, x0, t_max=args.t_max, num_directions=args.directions,
        num_random=args.random_directions, seed=args.seed,
        options=_options(args), threads=args.threads)
    _emit(args, rep.to_dict(), "focal-scan")
    print(f"verdict: {rep.verdict}")
    if rep.time_mean is not None:
        print(f"mean return time {rep.time_mean:.9f}, "
              f"relative spread {rep.time_spread:.3e}")
    print(f"{rep.num_tight}/{len(rep.records)} returns within radius "
          f"{rep.return_radius:.3e}")
    return 0


def cmd_return_map(args):
    E = _build_ellipsoid(args)
    if E.n != 3:
        raise InvalidInputError("return-map requires exactly 3 axes")
    x0 = _resolve_point(E, args.point, args.seed)
    rows = []
    for k in range(args.directions):
        theta = 2.0 * np.pi * k / args.directions
        theta_out, t_ret, miss = focal.return_map(
            E, x0, float(theta), t_max=args.t_max, options=_options(args))
        rows.append({"theta_in": float(theta), "theta_out": float(theta_out),
                     "return_time": float(t_ret),
                     "miss_distance": float(miss)})
    _emit(args, rows, "return-map")
    dev = max(abs(r["theta_out"] - r["theta_in"]) for r in rows)
    print(f"sampled {len(rows)} directions, max |theta_out - theta_in| "
          f"= {dev:.6f}")
    return 0


def cmd_umbilic(args):
    E = _build_ellipsoid(args)
    payload = {}
    if E.n == 3:
        pts = focal.umbilic_points(E)
        payload["umbilic_points"] = [[float(v) for v in p] for p in pts]
        payload["defects"] = [focal.umbilic_defect(E, p) for p in pts]
    else:
        try:
            sp = focal.special_focal_point(E)
        except EllipsaxError as exc:
            raise InvalidInputError(
                f"no closed-form focal candidate for these axes: {exc}")
        payload["special_point"] = [float(v) for v in sp]
    _emit(args, payload, "umbilic")
    return 0


def cmd_rosochatius(args):
    E = _build_ellipsoid(args)
    js = _j_grid(args.j_grid)
    report = rosochatius.umbilic_return_experiment(
        E, js, num_directions=args.directions, t_max=args.t_max,
        options=_options(args))
    if args.out:
        rosochatius.write_experiment_csv(report, args.out)
        print(f"wrote {args.out}")
    for s in report.summary():
        spread = (f"{s['time_spread']:.3e}"
                  if math.isfinite(s["time_spread"]) else "-")
        tmean = (f"{s['time_mean']:.6f}"
                 if math.isfinite(s["time_mean"]) else "-")
        print(f"j = {s['j']:.4f}: {s['num_tight']}/{s['num_directions']} "
              f"tight, mean return {tmean}, spread {spread}, "
              f"halted {s['num_halted']}")
    return 0


def cmd_suite(args):
    results = acceptance.run_suite(only=args.only, threads=args.threads,
                                   stream=sys.stdout)
    payload = [{
        "id": r.cid, "name": r.name, "passed": r.passed,
        "measured": r.measured, "threshold": r.threshold,
        "details": _jsonable(r.details),
    } for r in results]
    if args.out:
        _emit(args, payload, "suite")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="ellipsax",
        description="geodesic flow on ellipsoids: integration, spectral "
                    "invariants, and self-focal point detection")
    parser.add_argument("--version", action="version",
                        version=f"ellipsax {__version__} ({BACKEND} backend)")
    subs = parser.add_subparsers(dest="command", required=True)
    registry = {}

    sub = subs.add_parser("simulate", help="integrate a single geodesic")
    _common_flags(sub)
    sub.add_argument("--point", default="random",
                     help="start point: coords, umbilic, special, or random")
    sub.add_argument("--direction", default="random",
                     help="launch direction: coords or random")
    sub.add_argument("--t-max", type=float, default=20.0)
    sub.add_argument("--sample-dt", type=float, default=None,
                     help="resample the CSV at this time step")
    sub.set_defaults(func=cmd_simulate)
    registry["simulate"] = sub

    sub = subs.add_parser("lax-verify",
                          help="verify spectral invariants along a geodesic")
    _common_flags(sub, axes_default="4,3,2,1")
    sub.add_argument("--point", default="random")
    sub.add_argument("--direction", default="random")
    sub.add_argument("--t-max", type=float, default=50.0)
    sub.add_argument("--samples", type=int, default=26)
    sub.add_argument("--drift-tol", type=float, default=1e-8)
    sub.add_argument("--bracket-tol", type=float, default=1e-6)
    sub.set_defaults(func=cmd_lax_verify)
    registry["lax-verify"] = sub

    sub = subs.add_parser("focal-scan",
                          help="scan a point for a common return time")
    _common_flags(sub)
    sub.add_argument("--point", default="umbilic")
    sub.add_argument("--directions", type=int, default=64)
    sub.add_argument("--random-directions", type=int, default=0,
                     help="extra seeded random directions")
    sub.add_argument("--t-max", type=float, default=None)
    sub.add_argument("--threads", type=int, default=1)
    sub.set_defaults(func=cmd_focal_scan)
    registry["focal-scan"] = sub

    sub = subs.add_parser("return-map",
                          help="tabulate the angular return map (n = 3)")
    _common_flags(sub)
    sub.add_argument("--point", default="umbilic")
    sub.add_argument("--directions", type=int, default=32)
    sub.add_argument("--t-max", type=float, default=12.0)
    sub.set_defaults(func=cmd_return_map)
    registry["return-map"] = sub

    sub = subs.add_parser("umbilic",
                          help="closed-form focal candidates for given axes")
    _common_flags(sub)
    sub.set_defaults(func=cmd_umbilic)
    registry["umbilic"] = sub

    sub = subs.add_parser("rosochatius",
                          help="umbilic return experiment with an "
                               "inverse-square potential")
    _common_flags(sub)
    sub.add_argument("--j-grid", default="0:0.6:7",
                     help="j values: a,b,c or start:stop:num")
    sub.add_argument("--directions", type=int, default=16)
    sub.add_argument("--t-max", type=float, default=25.0)
    sub.set_defaults(func=cmd_rosochatius)
    registry["rosochatius"] = sub

    sub = subs.add_parser("suite", help="run the verification battery")
    sub.add_argument("--only", default=None,
                     help="comma-separated criterion ids or name substrings")
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--out", default=None, help="JSON report path")
    sub.add_argument("--config", default=None,
                     help="key = value file of flag defaults")
    sub.set_defaults(func=cmd_suite)
    registry["suite"] = sub

    return parser, registry


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, registry = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, argv, registry[args.command])
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EllipsaxError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
