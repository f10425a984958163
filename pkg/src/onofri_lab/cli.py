"""Deterministic command-line reports over the rigidity toolkit.

Each subcommand maps to a single library operation and emits one
artifact, either a single-line JSON object or a CSV table, so runs can
be diffed, pinned in scripts, and replayed byte for byte.  A config file
(plain ``[section]`` headers with ``key = value`` lines) can preload any
flag; values given on the command line win.  Exit codes: 0 success,
1 solver or flow breakdown, 2 invalid arguments or configuration,
3 a checked identity or invariant failed.
"""

import argparse
import configparser
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import circle as circle_mod
from . import constants as constants_mod
from . import solvers
from . import sphere_flow
from . import weights as weights_mod
from .errors import (
    GeometryMismatchError,
    InvalidParameterError,
    OnofriLabError,
    SolverError,
)
from .geometry import (
    PLANE,
    SPHERE,
    build_geometry,
    first_eigenvalue,
    integrate,
    load_field,
    random_field,
    save_field,
)
from .identities import run_suite, write_reports_csv

JOBS_ENV = "ONOFRI_LAB_JOBS"

_EPILOG = """\
config file: plain text with [section] headers and key = value lines;
section names are the top-level commands (plus [global] for --jobs and
--output), keys are the long flag names.  Flags given on the command
line override config values.  The environment variable ONOFRI_LAB_JOBS
overrides --jobs from either source.

exit codes: 0 success; 1 solver or flow failure; 2 invalid arguments;
3 an identity check or invariant failed.
"""


# ---------------------------------------------------------------------------
# small shared helpers


def _to_float(text, what):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise InvalidParameterError(
            f"{what} must be a number, got {text!r}") from None


def _need(args, dest, flag):
    value = getattr(args, dest)
    if value is None:
        raise InvalidParameterError(f"missing required flag {flag}")
    return value


def _canon(value):
    """Integral floats print as integers, so theta0(2) shows up as 1."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return int(value)
    return value


def _emit_json(payload, fh):
    fh.write(json.dumps(payload, separators=(",", ":")) + "\n")


def _write_csv(fh, header, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)


def _parse_scan(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameterError(f"scan wants a:b:n, got {text!r}")
    a = _to_float(parts[0], "scan start")
    b = _to_float(parts[1], "scan end")
    try:
        count = int(parts[2])
    except ValueError:
        raise InvalidParameterError(
            f"scan count must be an integer, got {parts[2]!r}") from None
    if count < 1:
        raise InvalidParameterError("scan needs at least one point")
    return [float(v) for v in np.linspace(a, b, count)]


def _split_indices(total, parts):
    """Contiguous near-even blocks covering range(total)."""
    parts = max(1, min(int(parts), int(total)))
    base, extra = divmod(int(total), parts)
    blocks, start = [], 0
    for k in range(parts):
        size = base + (1 if k < extra else 0)
        if size:
            blocks.append(list(range(start, start + size)))
        start += size
    return blocks


def _run_tasks(fn, tasks, jobs):
    """Run fn over the task tuples, optionally in worker processes.

    Results come back in task order regardless of the schedule, so the
    emitted artifact does not depend on --jobs.
    """
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(*task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        futures = [pool.submit(fn, *task) for task in tasks]
        return [future.result() for future in futures]


def _resolve_jobs(args):
    env = os.environ.get(JOBS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameterError(
                f"{JOBS_ENV} must be an integer, got {env!r}") from None
    return max(1, int(args.jobs))


# ---------------------------------------------------------------------------
# config file support


def _read_config(path):
    parser = configparser.ConfigParser(interpolation=None)
    loaded = parser.read(path)
    if not loaded:
        raise InvalidParameterError(f"config file {path!r} not found")
    return parser


def _section_items(config, section):
    if not config.has_section(section):
        return {}
    return {key.replace("-", "_"): value for key, value in
            config.items(section)}


_TRUE_WORDS = ("1", "true", "yes", "on")
_FALSE_WORDS = ("0", "false", "no", "off")


def _apply_config(parser_obj, values, where):
    """Install config strings as typed parser defaults.

    Keys are the long flag names (dashes and underscores both work), so
    a config line ``lambda = 5`` feeds the ``--lambda`` flag.
    """
    actions = {}
    for action in parser_obj._actions:
        actions[action.dest] = action
        for opt in action.option_strings:
            if opt.startswith("--"):
                actions[opt[2:].replace("-", "_")] = action
    converted = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise InvalidParameterError(
                f"unknown config key {key!r} in section [{where}]")
        if action.nargs == 0:  # boolean flag
            low = raw.strip().lower()
            if low in _TRUE_WORDS:
                converted[action.dest] = bool(action.const)
            elif low in _FALSE_WORDS:
                converted[action.dest] = not bool(action.const)
            else:
                raise InvalidParameterError(
                    f"config key {key!r} wants a boolean, got {raw!r}")
            continue
        kind = action.type or str
        try:
            value = kind(raw)
        except (TypeError, ValueError):
            raise InvalidParameterError(
                f"config key {key!r}: cannot read {raw!r}") from None
        if action.choices is not None and value not in action.choices:
            raise InvalidParameterError(
                f"config key {key!r} must be one of "
                f"{sorted(action.choices)}")
        converted[action.dest] = value
    parser_obj.set_defaults(**converted)


# ---------------------------------------------------------------------------
# command implementations


def _cmd_constants(args, out, jobs):
    d = _need(args, "d", "--d")
    which = args.which
    if which == "theta0":
        payload = {"d": _canon(d), "theta0": _canon(constants_mod.theta0(d))}
    elif which == "abc":
        theta = constants_mod.theta0(d) if args.theta is None else args.theta
        co = constants_mod.abc_coefficients(d, theta)
        payload = {"d": _canon(d), "theta": _canon(theta), "a": _canon(co.a),
                   "b": _canon(co.b), "c": _canon(co.c),
                   "mixing_ratio": _canon(co.mixing_ratio)}
    elif which == "discriminant":
        theta = constants_mod.theta0(d) if args.theta is None else args.theta
        delta, sign = constants_mod.discriminant(d, theta)
        payload = {"d": _canon(d), "theta": _canon(theta),
                   "discriminant": _canon(delta), "sign": int(sign)}
    elif which == "fontenas":
        x = _need(args, "x", "--x")
        payload = {"d": _canon(d), "x": _canon(x),
                   "f1": _canon(constants_mod.fontenas_f1(d, x)),
                   "f2": _canon(constants_mod.fontenas_f2(d, x)),
                   "gap": _canon(constants_mod.fontenas_gap(d, x))}
    else:  # curvature-bound
        rho = _need(args, "rho", "--rho")
        lam1 = _need(args, "lam1", "--lam1")
        bound = constants_mod.curvature_rigidity_bound(
            d, rho, lam1, theta=args.theta)
        payload = {"d": _canon(d), "rho": _canon(rho), "lam1": _canon(lam1),
                   "theta": _canon(bound.theta),
                   "theta_opt": _canon(bound.theta_opt),
                   "value": _canon(bound.value)}
    _emit_json(payload, out)
    return 0


def _cmd_spectrum(args, out, jobs):
    if args.geometry == "circle":
        geom = build_geometry("circle", args.resolution, length=args.length)
        payload = {"geometry": "circle", "n": geom.n,
                   "length": float(geom.length),
                   "lambda1": float(first_eigenvalue(geom))}
    elif args.radius is not None:
        geom = build_geometry("sphere-zonal", args.resolution,
                              radius=args.radius)
        payload = {"geometry": "sphere", "n": geom.n,
                   "radius": float(geom.radius),
                   "lambda1": float(first_eigenvalue(geom))}
    else:
        geom = sphere_flow.sphere_geometry(args.resolution,
                                           args.normalization)
        payload = {"geometry": "sphere", "n": geom.n,
                   "normalization": geom.normalization,
                   "lambda1": float(first_eigenvalue(geom))}
    _emit_json(payload, out)
    return 0


def _rigidity_point(kind, resolution, normalization, lam, inits, seed, tol):
    """One rigidity row: multistart solves, report the farthest branch."""
    if kind == "circle":
        geom = circle_mod.circle_geometry(resolution)
        points = circle_mod.multistart_rigidity(
            lam, inits=inits, seed=seed, tol=tol, geometry=geom)
        rep = max(points, key=lambda p: p.distance_to_constant)
        deficit = circle_mod.mto_deficit_circle(rep.solution, lam)
    else:
        geom = sphere_flow.sphere_geometry(resolution, normalization)
        points = solvers.multistart_el(geom, lam, inits=inits, seed=seed,
                                       tol=tol)
        rep = max(points, key=lambda p: p.distance_to_constant)
        deficit = sphere_flow.functional_F(geom, lam, rep.solution.values)
    return [float(rep.lam), rep.branch_tag, float(rep.newton_residual),
            float(rep.distance_to_constant), float(deficit)]


def _cmd_rigidity(args, out, jobs):
    if args.scan:
        lams = _parse_scan(args.scan)
    elif args.lam is not None:
        lams = [float(args.lam)]
    else:
        raise InvalidParameterError("rigidity needs --lambda or --scan")
    tasks = [(args.which, args.resolution,
              getattr(args, "normalization", "unit-radius"), lam, args.inits,
              args.seed, args.tol) for lam in lams]
    rows = _run_tasks(_rigidity_point, tasks, jobs)
    _write_csv(out, ["lambda", "branch_tag", "residual",
                     "distance_to_constant", "deficit"], rows)
    return 0


def _cmd_lambda_star(args, out, jobs):
    geom = sphere_flow.sphere_geometry(args.resolution, args.normalization)
    search = sphere_flow.minimize_lambda_star(
        geom, seeds=args.seeds, modes=args.modes, seed=args.seed)
    if search.stalled:
        print("onofri-lab: no quotient minimization run converged",
              file=sys.stderr)
        return 1
    path = args.min_field_file or ""
    if path:
        save_field(search.field, path)
    payload = {"normalization": args.normalization,
               "estimate": float(search.value),
               "probe_count": int(search.probe_count),
               "min_field_file": path}
    _emit_json(payload, out)
    return 0


def _parse_init(spec, geometry):
    name, _, rest = spec.partition(":")
    if name == "zero":
        return np.zeros(geometry.n)
    if name == "cos":
        amp = _to_float(rest, "cos amplitude") if rest else 1.0
        return amp * np.cos(geometry.nodes)
    if name == "random":
        parts = [p for p in rest.split(":") if p]
        seed = int(parts[0]) if parts else 0
        modes = int(parts[1]) if len(parts) > 1 else 8
        return random_field(geometry, seed=seed, modes=modes).values
    raise InvalidParameterError(
        f"unknown init {spec!r}; use zero, cos[:amp], "
        "random[:seed[:modes]] or file:path")


def _cmd_flow(args, out, jobs):
    lam = _need(args, "lam", "--lambda")
    t_final = _need(args, "t_final", "--t-final")
    init = _need(args, "init", "--init")
    geom = sphere_flow.sphere_geometry(args.resolution, args.normalization)
    if init.startswith("file:"):
        fld = load_field(init[len("file:"):])
        if fld.geometry.kind != SPHERE:
            raise InvalidParameterError(
                "flow init file must hold a zonal sphere field")
        geom, u0 = fld.geometry, fld.values
    else:
        u0 = _parse_init(init, geom)
    trace = sphere_flow.flow_evolve(geom, lam, u0, t_final,
                                    safety=args.safety, samples=args.samples)
    rows = [[float(t), float(fv), float(gv), float(mv), float(sv)]
            for t, fv, gv, mv, sv in zip(
                trace.times, trace.F_values, trace.G_values,
                trace.mass_values, trace.sup_values)]
    _write_csv(out, ["t", "F", "G", "mass", "sup_f"], rows)
    return 0


def _parse_weight_spec(spec, geometry):
    kind, _, rest = spec.partition(":")
    parts = [p for p in rest.split(":") if p != ""]
    if kind == "stereographic":
        if parts:
            raise InvalidParameterError("stereographic takes no parameters")
        return weights_mod.make_weight("stereographic", geometry=geometry)
    if kind == "gaussian":
        sigma = _to_float(parts[0], "gaussian sigma") if parts else 1.0
        return weights_mod.make_weight("gaussian", {"sigma": sigma},
                                       geometry=geometry)
    if kind == "keller-segel":
        if not parts:
            raise InvalidParameterError("keller-segel weight wants a mass, "
                                        "as in keller-segel:4")
        mass = _to_float(parts[0], "keller-segel mass")
        return weights_mod.make_weight("keller-segel", {"mass": mass},
                                       geometry=geometry)
    if kind == "ks-selfsim":
        if len(parts) < 2:
            raise InvalidParameterError("self-similar weight wants mass and "
                                        "epsilon, as in ks-selfsim:4:0.5")
        mass = _to_float(parts[0], "ks-selfsim mass")
        eps = _to_float(parts[1], "ks-selfsim epsilon")
        return weights_mod.make_weight("ks-selfsim",
                                       {"mass": mass, "epsilon": eps},
                                       geometry=geometry)
    raise InvalidParameterError(
        f"unknown weight {spec!r}; use stereographic, gaussian[:sigma], "
        "keller-segel:mass or ks-selfsim:mass:epsilon")


def _scalar_params(weight):
    return {key: float(value) for key, value in weight.params.items()
            if np.isscalar(value)}


def _write_profiles(path, weight):
    geom = weight.geometry
    rows = zip(geom.nodes, weight.mu, weight.g, weight.dg, weight.lap_g)
    with open(path, "w", newline="") as fh:
        _write_csv(fh, ["r", "mu", "g", "dg", "lap_g"],
                   ([float(a), float(b), float(c), float(e), float(f)]
                    for a, b, c, e, f in rows))


def _cmd_weights_lambda_star(args, out, jobs):
    geom = weights_mod.plane_geometry(args.resolution, args.radius)
    weight = _parse_weight_spec(_need(args, "weight", "--weight"), geom)
    threshold = weights_mod.lambda_star_weight(weight)
    if args.profiles:
        _write_profiles(args.profiles, weight)
    payload = {"kind": weight.kind, "params": _scalar_params(weight),
               "lambda_star": float(threshold.value),
               "inf_location_r": float(threshold.location_r),
               "normalization_defect": float(weight.normalization_defect)}
    _emit_json(payload, out)
    return 0


def _cmd_weights_solve_ks(args, out, jobs):
    mass = _need(args, "mass", "--mass")
    geom = weights_mod.plane_geometry(args.resolution, args.radius)
    weight = weights_mod.solve_keller_segel(mass, geometry=geom,
                                            epsilon=args.epsilon)
    threshold = weights_mod.lambda_star_weight(weight)
    if args.profiles:
        _write_profiles(args.profiles, weight)
    recovered = mass * (float(integrate(geom, weight.mu)) + weight.tail_mass)
    payload = {"kind": weight.kind, "mass": float(mass),
               "epsilon": float(args.epsilon),
               "recovered_mass": recovered,
               "lambda_star": float(threshold.value),
               "inf_location_r": float(threshold.location_r),
               "normalization_defect": float(weight.normalization_defect)}
    _emit_json(payload, out)
    return 0


def _cmd_weights_perturbation(args, out, jobs):
    if args.h_file:
        fld = load_field(args.h_file)
        if fld.geometry.kind != PLANE:
            raise InvalidParameterError(
                "perturbation file must hold a radial plane field")
        bound = weights_mod.perturbation_bound(fld.values,
                                               geometry=fld.geometry)
        inputs = {"h_file": args.h_file}
    else:
        amp, power = float(args.amplitude), float(args.power)
        geom = weights_mod.plane_geometry(args.resolution, args.radius)
        bound = weights_mod.perturbation_bound(
            lambda r: amp / (1.0 + r * r) ** power, geometry=geom)
        inputs = {"amplitude": amp, "power": power}
    payload = {"kind": "perturbed", **inputs, "bound": float(bound.bound),
               "lambda_star": float(bound.lambda_star),
               "variation": float(bound.variation),
               "curvature_inf": float(bound.curvature_inf)}
    _emit_json(payload, out)
    return 0


def _cmd_weights_el(args, out, jobs):
    lam = _need(args, "lam", "--lambda")
    geom = weights_mod.plane_geometry(args.resolution, args.radius)
    weight = _parse_weight_spec(_need(args, "weight", "--weight"), geom)
    points = []
    for j in range(int(args.inits)):
        if j == 0:
            init = None
        else:
            init = random_field(geom, seed=[args.seed, j], modes=8,
                                amplitude=0.5).values
        points.append(weights_mod.solve_el_weighted(lam, weight, init=init,
                                                    tol=args.tol))
    rep = max(points, key=lambda p: p.distance_to_constant)
    deficit = weights_mod.onofri_deficit_weighted(weight, rep.solution, lam)
    payload = {"kind": weight.kind, "lambda": float(lam),
               "inits": int(args.inits), "branch_tag": rep.branch_tag,
               "residual": float(rep.newton_residual),
               "distance_to_constant": float(rep.distance_to_constant),
               "deficit": float(deficit)}
    _emit_json(payload, out)
    return 0


def _cmd_weights_deficit(args, out, jobs):
    lam = _need(args, "lam", "--lambda")
    geom = weights_mod.plane_geometry(args.resolution, args.radius)
    weight = _parse_weight_spec(_need(args, "weight", "--weight"), geom)
    if args.u_file:
        fld = load_field(args.u_file)
        if not fld.geometry.same_discretization(weight.geometry):
            raise GeometryMismatchError(
                "field file discretization differs from the weight grid")
        u = fld.values
        inputs = {"u_file": args.u_file}
    elif args.sigma is not None:
        u = weights_mod.dilation_field(geom, args.sigma)
        inputs = {"sigma": float(args.sigma)}
    else:
        raise InvalidParameterError("deficit needs --sigma or --u-file")
    value = weights_mod.onofri_deficit_weighted(weight, u, lam)
    payload = {"kind": weight.kind, "lambda": float(lam), **inputs,
               "deficit": float(value)}
    _emit_json(payload, out)
    return 0


def _cmd_identities(args, out, jobs):
    names = (["circle", "sphere", "plane"] if args.suite == "all"
             else [args.suite])
    reports = []
    if jobs <= 1:
        for name in names:
            summary = run_suite(name, trials=args.trials, seed=args.seed,
                                tol=args.tol)
            reports.extend(summary.reports)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = []
            for name in names:
                for block in _split_indices(args.trials, jobs):
                    futures.append(pool.submit(
                        run_suite, name, trials=args.trials, seed=args.seed,
                        tol=args.tol, trial_indices=block))
            for future in futures:
                reports.extend(future.result().reports)
    write_reports_csv(reports, out)
    if any(not rep.passed for rep in reports):
        print("onofri-lab: identity suite reported failures",
              file=sys.stderr)
        return 3
    return 0


_HANDLERS = {
    ("constants", "theta0"): _cmd_constants,
    ("constants", "abc"): _cmd_constants,
    ("constants", "discriminant"): _cmd_constants,
    ("constants", "fontenas"): _cmd_constants,
    ("constants", "curvature-bound"): _cmd_constants,
    ("spectrum", "lambda1"): _cmd_spectrum,
    ("rigidity", "circle"): _cmd_rigidity,
    ("rigidity", "sphere"): _cmd_rigidity,
    ("lambda-star", "sphere"): _cmd_lambda_star,
    ("flow", "sphere"): _cmd_flow,
    ("weights", "lambda-star"): _cmd_weights_lambda_star,
    ("weights", "solve-ks"): _cmd_weights_solve_ks,
    ("weights", "perturbation"): _cmd_weights_perturbation,
    ("weights", "el"): _cmd_weights_el,
    ("weights", "deficit"): _cmd_weights_deficit,
    ("identities", "run"): _cmd_identities,
}


# ---------------------------------------------------------------------------
# parser construction


def _leaf(subparsers, name, which, leaves, command, **kwargs):
    parser = subparsers.add_parser(name, **kwargs)
    parser.set_defaults(which=which)
    leaves[(command, which)] = parser
    return parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="onofri-lab",
        description="Spectral toolkit for sharp log-Sobolev type "
                    "inequalities: closed-form constants, identity "
                    "suites, rigidity solvers, flows, and weighted "
                    "planar thresholds.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", metavar="FILE",
                        help="preload flag values from a [section] key=value "
                             "file; explicit flags win")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="worker processes for scans and suite trials "
                             "(ONOFRI_LAB_JOBS overrides)")
    parser.add_argument("--output", metavar="PATH",
                        help="write the report to PATH instead of stdout")
    top = parser.add_subparsers(dest="command", required=True,
                                metavar="command")
    leaves = {}

    # constants ------------------------------------------------------------
    p_const = top.add_parser(
        "constants", help="closed-form rational constants",
        description="Print one closed-form constant family as single-line "
                    "JSON.  All values are evaluated in exact rational "
                    "arithmetic before conversion.")
    sub = p_const.add_subparsers(dest="which", required=True,
                                 metavar="name")
    p = _leaf(sub, "theta0", "theta0", leaves, "constants",
              help="threshold interpolation parameter",
              description="theta0(d) = 16(d-1)^2/((6-d)(d+2)), the smallest "
                          "exponent with a nonnegative quadratic form; "
                          "equals 1 at d = 2.")
    p.add_argument("--d", type=float, help="dimension parameter in [1, 6)")
    p = _leaf(sub, "abc", "abc", leaves, "constants",
              help="quadratic form coefficients a, b, c",
              description="Coefficients of the tensor quadratic form at "
                          "(d, theta), with the mixing ratio b/(2a).")
    p.add_argument("--d", type=float, help="dimension parameter")
    p.add_argument("--theta", type=float,
                   help="interpolation exponent (default theta0(d))")
    p = _leaf(sub, "discriminant", "discriminant", leaves, "constants",
              help="discriminant of the quadratic form",
              description="b^2 - 4ac at (d, theta); zero exactly at "
                          "theta = theta0(d).")
    p.add_argument("--d", type=float, help="dimension parameter")
    p.add_argument("--theta", type=float,
                   help="interpolation exponent (default theta0(d))")
    p = _leaf(sub, "fontenas", "fontenas", leaves, "constants",
              help="interpolated spectral gap terms",
              description="The two gap expressions f1, f2 and their "
                          "difference on the interpolation segment "
                          "d in (1, 2], x in [0, 1].")
    p.add_argument("--d", type=float, help="dimension parameter in (1, 2]")
    p.add_argument("--x", type=float, help="interpolation coordinate in [0, 1]")
    p = _leaf(sub, "curvature-bound", "curvature-bound", leaves, "constants",
              help="curvature-dimension rigidity bound",
              description="Affine bound (1/2)lam1(1-theta) + "
                          "(theta/2)(d/(d-1))rho with its optimal theta.")
    p.add_argument("--d", type=float, help="dimension parameter above 1")
    p.add_argument("--rho", type=float, help="Ricci lower bound")
    p.add_argument("--lam1", type=float, help="first nonzero eigenvalue")
    p.add_argument("--theta", type=float,
                   help="evaluate at this theta instead of the optimizer")

    # spectrum -------------------------------------------------------------
    p_spec = top.add_parser(
        "spectrum", help="Laplacian eigenvalues",
        description="First nonzero Laplacian eigenvalue of a model "
                    "geometry, computed from the spectral collocation "
                    "operator.")
    sub = p_spec.add_subparsers(dest="which", required=True, metavar="what")
    p = _leaf(sub, "lambda1", "lambda1", leaves, "spectrum",
              help="first nonzero eigenvalue",
              description="lambda1 is 4 pi^2 / L^2 on the circle of length "
                          "L and 2/a^2 on the sphere of radius a.")
    p.add_argument("--geometry", choices=("circle", "sphere"),
                   default="circle", help="which model geometry")
    p.add_argument("--resolution", type=int, default=256, metavar="N",
                   help="collocation points (default 256)")
    p.add_argument("--length", type=float, default=1.0,
                   help="circle circumference (default 1)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--radius", type=float, help="sphere radius")
    group.add_argument("--normalization",
                       choices=("unit-radius", "unit-volume"),
                       default=None, help="named sphere scaling")

    # rigidity -------------------------------------------------------------
    p_rig = top.add_parser(
        "rigidity", help="multistart Euler-Lagrange rigidity probes",
        description="Solve the semilinear equation from several random "
                    "starts per coupling and report the farthest branch "
                    "found, as CSV rows lambda, branch_tag, residual, "
                    "distance_to_constant, deficit.")
    sub = p_rig.add_subparsers(dest="which", required=True,
                               metavar="geometry")
    for which, blurb in (("circle", "deficit-descent plus Newton on the "
                                    "unit-length circle"),
                         ("sphere", "damped Newton on the zonal sphere")):
        p = _leaf(sub, which, which, leaves, "rigidity",
                  help=f"{which} rigidity probe", description=blurb)
        p.add_argument("--lambda", dest="lam", type=float,
                       help="coupling to probe")
        p.add_argument("--scan", metavar="A:B:N",
                       help="probe N couplings evenly spaced on [A, B]")
        p.add_argument("--inits", type=int, default=8,
                       help="random starts per coupling (default 8)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for the random starts (default 0)")
        p.add_argument("--tol", type=float, default=1e-9,
                       help="Newton residual target (default 1e-9)")
        p.add_argument("--resolution", type=int, default=256, metavar="N",
                       help="collocation points (default 256)")
        if which == "sphere":
            p.add_argument("--normalization",
                           choices=("unit-radius", "unit-volume"),
                           default="unit-radius", help="sphere scaling")

    # lambda-star ----------------------------------------------------------
    p_star = top.add_parser(
        "lambda-star", help="rigidity threshold by quotient minimization",
        description="Minimize the curvature-corrected Rayleigh quotient "
                    "over band-limited zonal fields; the infimum is the "
                    "threshold coupling below which only constants solve "
                    "the equation.")
    sub = p_star.add_subparsers(dest="which", required=True,
                                metavar="geometry")
    p = _leaf(sub, "sphere", "sphere", leaves, "lambda-star",
              help="zonal sphere search",
              description="Multistart local minimization in Legendre "
                          "coefficient space with a mode-doubling "
                          "refinement pass.")
    p.add_argument("--normalization",
                   choices=("unit-radius", "unit-volume"),
                   default="unit-radius", help="sphere scaling")
    p.add_argument("--resolution", type=int, default=128, metavar="N",
                   help="collocation points (default 128)")
    p.add_argument("--seeds", type=int, default=16,
                   help="multistart count (default 16)")
    p.add_argument("--modes", type=int, default=12,
                   help="band limit of the probe space (default 12)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the starts (default 0)")
    p.add_argument("--min-field-file", metavar="PATH",
                   help="save the minimizing field as CSV")

    # flow -----------------------------------------------------------------
    p_flow = top.add_parser(
        "flow", help="nonlinear diffusion flow diagnostics",
        description="Integrate the mass-conserving flow whose energy "
                    "decreases at the dissipation rate, and trace t, F, "
                    "G, mass, sup_f as CSV.")
    sub = p_flow.add_subparsers(dest="which", required=True,
                                metavar="geometry")
    p = _leaf(sub, "sphere", "sphere", leaves, "flow",
              help="zonal sphere flow",
              description="Explicit Heun stepping with a diffusion-limited "
                          "adaptive timestep.")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="coupling recorded in the diagnostics")
    p.add_argument("--init", metavar="SPEC",
                   help="initial field: zero, cos[:amp], "
                        "random[:seed[:modes]], or file:path")
    p.add_argument("--t-final", dest="t_final", type=float,
                   help="integration horizon")
    p.add_argument("--safety", type=float, default=0.25,
                   help="fraction of the stable step (default 0.25)")
    p.add_argument("--samples", type=int, default=256,
                   help="rows in the trace (default 256)")
    p.add_argument("--resolution", type=int, default=64, metavar="N",
                   help="collocation points (default 64)")
    p.add_argument("--normalization",
                   choices=("unit-radius", "unit-volume"),
                   default="unit-radius", help="sphere scaling")

    # weights --------------------------------------------------------------
    p_w = top.add_parser(
        "weights", help="weighted planar thresholds and solvers",
        description="Radial weights on the truncated plane: threshold "
                    "constants, chemotaxis steady states, perturbation "
                    "bounds, and the weighted Euler-Lagrange equation.  "
                    "Weight syntax: stereographic, gaussian[:sigma], "
                    "keller-segel:mass, ks-selfsim:mass:epsilon.")
    sub = p_w.add_subparsers(dest="which", required=True, metavar="action")

    def weights_common(p, with_weight=True):
        if with_weight:
            p.add_argument("--weight", metavar="KIND[:PARAM..]",
                           help="weight specification")
        p.add_argument("--resolution", type=int, default=1024, metavar="N",
                       help="radial collocation points (default 1024)")
        p.add_argument("--radius", type=float, default=20.0,
                       help="truncation radius (default 20)")
        p.add_argument("--profiles", metavar="PATH",
                       help="also write node profiles r, mu, g, dg, lap_g "
                            "as CSV")

    p = _leaf(sub, "lambda-star", "lambda-star", leaves, "weights",
              help="threshold constant of a weight",
              description="Infimum over the plane of "
                          "(-lap log mu)/(8 pi mu), the coupling below "
                          "which radial solutions are constant.")
    weights_common(p)
    p = _leaf(sub, "solve-ks", "solve-ks", leaves, "weights",
              help="chemotaxis steady-state weight",
              description="Damped fixed-point solve of the steady "
                          "chemotaxis system at the given cell mass; "
                          "reports the recovered mass and the threshold "
                          "of the resulting weight.")
    weights_common(p, with_weight=False)
    p.add_argument("--mass", type=float, help="cell mass in (0, 8 pi)")
    p.add_argument("--epsilon", type=float, default=0.0,
                   help="self-similar drift strength (default 0)")
    p = _leaf(sub, "perturbation", "perturbation", leaves, "weights",
              help="threshold bound for perturbed weights",
              description="Closed-form lower bound "
                          "e^{-Var(h)}(1 + inf curvature/8) for the "
                          "stereographic weight perturbed by h, checked "
                          "against the computed threshold.")
    weights_common(p, with_weight=False)
    p.add_argument("--amplitude", type=float, default=0.05,
                   help="amplitude of h = A/(1+r^2)^P (default 0.05)")
    p.add_argument("--power", type=float, default=1.0,
                   help="decay power P of the built-in family (default 1)")
    p.add_argument("--h-file", dest="h_file", metavar="PATH",
                   help="read h from a field CSV instead")
    p = _leaf(sub, "el", "el", leaves, "weights",
              help="weighted Euler-Lagrange multistart",
              description="Solve -(1/(8 pi)) lap u + lambda mu = "
                          "lambda e^u mu under the mass normalization, "
                          "from a constant start plus random starts.")
    weights_common(p)
    p.add_argument("--lambda", dest="lam", type=float, help="coupling")
    p.add_argument("--inits", type=int, default=8,
                   help="starts including the constant one (default 8)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the random starts (default 0)")
    p.add_argument("--tol", type=float, default=1e-9,
                   help="Newton residual target (default 1e-9)")
    p = _leaf(sub, "deficit", "deficit", leaves, "weights",
              help="weighted inequality deficit of a field",
              description="Deficit (1/(16 pi)) int |grad u|^2 - lambda "
                          "(log int e^u dmu - int u dmu), nonnegative "
                          "up to the threshold coupling.")
    weights_common(p)
    p.add_argument("--lambda", dest="lam", type=float, help="coupling")
    p.add_argument("--sigma", type=float,
                   help="evaluate at the dilation family member sigma")
    p.add_argument("--u-file", dest="u_file", metavar="PATH",
                   help="evaluate at a field read from CSV")

    # identities -----------------------------------------------------------
    p_id = top.add_parser(
        "identities", help="integration-by-parts identity suite",
        description="Machine checks of every exchange-of-derivatives "
                    "identity on random band-limited fields, as CSV "
                    "reports.  Exits 3 when any check fails.")
    sub = p_id.add_subparsers(dest="which", required=True, metavar="action")
    p = _leaf(sub, "run", "run", leaves, "identities",
              help="run a suite",
              description="Each trial draws one random field per geometry "
                          "and evaluates both sides of every registered "
                          "identity.")
    p.add_argument("--suite", choices=("circle", "sphere", "plane", "all"),
                   default="all", help="which suite (default all)")
    p.add_argument("--trials", type=int, default=32,
                   help="random fields per geometry (default 32)")
    p.add_argument("--seed", type=int, default=7,
                   help="master seed; trial i uses the spawn [seed, i]")
    p.add_argument("--tol", type=float, default=None,
                   help="override the per-geometry tolerance table")

    return parser, leaves


# ---------------------------------------------------------------------------
# entry point


def _dispatch(args):
    jobs = _resolve_jobs(args)
    handler = _HANDLERS[(args.command, args.which)]
    if args.output:
        with open(args.output, "w", newline="") as fh:
            return handler(args, fh, jobs)
    return handler(args, sys.stdout, jobs)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, leaves = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return 0 if not exc.code else int(exc.code)
        if args.config:
            config = _read_config(args.config)
            _apply_config(parser, _section_items(config, "global"), "global")
            leaf = leaves[(args.command, args.which)]
            _apply_config(leaf, _section_items(config, args.command),
                          args.command)
            try:
                args = parser.parse_args(argv)
            except SystemExit as exc:
                return 0 if not exc.code else int(exc.code)
        return _dispatch(args)
    except SolverError as exc:
        print(f"onofri-lab: {exc}", file=sys.stderr)
        return 1
    except InvalidParameterError as exc:
        print(f"onofri-lab: {exc}", file=sys.stderr)
        return 2
    except OnofriLabError as exc:
        print(f"onofri-lab: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
