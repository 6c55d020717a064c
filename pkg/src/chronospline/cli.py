"""Command-line interface.

Subcommands: assemble, symbols, cfl-table, conditioning, solve-ode,
solve-wave, run, selfcheck.  Exit codes for solve-wave: 0 success,
2 singular system, 3 configuration error.  The environment variable
CHRONOSPLINE_PRECISION_BITS sets the working precision of the
high-precision invertibility check.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analysis, conditioning, report, symbols, temporal, wavefields
from .experiments import EXPERIMENT_IDS, ExperimentSpec, run_experiment, selfcheck
from .ode import OdeProblem, SingularSystemError, solve_ode
from .spatial import (
    BoundaryCondition,
    DIRICHLET,
    NEUMANN0,
    PERIODIC,
    SpatialDiscretization,
)
from .spacetime import SpaceTimeProblem, solve_space_time


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chronospline",
        description="space-time spline wave discretization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("assemble", help="emit a temporal matrix")
    pa.add_argument("--p", type=int, required=True)
    pa.add_argument("--n-intervals", type=int, required=True)
    pa.add_argument("--horizon", type=float, required=True)
    pa.add_argument("--matrix", choices=["B", "C", "M"], required=True)
    pa.add_argument("--format", choices=["csv", "json"], default="csv")
    pa.add_argument("--out", default=None)
    pa.set_defaults(func=cmd_assemble)

    ps = sub.add_parser("symbols", help="sample the matrix symbols")
    ps.add_argument("--p", type=int, required=True)
    ps.add_argument("--grid", type=int, default=512)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_symbols)

    pc = sub.add_parser("cfl-table", help="CFL constants per degree")
    pc.add_argument("--p-max", type=int, default=6)
    pc.add_argument("--out", default=None)
    pc.set_defaults(func=cmd_cfl_table)

    pk = sub.add_parser("conditioning", help="condition-number sweeps")
    pk.add_argument("--family", choices=list(conditioning.MATRIX_FAMILIES),
                    required=True)
    pk.add_argument("--p", type=int, required=True)
    pk.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    pk.add_argument("--rho", type=float, default=None)
    pk.add_argument("--rho-sweep", default=None, metavar="LO:HI:STEPS")
    pk.add_argument("--out", required=True)
    pk.set_defaults(func=cmd_conditioning)

    po = sub.add_parser("solve-ode", help="solve the scalar temporal system")
    po.add_argument("--p", type=int, required=True)
    po.add_argument("--n", type=int, required=True)
    po.add_argument("--horizon", type=float, required=True)
    po.add_argument("--mu", type=float, required=True)
    po.add_argument("--route", choices=["b", "c", "mono"], default="b")
    po.add_argument("--rhs", default="one",
                    help="one | poly:K | file:PATH (coefficient vector)")
    po.add_argument("--out", default=None)
    po.set_defaults(func=cmd_solve_ode)

    pw = sub.add_parser("solve-wave", help="solve a space-time wave problem")
    pw.add_argument("--config", required=True)
    pw.add_argument("--out", default=None, help="CSV path for the sampled solution")
    pw.set_defaults(func=cmd_solve_wave)

    pr = sub.add_parser("run", help="run a reproduction experiment")
    pr.add_argument("--experiment", choices=list(EXPERIMENT_IDS), required=True)
    pr.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="KEY=VALUE")
    pr.add_argument("--out", required=True)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--jobs", type=int, default=1)
    pr.add_argument("--time-budget", type=float, default=600.0)
    pr.set_defaults(func=cmd_run)

    pf = sub.add_parser("selfcheck", help="run the module invariant suites")
    pf.add_argument("--only", default=None)
    pf.set_defaults(func=cmd_selfcheck)
    return parser


def cmd_assemble(args):
    try:
        ts = temporal.assemble_temporal(args.p, args.n_intervals, args.horizon)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    mat = {"B": ts.B_h, "C": ts.C_h, "M": ts.M_h}[args.matrix]
    if args.format == "json":
        payload = {"p": args.p, "n_intervals": args.n_intervals,
                   "horizon": args.horizon, "matrix": args.matrix,
                   "entries": mat.tolist()}
        text = json.dumps(payload, indent=2) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    rows = [(i, j, mat[i, j]) for i in range(mat.shape[0])
            for j in range(mat.shape[1])]
    prov = [f"temporal matrix {args.matrix}, p={args.p}, "
            f"N={args.n_intervals}, T={args.horizon}"]
    if args.out:
        report.write_csv(args.out, ["row", "col", "value"], rows, prov)
    else:
        for line in prov:
            print(f"# {line}")
        print("row,col,value")
        for r in rows:
            print(",".join(report.format_value(v) for v in r))
    return 0


def cmd_symbols(args):
    table = symbols.SymbolTable(args.p)
    ths = np.linspace(-math.pi, math.pi, args.grid)
    rows = [(float(t), float(table.eval("B", t)), float(table.eval("C", t)),
             float(table.eval("M", t))) for t in ths]
    report.write_csv(args.out, ["theta", "B", "C", "M"], rows,
                     [f"matrix symbols for degree {args.p}"])
    fig = args.out.rsplit(".", 1)[0] + ".png"
    report.line_figure(fig, {w: ([r[0] for r in rows], [r[k + 1] for r in rows])
                             for k, w in enumerate("BCM")},
                       xlabel="theta", ylabel="value",
                       title=f"symbols, degree {args.p}")
    return 0


def cmd_cfl_table(args):
    rows = []
    for p in range(1, args.p_max + 1):
        c = symbols.cfl_constants(p)
        rows.append((p, c.theta_max, c.rho_tilde, c.theta_p, c.rho_p, c.E_p))
    cols = ["p", "theta_max", "rho_tilde", "theta_p", "rho_p", "E_p"]
    if args.out:
        report.write_csv(args.out, cols, rows,
                         ["CFL-type constants of the equal-degree variant"])
    else:
        print(",".join(cols))
        for r in rows:
            print(",".join(report.format_value(v) for v in r))
    return 0


def cmd_conditioning(args):
    if args.rho_sweep:
        try:
            lo, hi, steps = args.rho_sweep.split(":")
            rhos = np.linspace(float(lo), float(hi), int(steps))
        except ValueError:
            print("error: --rho-sweep expects LO:HI:STEPS", file=sys.stderr)
            return 3
        n = max(args.sizes)
        sweep = conditioning.rho_sweep(args.family, args.p, n, rhos)
        rows = [(args.p, n, rho, k) for rho, k in sweep]
        report.write_csv(args.out, ["p", "n", "rho", "kappa1"], rows,
                         [f"family {args.family}, fixed n={n}"])
        fig = args.out.rsplit(".", 1)[0] + ".png"
        report.line_figure(fig, {args.family: ([r[2] for r in rows],
                                               [r[3] for r in rows])},
                           xlabel="rho", ylabel="kappa_1", logy=True,
                           title=f"{args.family}, n={n}")
        return 0
    fit = conditioning.condition_sweep(args.family, args.p, args.sizes, args.rho)
    rows = [(args.p, n, k) for n, k in zip(fit.sizes, fit.kappas)]
    report.write_csv(args.out, ["p", "n", "kappa1"], rows,
                     [f"family {args.family}"
                      + (f", rho={args.rho}" if args.rho is not None else ""),
                      f"log-log growth slope {fit.slope!r}"])
    fig = args.out.rsplit(".", 1)[0] + ".png"
    report.line_figure(fig, {args.family: (fit.sizes, fit.kappas)},
                       xlabel="n", ylabel="kappa_1", logx=True, logy=True,
                       title=f"{args.family}: slope {fit.slope:.2f}")
    return 0


def cmd_solve_ode(args):
    route = {"b": "via_B", "c": "via_C", "mono": "monolithic"}[args.route]
    try:
        source = _parse_rhs(args.rhs)
        prob = OdeProblem(mu=args.mu, T=args.horizon, N=args.n, p=args.p,
                          source=source)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    try:
        sol = solve_ode(prob, route)
    except SingularSystemError as err:
        print(f"singular system: {err}", file=sys.stderr)
        return 2
    rows = [(j, sol.u[j], sol.v[j]) for j in range(prob.n)]
    prov = [f"coefficients of u and v in the initial-trimmed basis, "
            f"p={args.p}, N={args.n}, T={args.horizon}, mu={args.mu}, "
            f"route={route}"]
    if args.out:
        report.write_csv(args.out, ["index", "u", "v"], rows, prov)
    else:
        for line in prov:
            print(f"# {line}")
        print("index,u,v")
        for r in rows:
            print(",".join(report.format_value(v) for v in r))
    return 0


def _parse_rhs(text):
    if text == "one":
        return lambda t: 1.0
    if text.startswith("poly:"):
        k = int(text.split(":", 1)[1])
        return lambda t: t**k
    if text.startswith("file:"):
        path = text.split(":", 1)[1]
        return np.loadtxt(path)
    raise ValueError(f"unknown rhs specification {text!r}")


# ---------------------------------------------------------------------------
# solve-wave config handling
# ---------------------------------------------------------------------------

_NAMED_FUNCTIONS_1D = {
    "none": None,
    "sin-pi-x": lambda x: math.sin(math.pi * x),
    "pi-sin-pi-x": lambda x: math.pi * math.sin(math.pi * x),
    "pulse-bump": lambda x: wavefields.bump(5.0 * x - 1.0),
    "pulse-bump-velocity": lambda x: -5.0 * wavefields.bump_derivative(5.0 * x - 1.0),
    "tent": wavefields.tent_profile()[0],
    "tent-velocity": lambda x: -wavefields.tent_profile()[1](x),
    "bump4": wavefields.bump_profile()[0],
    "bump4-velocity": lambda x: -wavefields.bump_profile()[1](x),
}


def parse_wave_config(path):
    """Plain key=value config -> (SpaceTimeProblem, exact or None, sampling)."""
    raw = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {line!r}")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
    dim = int(raw.get("dim", "1"))
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    box = _parse_box(raw.get("domain", "0,1"), dim)
    p = int(raw.get("p", "1"))
    nx = int(raw.get("nx", "16"))
    ny = int(raw.get("ny", str(nx)))
    nt = int(raw.get("nt", "16"))
    horizon = float(raw.get("horizon", "1"))
    faces = ("left", "right") if dim == 1 else ("left", "right", "bottom", "top")
    bcs = {}
    for face in faces:
        bcs[face] = _parse_bc(raw.get(f"bc.{face}", "dirichlet0"))
    regions = _parse_regions(raw.get("c-regions", ""), box, dim)
    c0_points = tuple(float(v) for v in raw.get("c0-points", "").split(";") if v)
    sd = SpatialDiscretization(p, nx if dim == 1 else (nx, ny), box, bcs,
                               regions=regions, c0_points=c0_points)
    source, exact = _parse_source_exact(raw, dim)
    u0 = _named(raw.get("u0", "none"), dim)
    v0 = _named(raw.get("v0", "none"), dim)
    pb = SpaceTimeProblem(spatial=sd, p=p, nt=nt, T=horizon, source=source,
                          U0=u0, V0=v0)
    sampling = {"nx": int(raw.get("sample-nx", "33")),
                "nt": int(raw.get("sample-nt", "9"))}
    return pb, exact, sampling


def _parse_box(text, dim):
    parts = text.split(";")
    if len(parts) != dim:
        raise ValueError(f"domain needs {dim} interval(s), got {text!r}")
    out = []
    for part in parts:
        a, b = part.split(",")
        out.append((float(a), float(b)))
    return tuple(out)


def _parse_bc(text):
    if text == "dirichlet0":
        return DIRICHLET
    if text == "neumann":
        return NEUMANN0
    if text == "periodic":
        return PERIODIC
    if text.startswith("robin:"):
        return BoundaryCondition("robin", impedance=float(text.split(":", 1)[1]))
    raise ValueError(f"unknown boundary condition {text!r}")


def _parse_regions(text, box, dim):
    if not text:
        return None
    regions = []
    for part in text.split(";"):
        vals = [float(v) for v in part.split(",")]
        if dim == 1:
            if len(vals) != 3:
                raise ValueError("1D region needs lo,hi,c")
            regions.append((((vals[0], vals[1]),), vals[2]))
        else:
            if len(vals) != 5:
                raise ValueError("2D region needs x0,x1,y0,y1,c")
            regions.append((((vals[0], vals[1]), (vals[2], vals[3])), vals[4]))
    return regions


def _named(name, dim):
    if dim == 2:
        if name == "none":
            return None
        if name.startswith("gaussian:"):
            delta = float(name.split(":", 1)[1])
            return wavefields.gaussian_2d((1.0, 1.0), delta)
        raise ValueError(f"unknown 2D data function {name!r}")
    if name not in _NAMED_FUNCTIONS_1D:
        raise ValueError(f"unknown data function {name!r}")
    return _NAMED_FUNCTIONS_1D[name]


def _parse_source_exact(raw, dim):
    source_name = raw.get("source", "none")
    exact_name = raw.get("exact", "none")
    source, exact = None, None
    if source_name == "oscillating-string":
        field, vel, src = wavefields.oscillating_string()
        source = src
    elif source_name != "none":
        raise ValueError(f"unknown source {source_name!r}")
    if exact_name == "oscillating-string":
        exact = wavefields.oscillating_string()[0]
    elif exact_name == "conserved-energy":
        exact = wavefields.conserved_energy_mode()[0]
    elif exact_name == "two-media":
        exact = wavefields.singular_interface_problem(
            float(raw.get("horizon", "1")))[0].as_exact_field()
    elif exact_name != "none":
        raise ValueError(f"unknown exact field {exact_name!r}")
    return source, exact


def cmd_solve_wave(args):
    try:
        pb, exact, sampling = parse_wave_config(args.config)
    except (ValueError, OSError, KeyError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 3
    try:
        sol = solve_space_time(pb)
    except SingularSystemError as err:
        print(f"singular system: {err}", file=sys.stderr)
        return 2
    sd = pb.spatial
    ts = np.linspace(0.0, pb.T, sampling["nt"])
    if sd.dim == 1:
        xs = np.linspace(*sd.box[0], sampling["nx"])
        u = analysis.evaluate_space_time(sol, xs, ts)
        v = analysis.evaluate_space_time(sol, xs, ts, which="V")
        rows = [(float(x), float(t), float(u[i, k]), float(v[i, k]))
                for i, x in enumerate(xs) for k, t in enumerate(ts)]
        cols = ["x", "t", "U", "V"]
    else:
        xs = np.linspace(*sd.box[0], sampling["nx"])
        ys = np.linspace(*sd.box[1], sampling["nx"])
        u = analysis.evaluate_space_time_2d(sol, xs, ys, ts)
        v = analysis.evaluate_space_time_2d(sol, xs, ys, ts, which="V")
        rows = [(float(x), float(y), float(t),
                 float(u[i, j, k]), float(v[i, j, k]))
                for i, x in enumerate(xs) for j, y in enumerate(ys)
                for k, t in enumerate(ts)]
        cols = ["x", "y", "t", "U", "V"]
    prov = [f"sampled solution, p={pb.p}, nt={pb.nt}, T={pb.T}",
            f"rho_effective={sol.diagnostics['rho_effective']!r}"]
    if exact is not None:
        rep = analysis.error_norms(sol, exact)
        prov.append(f"relative errors vs exact: L2={rep.L2!r} "
                    f"H1={rep.H1semi!r} cH1={rep.weighted_cH1!r}")
        print(f"L2={rep.L2:.6e} H1={rep.H1semi:.6e} cH1={rep.weighted_cH1:.6e}")
    if args.out:
        report.write_csv(args.out, cols, rows, prov)
    else:
        for line in prov:
            print(f"# {line}")
        print(",".join(cols))
        for r in rows:
            print(",".join(report.format_value(val) for val in r))
    return 0


def cmd_run(args):
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 3
        key, value = item.split("=", 1)
        overrides[key] = _coerce(value)
    try:
        spec = ExperimentSpec(experiment=args.experiment, overrides=overrides,
                              out_dir=args.out, seed=args.seed,
                              time_budget=args.time_budget, jobs=args.jobs)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    bundle = run_experiment(spec)
    print(json.dumps(bundle.summary(), indent=2, sort_keys=True,
                     default=_coerce_json))
    return 0 if bundle.ok else 1


def _coerce_json(obj):
    import numpy as _np
    if isinstance(obj, (_np.bool_, _np.integer, _np.floating)):
        return obj.item()
    raise TypeError(str(type(obj)))


def _coerce(value):
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    if value.startswith("[") and value.endswith("]"):
        return [_coerce(v.strip()) for v in value[1:-1].split(",") if v.strip()]
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def cmd_selfcheck(args):
    try:
        ok, results = selfcheck(only=args.only)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    payload = {
        "pass": bool(ok),
        "modules": {mod: [{"check": nm, "pass": bool(passed), "detail": detail}
                          for nm, passed, detail in checks]
                    for mod, checks in results.items()},
    }
    print(json.dumps(payload, indent=2, sort_keys=True, default=_coerce_json))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
