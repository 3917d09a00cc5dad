"""Command-line front end: ``hhlab <command> [options]``.

Exit codes: 0 success, 1 hypothesis violation, 2 invalid input,
3 numerical failure. Every JSON report embeds its run manifest; ``hhlab
replay MANIFEST`` re-runs it and reproduces the report byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from hhlab import __version__
from hhlab.errors import HHLabError, HypothesisViolation, InvalidInputError, NumericalError

COMMANDS = ("ratio", "bounds", "john", "transport", "torsion", "kernel-mass", "wos", "survival",
            "sweep-triangle", "search", "annulus-counterexample", "thm4")
EXIT_OK, EXIT_HYPOTHESIS, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _point(text):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse point {text!r}") from exc


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse list {text!r}") from exc


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--domain", help="domain spec (JSON)")
    common.add_argument("--function", help="function spec (JSON)")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--budget", type=int, default=None, help="quadrature budget")
    common.add_argument("--h", type=float, default=None, help="grid spacing")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--plot", help="write an SVG plot of the report")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = _Parser(prog="hhlab", description="Hermite-Hadamard inequality toolkit")
    p.add_argument("--version", action="version", version=f"hhlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ratio", parents=[common], help="normalized Hermite-Hadamard ratio")
    s.add_argument("--method", choices=("exact-fan", "polar", "quasi-mc"))
    s = sub.add_parser("bounds", parents=[common], help="table of dimensional constants")
    s.add_argument("--n-range", default="2..6")
    s = sub.add_parser("john", parents=[common], help="John ellipsoid and containment certificate")
    s.add_argument("--factor", type=float, default=None)
    s = sub.add_parser("transport", parents=[common], help="transport density profile")
    s.add_argument("--direction", default=None, help="comma-separated direction; default: best")
    s.add_argument("--samples", type=int, default=4096)
    s = sub.add_parser("torsion", parents=[common], help="torsion function on a grid")
    s.add_argument("--grid-out", default=None, help="write the field (.csv or binary)")
    s = sub.add_parser("kernel-mass", parents=[common], help="boundary kernel mass K")
    s.add_argument("--method", choices=("fd", "wos"), default="fd")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--bins", type=int, default=32)
    s = sub.add_parser("wos", parents=[common], help="walk-on-spheres exit time and harmonic value")
    s.add_argument("--x", default=None)
    s.add_argument("--samples", type=int, default=100_000)
    s = sub.add_parser("survival", parents=[common], help="Brownian survival probability")
    s.add_argument("--x", default=None)
    s.add_argument("--times", default="0.5")
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--samples", type=int, default=100_000)
    s = sub.add_parser("sweep-triangle", parents=[common], help="triangle-family closed-form sweep")
    s.add_argument("--a-min", type=float, default=1.0)
    s.add_argument("--a-max", type=float, default=2.0 ** 20)
    s = sub.add_parser("search", parents=[common], help="extremal ratio search")
    s.add_argument("--family", choices=("triangle", "polygon", "polygon+maxaffine"), default="polygon+maxaffine")
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--iterations", type=int, default=600)
    s.add_argument("--restarts", type=int, default=4)
    s = sub.add_parser("annulus-counterexample", parents=[common], help="annulus ratio growth")
    s.add_argument("--eps", default="1e-2,1e-3")
    s = sub.add_parser("thm4", parents=[common], help="empirical survival-based constant")
    s.add_argument("--samples", type=int, default=20_000)
    s.add_argument("--times", default=None)
    s = sub.add_parser("replay", help="re-run a manifest")
    s.add_argument("manifest")
    s.add_argument("--out")
    s.add_argument("--plot")
    return p


# ---------------------------------------------------------------- commands


def _need(obj, what):
    if obj is None:
        raise InvalidInputError(f"--{what} is required for this command")
    return obj


def _outline(domain, m=256):
    if domain.dim != 2:
        return None
    if hasattr(domain, "vertices"):
        v = domain.vertices
        return np.vstack([v, v[:1]])
    b = domain.boundary_samples(m)
    order = np.argsort(b.params)
    return b.points[order]


def _budget(args):
    from hhlab.quadrature import DEFAULT_BUDGET

    return args.budget if args.budget is not None else DEFAULT_BUDGET


def _default_h(domain, args):
    if args.h is not None:
        return args.h
    from hhlab.geometry import inradius

    r, _ = inradius(domain)
    return r / 20


def cmd_ratio(args, domain, f):
    from hhlab.quadrature import RatioReport, hh_ratio

    rep = hh_ratio(_need(domain, "domain"), _need(f, "function"), budget=_budget(args), seed=args.seed,
                   method=args.method)
    return rep.to_dict(), (list(RatioReport.CSV_FIELDS), [rep.csv_row()])


def _parse_range(text):
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError as exc:
        raise InvalidInputError(f"--n-range must look like 2..6, got {text!r}") from exc
    if lo < 2 or hi < lo:
        raise InvalidInputError("--n-range needs 2 <= lo <= hi")
    return lo, hi


def cmd_bounds(args, domain, f):
    from hhlab.bounds import constants_table, proposition_2d_bound

    lo, hi = _parse_range(args.n_range)
    rows = [t.as_dict() for t in constants_table(lo, hi)]
    res = {"rows": rows, "proposition_2d_disk": proposition_2d_bound(1.0, 1.0)}
    keys = ["n", "simple", "refined", "asymptotic_ratio"]
    return res, (keys, [[r[k] for k in keys] for r in rows])


def cmd_john(args, domain, f):
    from hhlab.john import certify_containment, john_ellipsoid

    domain = _need(domain, "domain")
    E, diag = john_ellipsoid(domain, return_diagnostics=True)
    n = domain.dim
    factor = args.factor if args.factor is not None else float(n)
    res = {"center": E.center, "semi_axes": E.semi_axes, "frame": E.frame, "log_det": diag.log_det,
           "gap_bound": diag.gap_bound, "newton_steps": diag.newton_steps,
           "volume_ratio": domain.volume() / E.volume(), "factor": factor,
           "certified": certify_containment(domain, E, factor), "outline": _outline(domain)}
    return res, (["axis", "semi_axis"], [[i, a] for i, a in enumerate(E.semi_axes)])


def cmd_transport(args, domain, f):
    from hhlab.transport import best_direction, transport_profile

    domain = _need(domain, "domain")
    if args.direction:
        d = _point(args.direction)
        best = None
    else:
        d, best = best_direction(domain, seed=args.seed)
    prof = transport_profile(domain, d, samples=args.samples)
    res = prof.to_dict()
    res["mass_defect"] = prof.mass_defect()
    res["best_direction_constant"] = best
    res["outline"] = _outline(domain)
    return res, (["param", "density"], prof.rows().tolist())


def cmd_torsion(args, domain, f):
    from hhlab.pde import solve_torsion

    domain = _need(domain, "domain")
    h = _default_h(domain, args)
    F = solve_torsion(domain, h)
    act = F.active()
    X = F.coords()[act]
    v = F.values[act]
    i = int(np.argmin(v))
    if args.grid_out:
        if args.grid_out.endswith(".csv"):
            F.to_csv(args.grid_out)
        else:
            F.to_binary(args.grid_out)
    res = {"h": h, "dims": list(F.dims), "origin": F.origin, "min": float(v[i]), "argmin": X[i],
           "max_exit_time": -float(v[i]), "active_nodes": int(act.sum()), "outline": _outline(domain)}
    return res, (["h", "min", "active_nodes"], [[h, float(v[i]), int(act.sum())]])


def cmd_kernel_mass(args, domain, f):
    from hhlab.geometry import inradius

    domain = _need(domain, "domain")
    if args.method == "fd":
        from hhlab.pde import kernel_mass

        prof = kernel_mass(domain, _default_h(domain, args))
    else:
        from hhlab.stochastic import wos_kernel_mass

        prof = wos_kernel_mass(domain, args.samples, args.seed, bins=args.bins)
    r, _ = inradius(domain)
    res = prof.to_dict()
    res.update({"mass_defect": prof.mass_defect(), "inradius": r, "rigidity_ratio": prof.sup_K / r,
                "outline": _outline(domain)})
    return res, (["param", "K"], np.column_stack([prof.params, prof.K]).tolist())


def _start_point(args, domain):
    if args.x:
        return _point(args.x)
    from hhlab.geometry import inradius

    return inradius(domain)[1]


def cmd_wos(args, domain, f):
    from hhlab.stochastic import wos_exit, wos_exit_time

    domain = _need(domain, "domain")
    x = _start_point(args, domain)
    t, se = wos_exit_time(domain, x, args.samples, args.seed)
    res = {"x": x, "N": args.samples, "exit_time": t, "exit_time_se": se}
    if f is not None:
        Y = wos_exit(domain, x, args.samples, args.seed)
        vals = f.eval(Y)
        res["harmonic_estimate"] = float(vals.mean())
        res["harmonic_se"] = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return res, (["exit_time", "exit_time_se"], [[t, se]])


def cmd_survival(args, domain, f):
    from hhlab.geometry import inradius
    from hhlab.stochastic import decay_rate, survival_curve

    domain = _need(domain, "domain")
    x = _start_point(args, domain)
    times = sorted(_floats(args.times))
    r, _ = inradius(domain)
    dt = args.dt if args.dt is not None else min(r * r / 100, times[0] / 10)
    est = survival_curve(domain, x, times, dt, args.samples, args.seed)
    rows = [e.to_dict() for e in est]
    res = {"x": x, "dt": dt, "N": args.samples, "estimates": rows}
    if len(est) >= 2 and all(e.survived > 0 for e in est):
        res["decay_rate"] = decay_rate(est)
    keys = ["t", "survival", "absorbed", "std_error"]
    return res, (keys, [[r_[k] for k in keys] for r_ in rows])


def _a_grid(a_min, a_max):
    if not (a_min > 0 and a_max >= a_min):
        raise InvalidInputError("need 0 < a-min <= a-max")
    ks = np.arange(math.floor(math.log2(a_min)), math.floor(math.log2(a_max)) + 1)
    grid = [2.0 ** int(k) for k in ks if a_min <= 2.0 ** int(k) <= a_max]
    if not grid or grid[-1] < a_max:
        grid.append(float(a_max))
    return grid


def cmd_sweep_triangle(args, domain, f):
    from hhlab.search import sweep_triangle

    r = sweep_triangle(_a_grid(args.a_min, args.a_max), budget=_budget(args), seed=args.seed)
    rows = list(zip(r.extra["a_grid"], r.extra["values"]))
    return r.to_dict(), (["a", "closed_form"], rows)


def cmd_search(args, domain, f):
    from hhlab.search import SearchConfig, optimize

    cfg = SearchConfig(args.family, args.k, args.m, args.iterations, args.restarts, args.seed, _budget(args))
    r = optimize(cfg)
    keys = list(r.trace[0].keys()) if r.trace else ["evaluation", "ratio"]
    return r.to_dict(), (keys, [[row.get(k) for k in keys] for row in r.trace])


def cmd_annulus(args, domain, f):
    from hhlab.pde import annulus_counterexample

    rows = [annulus_counterexample(e).to_dict() for e in _floats(args.eps)]
    keys = ["eps", "interior", "boundary", "inradius", "ratio"]
    return {"rows": rows}, (keys, [[r[k] for k in keys] for r in rows])


def cmd_thm4(args, domain, f):
    from hhlab.geometry import Ball
    from hhlab.stochastic import theorem4_empirical

    domain = domain if domain is not None else Ball(np.zeros(2), 1.0)
    times = _floats(args.times) if args.times else None
    rep = theorem4_empirical(domain, times=times, N=args.samples, seed=args.seed)
    res = rep.to_dict()
    keys = ["t", "deficit", "std_error", "c"]
    rows = [list(r) for r in zip(rep.times, rep.deficits, rep.std_errors, rep.c_per_time)]
    return res, (keys, rows)


HANDLERS = {"ratio": cmd_ratio, "bounds": cmd_bounds, "john": cmd_john, "transport": cmd_transport,
            "torsion": cmd_torsion, "kernel-mass": cmd_kernel_mass, "wos": cmd_wos,
            "survival": cmd_survival, "sweep-triangle": cmd_sweep_triangle, "search": cmd_search,
            "annulus-counterexample": cmd_annulus, "thm4": cmd_thm4}


# ---------------------------------------------------------------- reports


_NON_PARAMS = {"command", "domain", "function", "out", "plot"}


def make_manifest(args, domain_spec, function_spec, timestamp=None) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _NON_PARAMS}
    if timestamp is None:
        timestamp = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    return {"command": args.command, "domain": args.domain, "function": args.function,
            "domain_spec": domain_spec, "function_spec": function_spec, "params": params,
            "seed": args.seed, "version": __version__, "timestamp": timestamp}


def render(report: dict, table, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table[0])
        for row in table[1]:
            w.writerow([_jsonable(v) for v in row])
        return buf.getvalue()
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def _curves(report):
    res = report.get("result", {})
    cmd = report.get("command")
    if "density" in res and "params" in res:
        return [(res["params"], res["density"], "transport density")], "boundary arclength", "D"
    if "K" in res and "params" in res:
        return [(res["params"], res["K"], "K")], "boundary arclength", "K"
    if "estimates" in res:
        est = res["estimates"]
        return [([e["t"] for e in est], [e["survival"] for e in est], "survival")], "t", "survival"
    if cmd == "sweep-triangle":
        ex = res["extra"]
        return [(np.log2(ex["a_grid"]).tolist(), ex["values"], "closed form")], "log2 a", "ratio"
    if cmd == "search" and res.get("trace"):
        tr = res["trace"]
        return [([t["evaluation"] for t in tr], [t["ratio"] for t in tr], "incumbent")], "evaluation", "ratio"
    if cmd == "thm4":
        return [(res["times"], res["deficits"], "1 - max survival")], "t", "deficit"
    return None


def emit_plot(report: dict, path) -> None:
    """Standalone SVG of a report's curves (and the domain outline when present)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    curves = _curves(report)
    outline = report.get("result", {}).get("outline")
    if curves is None and outline is None:
        raise InvalidInputError(f"report of {report.get('command')!r} has no plottable payload")
    ncol = (curves is not None) + (outline is not None)
    with matplotlib.rc_context({"svg.hashsalt": "hhlab", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(1, ncol, figsize=(5 * ncol, 4), squeeze=False)
        k = 0
        if curves is not None:
            series, xl, yl = curves
            ax = axes[0, k]
            for x, y, label in series:
                ax.plot(x, [np.nan if v is None else v for v in y], lw=1.2, label=label)
            ax.set_xlabel(xl)
            ax.set_ylabel(yl)
            ax.legend(loc="best")
            k += 1
        if outline is not None:
            P = np.asarray(outline, float)
            ax = axes[0, k]
            ax.plot(P[:, 0], P[:, 1], "k-", lw=1.0)
            ax.set_aspect("equal")
            ax.set_title("domain")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)


def _execute(args, domain_spec, function_spec, timestamp=None):
    from hhlab.functions import function_from_spec
    from hhlab.geometry import domain_from_spec

    domain = domain_from_spec(domain_spec) if domain_spec is not None else None
    f = function_from_spec(function_spec) if function_spec is not None else None
    result, table = HANDLERS[args.command](args, domain, f)
    report = {"command": args.command, "result": result,
              "manifest": make_manifest(args, domain_spec, function_spec, timestamp)}
    text = render(report, table, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.plot:
        emit_plot(_jsonable(report), args.plot)
    return report


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read {what} {path}: {exc}") from exc


def _replay(ns):
    data = _read_json(ns.manifest, "manifest")
    man = data.get("manifest", data)
    try:
        params = dict(man["params"])
        args = argparse.Namespace(command=man["command"], domain=man.get("domain"),
                                  function=man.get("function"), out=ns.out, plot=ns.plot, **params)
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed manifest: {exc!r}") from exc
    if args.command not in HANDLERS:
        raise InvalidInputError(f"unknown command {args.command!r} in manifest")
    return _execute(args, man.get("domain_spec"), man.get("function_spec"), man.get("timestamp"))


def run(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except _ArgError as exc:
            print(f"hhlab: error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        if args.command == "replay":
            _replay(args)
            return EXIT_OK
        dspec = _read_json(args.domain, "domain spec") if args.domain else None
        fspec = _read_json(args.function, "function spec") if args.function else None
        _execute(args, dspec, fspec)
        return EXIT_OK
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except HypothesisViolation as exc:
        print(f"hhlab: hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (InvalidInputError, OSError) as exc:
        print(f"hhlab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"hhlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HHLabError as exc:
        print(f"hhlab: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
