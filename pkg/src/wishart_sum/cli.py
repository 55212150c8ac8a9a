"""Command-line interface: ``wishart-sum <command> MODEL.json [options]``.

Exit codes: 0 success, 2 finished with a validation warning (unstable or
unconverged grid points, a failed check), 1 error.
"""
import argparse
import json
import os
import sys
import warnings

import numpy as np
from scipy.interpolate import CubicSpline

from . import halfdeg, saddle, susy
from .charpoly import charpoly_coefficients, expect_inverse_charpoly
from .curves import DensityCurve
from .errors import DegenerateSigma, WishartSumError
from .modelspec import load_spec
from .sampler import histogram_tv, mc_density, sample_eigenvalues
from .validation import run_suite

EXIT_OK, EXIT_ERROR, EXIT_WARN = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _complex(text):
    """'re,im' or a plain real number."""
    parts = _floats(text)
    if len(parts) == 1:
        return complex(parts[0], 0.0)
    if len(parts) == 2:
        return complex(parts[0], parts[1])
    raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")


def _grid_arg(text):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be min:max:count, got {text!r}")
    if not (hi > lo and n >= 2):
        raise argparse.ArgumentTypeError("grid needs max > min and count >= 2")
    return lo, hi, n


def _threads(args):
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return args.threads
    env = os.environ.get("WISHART_SUM_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def _emit(text, path):
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _general_grid(spec, grid, count):
    if grid is not None:
        lo, hi, n = grid
        return np.linspace(lo, hi, n)
    hi = max(1.2 * spec.scale(), spec.scale() + 12 * spec.spread())
    return np.linspace(0.0, hi, count + 1)[1:]


def _need_samples(args):
    if args.seed is None:
        raise UsageError("Monte Carlo needs an explicit --seed")
    if args.samples is None or args.samples < 1:
        raise UsageError("--samples must be a positive integer")


def _mc_curve(spec, args):
    _need_samples(args)
    bins = args.bins
    if args.grid is not None:
        lo, hi, n = args.grid
        bins = np.linspace(lo, hi, n + 1)
    hist = mc_density(spec.pair(), args.samples, bins=bins, seed=args.seed, threads=_threads(args))
    meta = {"seed": args.seed, "samples": args.samples, "bins": int(hist.counts.size),
            "outside": hist.n_outside, "edges": [float(hist.bin_edges[0]), float(hist.bin_edges[-1])]}
    return DensityCurve(hist.centers, hist.density, "mc", meta), hist


def cmd_density(args):
    spec = load_spec(args.model)
    status = EXIT_OK
    if args.method == "exact":
        m = spec.halfdeg()
        grid = None if args.grid is None else np.linspace(*args.grid[:2], args.grid[2])
        curve = halfdeg.density(m, grid=grid)
    elif args.method == "susy":
        grid = _general_grid(spec, args.grid, 64)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            curve = susy.density_susy(spec.pair(), grid)
        if "unstable_points" in curve.metadata:
            status = EXIT_WARN
    elif args.method == "saddle":
        grid = _general_grid(spec, args.grid, 512)
        curve = saddle.density_saddle(spec.pair(), grid)
        if "no_convergence" in curve.metadata:
            status = EXIT_WARN
    else:
        curve, _ = _mc_curve(spec, args)
    _emit(curve.to_csv(), args.out)
    if status == EXIT_WARN:
        print("warning: some grid points are NaN, see the metadata lines", file=sys.stderr)
    return status


def cmd_kernel(args):
    m = load_spec(args.model).halfdeg()
    x = np.asarray(args.x)
    y = np.asarray(args.y)
    if x.size != y.size and min(x.size, y.size) != 1:
        raise UsageError("--x and --y need equal lengths (or one of them a single value)")
    x, y = np.broadcast_arrays(x, y)
    K = halfdeg.kernel(m, None, x, y)
    lines = ["x,y,kernel"] + [f"{a:.17g},{b:.17g},{k:.17g}" for a, b, k in zip(x, y, K)]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_rk(args):
    m = load_spec(args.model).halfdeg()
    pts = list(args.points)
    if len(pts) > m.N:
        raise UsageError(f"k = {len(pts)} points exceeds the bound k <= N = {m.N}")
    if not pts:
        raise UsageError("--points needs at least one value")
    out = {"points": pts}
    if args.oracle in ("kernel", "both"):
        out["kernel"] = halfdeg.correlation_Rk(m, None, pts)
    if args.oracle in ("andreief", "both"):
        out["andreief"] = halfdeg.andreief_Rk(m, pts)
    if args.oracle == "both":
        out["relative_deviation"] = abs(out["kernel"] - out["andreief"]) / max(abs(out["kernel"]), 1e-300)
    _emit(_json(out), args.out)
    return EXIT_OK


def cmd_charpoly(args):
    spec = load_spec(args.model)
    coef = charpoly_coefficients(spec.commuting())
    out = {"coefficients_ascending": [float(c) for c in coef]}
    if args.x:
        vals = np.polynomial.polynomial.polyval(np.asarray(args.x), coef)
        out["values"] = [{"x": float(a), "value": float(v)} for a, v in zip(args.x, vals)]
    _emit(_json(out), args.out)
    return EXIT_OK


def cmd_inv_charpoly(args):
    spec = load_spec(args.model)
    cc = spec.commuting()
    rows = []
    for y in args.y:
        v = expect_inverse_charpoly(cc, y, quad_order=args.order)
        rows.append({"y": [y.real, y.imag], "value": [v.real, v.imag]})
    _emit(_json({"values": rows}), args.out)
    return EXIT_OK


def cmd_sample(args):
    spec = load_spec(args.model)
    _need_samples(args)
    ev = sample_eigenvalues(spec.pair(), args.samples, args.seed, threads=_threads(args))
    lines = [f"# seed: {args.seed}", f"# samples: {args.samples}",
             ",".join(f"lambda{i + 1}" for i in range(spec.N))]
    lines += [",".join(f"{v:.17g}" for v in row) for row in ev]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_validate(args):
    try:
        spec = load_spec(args.model)
        report = run_suite(spec, args.suite, seed=args.seed or 0)
    except WishartSumError as exc:
        rec = {"check_name": "model construction", "status": "fail", "measured": None,
               "tolerance": None, "error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, DegenerateSigma) and exc.pair is not None:
            rec["indices"] = list(exc.pair)
        report = [rec]
    passed = all(r["status"] != "fail" for r in report)
    _emit(_json({"suite": args.suite, "passed": passed, "checks": report}), args.out)
    if passed:
        return EXIT_OK
    return EXIT_ERROR if report[0]["check_name"] == "model construction" else EXIT_WARN


def cmd_compare(args):
    """Monte Carlo histogram against a reference density: total variation."""
    spec = load_spec(args.model)
    _need_samples(args)
    _, hist = _mc_curve(spec, args)
    if args.reference == "exact":
        ev = halfdeg.KernelEvaluator(spec.halfdeg())
        func = lambda t: ev.kernel(t, t)  # noqa: E731
        info = {}
    else:
        hi = float(hist.bin_edges[-1])
        grid = np.linspace(hi / args.nodes, hi, args.nodes)
        if args.reference == "susy":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                curve = susy.density_susy(spec.pair(), grid, quad=susy.SusyQuadrature(rtol=1e-6))
        else:
            curve = saddle.density_saddle(spec.pair(), grid)
        if not np.all(np.isfinite(curve.values)):
            raise WishartSumError("reference density has NaN points; cannot interpolate")
        spline = CubicSpline(np.r_[0.0, grid], np.r_[0.0, curve.values])
        func = lambda t: np.where(t <= hi, spline(t), 0.0)  # noqa: E731
        info = {"reference_nodes": args.nodes}
    tv = float(histogram_tv(hist, func))
    out = {"reference": args.reference, "samples": args.samples, "seed": args.seed,
           "bins": int(hist.counts.size), "total_variation": tv, **info}
    status = EXIT_OK
    if args.max_tv is not None:
        out["max_tv"] = args.max_tv
        out["passed"] = bool(tv < args.max_tv)
        status = EXIT_OK if tv < args.max_tv else EXIT_WARN
    _emit(_json(out), args.out)
    return status


def build_parser():
    p = _Parser(prog="wishart-sum", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: WISHART_SUM_THREADS or all cores)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(name, func, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("model", help="JSON model file")
        s.add_argument("--out", default=None, help="output file (default: stdout)")
        s.add_argument("--threads", type=int, default=argparse.SUPPRESS)
        s.set_defaults(func=func)
        return s

    def mc_opts(s):
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--samples", type=int, default=None)
        s.add_argument("--bins", type=int, default=100)

    s = common("density", cmd_density, "one-point density on a grid (CSV)")
    s.add_argument("--method", choices=("exact", "susy", "saddle", "mc"), default="exact")
    s.add_argument("--grid", type=_grid_arg, default=None, help="min:max:count")
    mc_opts(s)

    s = common("kernel", cmd_kernel, "kernel K_N(x, y) (half-degenerate models)")
    s.add_argument("--x", type=_floats, required=True)
    s.add_argument("--y", type=_floats, required=True)

    s = common("rk", cmd_rk, "k-point correlation function")
    s.add_argument("--points", type=_floats, required=True)
    s.add_argument("--oracle", choices=("kernel", "andreief", "both"), default="kernel")

    s = common("charpoly", cmd_charpoly, "averaged characteristic polynomial")
    s.add_argument("--x", type=_floats, default=None)

    s = common("inv-charpoly", cmd_inv_charpoly, "averaged inverse characteristic polynomial")
    s.add_argument("--y", type=_complex, action="append", required=True, help="re,im (repeatable)")
    s.add_argument("--order", type=int, default=64, help="initial Gauss-Laguerre order")

    s = common("sample", cmd_sample, "Monte Carlo eigenvalues (CSV, one draw per row)")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--samples", type=int, default=None)

    s = common("validate", cmd_validate, "run a self-consistency suite (JSON report)")
    s.add_argument("--suite", choices=("fast", "full"), default="fast")
    s.add_argument("--seed", type=int, default=0)

    s = common("compare", cmd_compare, "Monte Carlo vs a reference density (JSON report)")
    s.add_argument("--reference", choices=("exact", "susy", "saddle"), default="exact")
    s.add_argument("--grid", type=_grid_arg, default=None, help="histogram range min:max:count")
    s.add_argument("--nodes", type=int, default=80, help="reference grid size for susy/saddle")
    s.add_argument("--max-tv", type=float, default=None)
    mc_opts(s)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"wishart-sum: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (WishartSumError, ValueError, OSError) as exc:
        print(f"wishart-sum: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
