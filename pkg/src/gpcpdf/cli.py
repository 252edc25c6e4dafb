"""Command-line interface: ``gpcpdf <subcommand> [options]``.

Exit codes: 0 success, 2 usage or unknown registry id, 3 numerical failure,
4 a figure's acceptance band was violated.

Shared options may also come from a ``--config`` file of ``key = value``
lines (keys are the option names with dashes or underscores); options given
on the command line win over the file.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from .errors import (
    ConvergenceError,
    NumericalError,
    PreconditionError,
    RegistryError,
    UnresolvedOscillationError,
)
from .experiments import (
    FIGURES,
    SweepConfig,
    format_csv,
    parse_degrees,
    reproduce,
    run_sweep,
)
from .legendre import RuleKind, quadrature_rule
from .metrics import lq_density_distance, wasserstein
from .pushforward import (
    as_density,
    default_bins,
    evaluate,
    histogram_density,
    monotone_decomposition,
    pdf_grid,
    sample_pushforward,
)
from .surrogate import Method, Norm, error_norms, fit, get_function

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_BAND = 4

# option name -> (type, built-in default)
SHARED = {
    "function": (str, "sin20"),
    "density": (str, "uniform"),
    "method": (str, Method.COLLOCATION_GL.value),
    "degrees": (str, None),
    "grid_points": (int, 2048),
    "mc_count": (int, 1_000_000),
    "mc_seed": (int, 0),
    "bins": (int, None),
    "out": (str, None),
    "no_timing": (bool, False),
    "jobs": (int, 1),
}


class UsageError(Exception):
    pass


def _flag(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {value!r}")


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in SHARED:
            raise UsageError(f"{path}:{lineno}: expected '<option> = <value>' with a known option")
        kind = SHARED[key][0]
        try:
            out[key] = _flag(value) if kind is bool else kind(value.strip())
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}") from None
    return out


def _shared_options(p: argparse.ArgumentParser, names):
    for name in names:
        opt = "--" + name.replace("_", "-")
        kind = SHARED[name][0]
        if kind is bool:
            p.add_argument(opt, action="store_const", const=True, default=None)
        else:
            p.add_argument(opt, type=kind, default=None)
    p.add_argument("--config", default=None, help="file of 'key = value' defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpcpdf", description="gPC surrogates and pushforward densities")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nodes", help="print a quadrature rule as k,node,weight")
    p.add_argument("kind", choices=[k.value for k in RuleKind])
    p.add_argument("N", type=int)

    p = sub.add_parser("fit", help="print the orthonormal Legendre coefficients of a surrogate")
    _shared_options(p, ["function", "method", "degrees", "out"])

    p = sub.add_parser("pdf", help="tabulate density and CDF of f or of its degree-n surrogate")
    _shared_options(p, ["function", "density", "method", "degrees", "grid_points", "out"])
    p.add_argument("--y", type=float, nargs="+", default=None, help="evaluate at these points only")

    p = sub.add_parser("compare", help="errors of one surrogate, with a Monte Carlo cross-check")
    _shared_options(p, ["function", "density", "method", "degrees", "grid_points", "mc_count", "mc_seed", "bins"])

    p = sub.add_parser("sweep", help="degree sweep written as CSV")
    _shared_options(p, list(SHARED))

    p = sub.add_parser("reproduce", help="rerun a figure preset into a directory")
    p.add_argument("figure", choices=sorted(FIGURES))
    _shared_options(p, ["grid_points", "mc_count", "mc_seed", "bins", "out", "no_timing", "jobs"])
    return parser


def _resolve(args) -> dict:
    """Command line over config file over built-in defaults."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    out = {}
    for name, (_, default) in SHARED.items():
        if not hasattr(args, name):
            continue
        value = getattr(args, name)
        out[name] = value if value is not None else cfg.get(name, default)
    return out


def _single_degree(opts) -> int:
    if opts["degrees"] is None:
        raise UsageError("--degrees is required")
    degrees = parse_degrees(opts["degrees"])
    if len(degrees) != 1:
        raise UsageError("this command takes a single degree")
    return degrees[0]


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", newline="", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_nodes(args, opts):
    try:
        rule = quadrature_rule(args.kind, args.N)
    except PreconditionError as exc:
        raise UsageError(str(exc)) from None
    lines = ["k,node,weight"]
    lines += [f"{k},{x:.17g},{w:.17g}" for k, (x, w) in enumerate(zip(rule.nodes, rule.weights), 1)]
    _emit("\n".join(lines) + "\n", None)
    return 0


def _cmd_fit(args, opts):
    n = _single_degree(opts)
    s = fit(get_function(opts["function"]), n, opts["method"])
    lines = ["j,coeff"] + [f"{j},{c:.17g}" for j, c in enumerate(s.coeffs)]
    _emit("\n".join(lines) + "\n", opts["out"])
    return 0


def _cmd_pdf(args, opts):
    f = get_function(opts["function"])
    rho = as_density(opts["density"])
    target = f if opts["degrees"] is None else fit(f, _single_degree(opts), opts["method"])
    pm = monotone_decomposition(target)
    ys = np.asarray(args.y, dtype=float) if args.y else pdf_grid(pm, rho, opts["grid_points"]).ys
    p, F = evaluate(pm, rho, ys)
    lines = ["y,pdf,cdf"] + [f"{y:.17g},{a:.17g},{b:.17g}" for y, a, b in zip(ys, p, F)]
    _emit("\n".join(lines) + "\n", opts["out"])
    return 0


def _cmd_compare(args, opts):
    n = _single_degree(opts)
    f = get_function(opts["function"])
    rho = as_density(opts["density"])
    g = fit(f, n, opts["method"])
    pm_f, pm_g = monotone_decomposition(f), monotone_decomposition(g)
    grid_f = pdf_grid(pm_f, rho, opts["grid_points"])
    grid_g = pdf_grid(pm_g, rho, opts["grid_points"])
    bins = opts["bins"] or default_bins(opts["mc_count"])
    samples = sample_pushforward(pm_g, rho, opts["mc_count"], opts["mc_seed"], task=n)
    hist = histogram_density(samples, bins, pm_g.support)
    rows = [
        ("n", n),
        ("l1_pdf_error", lq_density_distance(grid_f, grid_g)),
        ("l2_error", error_norms(f, g, Norm.L2)),
        ("h1_error", error_norms(f, g, Norm.H1)),
        ("c0_error", error_norms(f, g, Norm.C0)),
        ("wass1", wasserstein(pm_f, pm_g, rho)),
        ("mc_l1_gap", lq_density_distance(grid_g, hist)),
        ("mc_bins", bins),
    ]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["quantity", "value"])
    for key, value in rows:
        writer.writerow([key, value if isinstance(value, int) else f"{value:.17g}"])
    return 0


def _sweep_config(opts, **fixed) -> SweepConfig:
    fields = dict(
        function=opts["function"],
        density=opts["density"],
        method=opts["method"],
        base_points=opts["grid_points"],
        mc_count=opts["mc_count"],
        mc_seed=opts["mc_seed"],
        bins=opts["bins"],
        out=opts["out"],
        no_timing=opts["no_timing"],
        jobs=opts["jobs"],
    )
    if opts.get("degrees") is not None:
        fields["degrees"] = parse_degrees(opts["degrees"])
    fields.update(fixed)
    return SweepConfig(**fields)


def _cmd_sweep(args, opts):
    cfg = _sweep_config(opts)
    records = run_sweep(replace(cfg, out=None))
    _emit(format_csv(records), cfg.out)
    return 0


def _cmd_reproduce(args, opts):
    out_dir = opts["out"] or args.figure
    result = reproduce(
        args.figure,
        out_dir,
        base_points=opts["grid_points"],
        mc_count=opts["mc_count"],
        mc_seed=opts["mc_seed"],
        bins=opts["bins"],
        no_timing=opts["no_timing"],
        jobs=opts["jobs"],
    )
    amplitude, exponent = result.fit
    print(f"{args.figure}: fit {amplitude:.6g} * n^{exponent:.6g}; files in {out_dir}")
    for check in result.checks:
        print(f"  {check}", file=sys.stdout if check.ok else sys.stderr)
    return 0 if result.ok else EXIT_BAND


COMMANDS = {
    "nodes": _cmd_nodes,
    "fit": _cmd_fit,
    "pdf": _cmd_pdf,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolve(args)
        Method(opts.get("method", Method.COLLOCATION_GL))
        return COMMANDS[args.command](args, opts)
    except (NumericalError, ConvergenceError, UnresolvedOscillationError, ArithmeticError) as exc:
        print(f"gpcpdf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, RegistryError, ValueError) as exc:
        print(f"gpcpdf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
