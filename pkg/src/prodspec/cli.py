"""Command line interface.

Subcommands: ``simulate``, ``sweep``, ``limit`` and ``verify``. Exit codes:
0 success, 1 validation error, 2 threshold failure under ``--strict``,
3 I/O error.
"""

import argparse
import csv
import logging
import os
import sys
import tempfile

import numpy as np

from . import harness, limitlaw, verify
from .config import ConfigError, build_config, load_config

EXIT_OK, EXIT_VALIDATION, EXIT_THRESHOLD, EXIT_IO = 0, 1, 2, 3


def _int_list(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def _float_list(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _grid(text):
    try:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be START:STOP:NUM, got {text!r}") from None


def _add_run_options(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--dist")
    p.add_argument("--seed", type=int)
    p.add_argument("--sigmas", type=_float_list)
    p.add_argument("--workers", type=int)
    p.add_argument("--truncation-delta", type=float, dest="truncation_delta")
    p.add_argument("--out", dest="output", help="output path prefix")
    p.add_argument("--format", choices=("csv", "json", "both"))


def make_parser():
    parser = argparse.ArgumentParser(prog="prodspec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo trials for one configuration")
    _add_run_options(p)

    p = sub.add_parser("sweep", help="run simulate over increasing n")
    _add_run_options(p)
    p.add_argument("--n-sweep", type=_int_list, dest="n_sweep", help="e.g. 64,128,256")

    p = sub.add_parser("limit", help="tabulate limit-law functions")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--grid", type=_grid, default=_grid("0:1.25:26"), help="radii START:STOP:NUM")
    p.add_argument("--z-mod", type=_float_list, default=(0.0, 0.5, 1.0, 1.5), dest="z_mod")
    p.add_argument("--x-grid", type=_grid, default=_grid("-0.5:10:106"), dest="x_grid")
    p.add_argument("--y-eps", type=float, default=limitlaw.DEFAULT_Y_EPS, dest="y_eps")
    p.add_argument("--out", help="output path prefix (default: stdout)")

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--strict", action="store_true", help="exit 2 when any check fails")
    p.add_argument("--statistical", metavar="CONFIG_DIR",
                   help="also run the Monte Carlo suite using configs in CONFIG_DIR")
    p.add_argument("--only", type=lambda t: set(t.split(",")), help="statistical subset, e.g. 2a,2f")
    return parser


_RUN_KEYS = ("trials", "n", "m", "dist", "seed", "sigmas", "workers", "truncation_delta",
             "output", "format", "n_sweep")


def _experiment_config(args):
    file_values = load_config(args.config) if args.config else {}
    overrides = {k: getattr(args, k, None) for k in _RUN_KEYS}
    return build_config(file_values, overrides)


def _summary(report):
    agg = report.aggregates
    lines = [f"trials={agg['trials']} failed={agg['failed']} hash={report.provenance['config_hash'][:12]}"]
    for key in harness.AGGREGATED:
        a = agg.get(key)
        if a:
            lines.append(f"  {key:22s} mean={a['mean']:.6g} max={a['max']:.6g}")
    return "\n".join(lines)


def cmd_simulate(args):
    cfg = _experiment_config(args)
    report = harness.run_experiment(cfg)
    print(_summary(report))
    return EXIT_OK


def cmd_sweep(args):
    cfg = _experiment_config(args)
    sweep = harness.convergence_sweep(cfg)
    for n, ks in zip(sweep.ns, sweep.mean_radial_ks):
        print(f"n={n:6d} mean radial KS={ks:.6g}")
    print(f"trend_ok={sweep.trend_ok} final_below_first={sweep.final_below_first}")
    return EXIT_OK


def _limit_tables(args):
    params = limitlaw.LimitLawParams(args.m, args.sigma)
    r = np.asarray(args.grid, dtype=float)
    radial = [("r", "density", "radial_density", "radial_cdf")]
    dens = np.atleast_1d(limitlaw.limit_density(r.astype(complex), params))
    # d/dr of the radial CDF, (2/m) r^(2/m - 1) / sigma^(2/m); finite form avoids 0 * inf at r = 0
    with np.errstate(divide="ignore"):
        rdens = np.where(r <= args.sigma, 2.0 / args.m * r ** (2.0 / args.m - 1) / args.sigma ** (2.0 / args.m), 0.0)
    for ri, di, pi, ci in zip(r, dens, rdens, np.atleast_1d(limitlaw.radial_cdf(r, params))):
        radial.append((repr(float(ri)), repr(float(di)), repr(float(pi)), repr(float(ci))))
    support = [("z_mod", "x1", "x2")]
    nu = [("z_mod", "x", "nu_density", "delta_re", "delta_im")]
    x = np.asarray(args.x_grid, dtype=float)
    for zm in args.z_mod:
        s = limitlaw.support_endpoints(zm)
        support.append((repr(zm), repr(s.x1), repr(s.x2)))
        delta = limitlaw.stieltjes_branch(x + 1j * args.y_eps, zm)
        for xi, di in zip(x, delta):
            nu.append((repr(zm), repr(float(xi)), repr(float(di.imag / np.pi)),
                       repr(float(di.real)), repr(float(di.imag))))
    return {"radial": radial, "support": support, "nu": nu}


def cmd_limit(args):
    tables = _limit_tables(args)
    if args.out:
        d = os.path.dirname(args.out)
        if d:
            os.makedirs(d, exist_ok=True)
        for name, rows in tables.items():
            with open(f"{args.out}_{name}.csv", "w", encoding="utf-8", newline="") as fh:
                csv.writer(fh, lineterminator="\n").writerows(rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        for name, rows in tables.items():
            print(f"# {name}")
            w.writerows(rows)
    return EXIT_OK


def cmd_verify(args):
    results = verify.identity_suite()
    with tempfile.TemporaryDirectory() as tmp:
        results += verify.plumbing_suite(tmp)
    if args.statistical:
        results += verify.statistical_suite(args.statistical, args.only)
    for r in results:
        print(verify.format_result(r))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed and args.strict:
        return EXIT_THRESHOLD
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "limit": cmd_limit, "verify": cmd_verify}


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors; 2 is reserved for threshold failures
        return EXIT_VALIDATION if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
