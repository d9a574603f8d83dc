"""Command line front end.

Three subcommands:

  solve     one scenario and one channel draw, full operating point printout
  sweep     Monte Carlo distance sweep, results written to CSV or JSON
  selftest  built-in verification routines

Exit codes: 0 solved (an outage is a result, not an error), 1 bad
configuration or arguments, 2 numerics failure, 3 selftest failure.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import checks, numerics
from .backhaul import ORDER_STRATEGIES
from .experiments import emit_results, load_sweep_spec, run_sweep
from .joint import SCHEMES, solve_instance
from .scenario import (
    ConfigError,
    linear_to_db,
    load_channels,
    load_scenario,
    sample_channels,
    watts_to_dbm,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICS = 2
EXIT_SELFTEST = 3


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors map to the config exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _fmt_vec(values):
    return "  ".join(f"{float(v):.6g}" for v in np.atleast_1d(values))


def _fmt_power(watts):
    watts = float(watts)
    if not np.isfinite(watts):
        return "inf"
    return f"{watts:.6g} W ({float(watts_to_dbm(watts)):.4g} dBm)"


def _print_outcome(outcome):
    bh = outcome.backhaul
    ac = outcome.access
    print(f"scheme: {outcome.scheme}")
    print(f"backhaul: {'feasible' if bh.feasible else 'INFEASIBLE'}")
    if outcome.scheme == "dpc":
        print(f"  encoding order: {' '.join(str(i) for i in bh.order)}")
    print(f"  per-node powers (W): {_fmt_vec(bh.dual_powers_w)}")
    pv = np.sum(np.abs(bh.precoders) ** 2, axis=1)
    print(f"  precoder powers (W): {_fmt_vec(pv)}")
    print(f"  achieved rates (nats): {_fmt_vec(bh.achieved_rates_nats)}")
    print(f"  subtotal: {_fmt_power(bh.total_power_w)}")
    print(f"access: {'feasible' if ac.feasible else 'INFEASIBLE'}")
    if ac.powers_w is not None:
        print(f"  per-user powers (W): {_fmt_vec(ac.powers_w)}")
        print(f"  per-cell totals (W): {_fmt_vec(ac.per_cell_power_w)}")
        print(f"  achieved SINR (dB): {_fmt_vec(linear_to_db(ac.sinr))}")
        print(f"  subtotal: {_fmt_power(np.sum(ac.powers_w))}")
    if outcome.system_outage:
        print("status: OUTAGE (requirements not met within the power budgets)")
    else:
        print(f"network total: {_fmt_power(outcome.total_power_w)}")
        print("status: OK")


def _parse_order(text, num_cells):
    try:
        order = tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--order must be comma-separated integers: {exc}") from exc
    if sorted(order) != list(range(num_cells)):
        raise ConfigError(
            f"--order must be a permutation of 0..{num_cells - 1}, got {text!r}"
        )
    return order


def _cmd_solve(args):
    scenario = load_scenario(args.config)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, rng_seed=args.seed)
    if args.channels is not None:
        channels = load_channels(args.channels, scenario)
    else:
        rng = np.random.default_rng(scenario.rng_seed)
        channels = sample_channels(scenario, rng)

    order = None
    if args.order is not None:
        order = _parse_order(args.order, scenario.num_cells)
    outcome = solve_instance(
        scenario,
        channels,
        scheme=args.scheme,
        order=order,
        order_strategy=args.order_strategy,
    )
    _print_outcome(outcome)
    return EXIT_OK


def _cmd_sweep(args):
    out_dir = Path(args.out).resolve().parent
    if not out_dir.is_dir():
        raise ConfigError(f"output directory does not exist: {out_dir}")
    spec = load_sweep_spec(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        try:
            spec = dataclasses.replace(spec, **overrides)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    stats = run_sweep(spec, workers=args.workers)
    emit_results(stats, args.out, format=args.format)
    print(f"{'distance_m':>10}  {'scheme':<6}  {'mean_dbm':>10}  {'outage':>8}")
    for row in stats.rows:
        dbm = float(watts_to_dbm(row.mean_power_w)) if row.mean_power_w > 0 else float("-inf")
        print(f"{row.distance_m:>10.6g}  {row.scheme:<6}  {dbm:>10.4g}  {row.outage_prob:>8.4g}")
    print(f"wrote {args.out} ({len(stats.rows)} rows, {spec.trials} trials per point)")
    return EXIT_OK


def _cmd_selftest(args):
    results = checks.run_all_checks(seed=args.seed, tol_scale=args.tol_scale)
    width = max(len(name) for name, _, _ in results)
    failed = 0
    for name, ok, detail in results:
        failed += 0 if ok else 1
        print(f"{name:<{width}}  {'pass' if ok else 'FAIL'}  {detail}")
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return EXIT_SELFTEST
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def build_parser():
    parser = _Parser(
        prog="scnpower",
        description="minimum-power operating points for gateway-fed small-cell networks",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one scenario end to end")
    p_solve.add_argument("--config", required=True, help="scenario JSON file")
    p_solve.add_argument("--channels", help="explicit channel realization JSON (default: sample)")
    p_solve.add_argument("--scheme", choices=SCHEMES, default="dpc")
    p_solve.add_argument("--order", help="comma-separated encoding order, e.g. 2,0,1,3")
    p_solve.add_argument(
        "--order-strategy",
        dest="order_strategy",
        choices=("auto",) + ORDER_STRATEGIES,
        default="auto",
        help="how to pick the encoding order when --order is not given",
    )
    p_solve.add_argument("--seed", type=int, help="override the config's channel seed")
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="run a Monte Carlo distance sweep")
    p_sweep.add_argument("--config", required=True, help="sweep JSON file")
    p_sweep.add_argument("--out", required=True, help="output path")
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--seed", type=int, help="override the config's seed")
    p_sweep.add_argument("--trials", type=int, help="override the trial count per point")
    p_sweep.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_test = sub.add_parser("selftest", help="run the built-in verification routines")
    p_test.add_argument("--seed", type=int, default=2024)
    p_test.add_argument("--tol-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    p_test.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except numerics.NumericsError as exc:
        print(f"numerics failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
