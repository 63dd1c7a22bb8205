"""
Command-line front end.

Usage:
    python -m sigprice simulate     --scenario FILE [--seed S] [--paths N] [--out DIR]
    python -m sigprice sig          --path FILE --depth N [--lift ito] [--time-enhance] [--out FILE]
    python -m sigprice correlators  --scenario FILE [--seed S] [--paths N] [--out DIR] [--threads T]
    python -m sigprice price        --scenario FILE [--seed S] [--paths N] [--out DIR] [--threads T]

Exit codes: 0 success, 1 numerical failure, 2 input error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from sigprice import csv_io
from sigprice.correlator import estimate_correlator
from sigprice.errors import SigPriceError
from sigprice.models import CorrelatorRow, Scenario
from sigprice.pricing import convergence_report, payoff_polynomial, price_both
from sigprice.scenario import apply_overrides, correlator_requests, load_scenario
from sigprice.settings import load_settings
from sigprice.signature import LiftKind, lift, time_enhance
from sigprice.stochastic import simulate_path

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INPUT = 2

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _scenario_from_args(args) -> Scenario:
    scenario = load_scenario(args.scenario)
    return apply_overrides(
        scenario,
        seed=args.seed,
        n_paths=args.paths,
        out=args.out,
        paths_to_write=getattr(args, "paths_to_write", None),
    )


def cmd_simulate(args) -> int:
    scenario = _scenario_from_args(args)
    out_dir = Path(scenario.output.dir)
    count = scenario.output.paths_to_write
    for index in range(count):
        path = simulate_path(scenario.process, scenario.grid, scenario.seed, index)
        csv_io.write_path_csv(out_dir / f"path_{index:04d}.csv", path)
    logger.info("Wrote %d path files to %s", count, out_dir)
    return EXIT_OK


def cmd_sig(args) -> int:
    path = csv_io.read_path_csv(args.path)
    if args.time_enhance:
        path = time_enhance(path)
    sig = lift(path, args.depth, LiftKind(args.lift))
    if args.out:
        csv_io.write_signature_csv(args.out, sig)
        logger.info("Wrote signature (depth %d, d=%d) to %s", sig.depth, sig.dim, args.out)
    else:
        csv_io.write_signature_csv(sys.stdout, sig)
    return EXIT_OK


def cmd_correlators(args) -> int:
    scenario = _scenario_from_args(args)
    settings = load_settings(threads=args.threads)
    rows: List[CorrelatorRow] = []
    for request_id, request in correlator_requests(scenario):
        estimate = estimate_correlator(
            scenario.process, scenario.grid, request, scenario.n_paths, scenario.seed, settings
        )
        rows.append(
            CorrelatorRow(
                request_id=request_id,
                value=estimate.value,
                std_error=estimate.std_error,
                n_paths=estimate.n_paths,
            )
        )
        logger.info("%s: %.10g +/- %.3g", request_id, estimate.value, estimate.std_error)
    target = Path(scenario.output.dir) / "correlators.csv"
    csv_io.write_correlator_csv(target, rows)
    logger.info("Wrote %d correlators to %s", len(rows), target)
    return EXIT_OK


def cmd_price(args) -> int:
    scenario = _scenario_from_args(args)
    if scenario.payoff is None:
        raise SigPriceError("scenario has no 'payoff' block")
    settings = load_settings(threads=args.threads)
    out_dir = Path(scenario.output.dir)
    expansion, direct = price_both(
        scenario.payoff, scenario.process, scenario.grid,
        scenario.n_paths, scenario.seed, scenario.lift, settings,
    )
    csv_io.write_price_csv(out_dir / "price.csv", [expansion, direct])
    csv_io.write_polynomial_csv(
        out_dir / "polynomial.csv", payoff_polynomial(scenario.payoff, scenario.grid.horizon)
    )
    if scenario.convergence_orders:
        rows = convergence_report(
            scenario.payoff, scenario.process, scenario.grid, scenario.convergence_orders,
            scenario.n_paths, scenario.seed, scenario.lift, settings,
        )
        csv_io.write_convergence_csv(out_dir / "convergence.csv", rows)
    print(
        f"{scenario.payoff.variant}: expansion {expansion.price:.6f} +/- {expansion.std_error:.6f} "
        f"(tail {expansion.series_tail:.3g}, {expansion.terms} terms), "
        f"direct {direct.price:.6f} +/- {direct.std_error:.6f}, n_paths={direct.n_paths}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigprice", description="Signature-based pricing of path-dependent payoffs"
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        type=str.upper,
        choices=LOG_LEVELS,
        help="Logging level (case-insensitive)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p):
        p.add_argument("--scenario", required=True, help="Scenario JSON file")
        p.add_argument("--seed", type=int, help="Base seed (overrides the file)")
        p.add_argument("--paths", type=int, help="Number of Monte Carlo paths (overrides the file)")
        p.add_argument("--out", help="Output directory (overrides the file)")
        p.add_argument("--threads", type=int, help="Worker threads (default: SIGPRICE_THREADS or 1)")

    p = sub.add_parser("simulate", help="Write sample paths as CSV")
    scenario_flags(p)
    p.add_argument("--paths-to-write", type=int, help="How many path files to write")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("sig", help="Signature of a path CSV")
    p.add_argument("--path", required=True, help="Path CSV (t,x1,...,xd)")
    p.add_argument("--depth", type=int, required=True, help="Truncation depth")
    p.add_argument("--lift", default="stratonovich", choices=[k.value for k in LiftKind])
    p.add_argument("--time-enhance", action="store_true", help="Prepend time as letter 1")
    p.add_argument("--out", help="Output CSV (stdout when omitted)")
    p.set_defaults(handler=cmd_sig)

    p = sub.add_parser("correlators", help="Monte Carlo signature correlators")
    scenario_flags(p)
    p.set_defaults(handler=cmd_correlators)

    p = sub.add_parser("price", help="Correlator-expansion and direct Monte Carlo prices")
    scenario_flags(p)
    p.set_defaults(handler=cmd_price)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK

    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    try:
        return args.handler(args)
    except (ValueError, OSError) as e:
        logger.error("%s", e)
        return EXIT_INPUT
    except (RuntimeError, ArithmeticError) as e:
        logger.error("numerical failure: %s", e)
        return EXIT_NUMERICAL
    except SigPriceError as e:
        logger.error("%s", e)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
