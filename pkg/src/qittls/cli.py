"""CLI for the TTLS benchmark harness."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from .bench import bound_audit, build_problem, concentration_suite, run_bench
from .errors import QittlsError
from .loaders import export_instance, load_config, save_model
from .models import AuditConfig, BenchConfig, ConcentrationConfig, NoiseSpec, PronyConfig
from .reports import (
    emit_bound_reports,
    emit_csv,
    emit_decay,
    emit_plot_data,
    render_results_table,
)
from .tls_solvers import singular_value_profile

logger = logging.getLogger(__name__)

DEFAULT_OUT = Path("results")

# argparse destinations that are not configuration fields
_CLI_ONLY = {"command", "config", "verbose", "table", "handler"}


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {key: value for key, value in vars(args).items() if key not in _CLI_ONLY}


def _bench_outputs(config: BenchConfig, table: bool) -> int:
    out = config.out if config.out is not None else DEFAULT_OUT
    stem = f"{config.problem}_m{config.m}"
    print(f"Running {config.problem} (m={config.m}, d={config.d}, trials={config.trials})...")
    run = run_bench(config)

    csv_path = emit_csv(run.records, out / f"{stem}.csv", include_time=config.timing)
    print(f"Records written to {csv_path}")
    for path in emit_plot_data(run, out):
        print(f"Plot data written to {path}")
    save_model(config, out / f"{stem}_config.yaml")
    if table:
        table_path = out / f"{stem}_table.tex"
        table_path.write_text(render_results_table(run.records, include_time=config.timing), encoding="utf-8")
        print(f"LaTeX table written to {table_path}")

    failures = sum(1 for r in run.records if r.status != "ok")
    if failures:
        print(f"{failures} of {len(run.records)} solves failed; see the status column")
    return 0


def bench_command(args: argparse.Namespace) -> int:
    config = load_config(BenchConfig, args.config, _overrides(args))
    return _bench_outputs(config, args.table)


def prony_command(args: argparse.Namespace) -> int:
    config = load_config(PronyConfig, args.config, _overrides(args))
    return _bench_outputs(config, args.table)


def concentration_command(args: argparse.Namespace) -> int:
    config = load_config(ConcentrationConfig, args.config, _overrides(args))
    summary = concentration_suite(
        config.rows, config.cols, config.p, config.theta, config.trials, config.seed
    )
    print(f"bound 1/(theta^2 p) = {summary.bound:.5e}")
    print(f"row form:    violation fraction {summary.row_violation_fraction:.5e}")
    print(f"column form: violation fraction {summary.col_violation_fraction:.5e}")
    out = config.out if config.out is not None else DEFAULT_OUT
    path = out / "concentration.yaml"
    save_model(summary, path)
    print(f"Summary written to {path}")
    return 0


def bounds_command(args: argparse.Namespace) -> int:
    config = load_config(AuditConfig, args.config, _overrides(args))
    reports = bound_audit(config)
    applicable = [r for r in reports if r.hypothesis_ok and r.observed is not None]
    held = sum(1 for r in applicable if r.observed is not None and r.observed <= r.rhs)
    print(f"bound held in {held} of {len(applicable)} trials with all hypotheses satisfied ({len(reports)} trials)")
    out = config.out if config.out is not None else DEFAULT_OUT
    path = emit_bound_reports(reports, out / "bounds.csv")
    print(f"Audit written to {path}")
    return 0


def decay_command(args: argparse.Namespace) -> int:
    config = load_config(BenchConfig, args.config, _overrides(args))
    problem = build_problem(config)
    sigma = singular_value_profile(problem.A_tilde, problem.b_tilde)
    out = config.out if config.out is not None else DEFAULT_OUT
    path = emit_decay(sigma, out / f"{config.problem}_m{config.m}_decay.dat")
    print(f"Singular values written to {path}")
    return 0


def export_command(args: argparse.Namespace) -> int:
    config = load_config(BenchConfig, args.config, _overrides(args))
    problem = build_problem(config)
    out = config.out if config.out is not None else DEFAULT_OUT / f"{config.problem}_m{config.m}"
    manifest = export_instance(problem, NoiseSpec(eta=config.eta, seed=config.seed), out)
    print(f"Instance written to {manifest.parent} (manifest {manifest.name})")
    return 0


def _add_sketch_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--methods", help="Comma-separated subset of TTLS,RTTLS,QiTTLS")
    parser.add_argument("--epsilon", type=float, help="Sketch accuracy parameter")
    parser.add_argument("--k", type=int, help="Rank cap of the sketch (defaults to d)")
    parser.add_argument("--delta", type=float, help="Failure probability")
    parser.add_argument("--p", type=int, help="Sketch size override")
    parser.add_argument("--alpha-denominator", type=float, help="Constant c in alpha = xi / (c k^4)")
    parser.add_argument("--rttls-sketch", type=int, help="Randomized SVD sketch size")
    parser.add_argument("--trials", type=int, help="Number of trials")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--workers", type=int, help="Parallel trial workers")
    parser.add_argument("--timing", action="store_true", default=None, help="Add wall-time column to the CSV")
    parser.add_argument("--table", action="store_true", help="Also write a LaTeX results table")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file of option values; flags override it")
    common.add_argument("--out", type=Path, help="Output folder")
    common.add_argument("-v", "--verbose", action="store_true", help="Log progress at INFO level")

    parser = argparse.ArgumentParser(
        prog="qittls", description="Truncated total least squares experiments with sampled sketches"
    )
    subparsers = parser.add_subparsers(dest="command", required=True, help="Command to run")

    bench = subparsers.add_parser("bench", parents=[common], help="Fredholm problem sweep")
    bench.add_argument("--problem", help="foxgood, gravity, heat, phillips, baart or deriv2")
    bench.add_argument("--m", type=int, help="Problem size")
    bench.add_argument("--d", type=int, help="Truncation parameter")
    bench.add_argument("--eta", type=float, help="Relative noise level")
    _add_sketch_flags(bench)
    bench.set_defaults(handler=bench_command)

    prony = subparsers.add_parser("prony", parents=[common], help="Prony linear-prediction sweep")
    prony.add_argument("--m", type=int, help="Number of equations")
    prony.add_argument("--n", type=int, help="Number of unknowns")
    prony.add_argument("--t", dest="t_step", type=float, help="Sampling interval")
    prony.add_argument("--d", type=int, help="Truncation parameter")
    prony.add_argument("--poles", dest="pole_file", type=Path, help="YAML pole file")
    _add_sketch_flags(prony)
    prony.set_defaults(handler=prony_command)

    concentration = subparsers.add_parser(
        "concentration", parents=[common], help="Monte Carlo check of the sampled Gram deviation"
    )
    concentration.add_argument("--rows", type=int, help="Rows of the test matrix")
    concentration.add_argument("--cols", type=int, help="Columns of the test matrix")
    concentration.add_argument("--p", type=int, help="Number of draws")
    concentration.add_argument("--theta", type=float, help="Deviation threshold")
    concentration.add_argument("--trials", type=int, help="Number of trials")
    concentration.add_argument("--seed", type=int, help="Seed")
    concentration.set_defaults(handler=concentration_command)

    bounds = subparsers.add_parser("bounds", parents=[common], help="Audit the solution error bound")
    bounds.add_argument("--m", type=int, help="Instance size (power of two)")
    bounds.add_argument("--d", type=int, help="Truncation parameter")
    bounds.add_argument("--k", type=int, help="Rank cap of the sketch")
    bounds.add_argument("--q", type=int, help="Leading indices entering the spectral gap")
    bounds.add_argument("--epsilon", type=float, help="Sketch accuracy parameter")
    bounds.add_argument("--delta", type=float, help="Failure probability")
    bounds.add_argument("--trials", type=int, help="Number of trials")
    bounds.add_argument("--seed", type=int, help="Seed")
    bounds.add_argument("--p", type=int, help="Sketch size for sampled runs")
    bounds.add_argument(
        "--sampled", dest="exhaustive", action="store_false", default=None, help="Sample instead of sketching all rows"
    )
    bounds.set_defaults(handler=bounds_command)

    decay = subparsers.add_parser("decay", parents=[common], help="Export singular values of [A, b]")
    decay.add_argument("--problem", help="Problem name (prony included)")
    decay.add_argument("--m", type=int, help="Problem size")
    decay.add_argument("--n", type=int, help="Unknowns (prony only)")
    decay.set_defaults(handler=decay_command)

    export = subparsers.add_parser("export", parents=[common], help="Write a noisy instance as a binary sample model")
    export.add_argument("--problem", help="Problem name")
    export.add_argument("--m", type=int, help="Problem size")
    export.add_argument("--eta", type=float, help="Relative noise level")
    export.add_argument("--seed", type=int, help="Noise seed")
    export.set_defaults(handler=export_command)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run one experiment subcommand.

    Args:
        argv: Arguments without the program name; defaults to ``sys.argv[1:]``.

    Returns:
        Exit code (0 for success, 1 for error).
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return int(args.handler(args))
    except ValidationError as e:
        print(f"Error: invalid configuration: {e}", file=sys.stderr)
        return 1
    except (QittlsError, ValueError, OSError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
