"""
Command-line entry point for the opinion defense toolkit
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from .config import get_settings
from .errors import ConfigError, OpinionDefenseError
from .network.loaders import load_vector
from .services.analysis_service import AnalysisService, RunConfig, SweepSpec, compare_topologies
from .services.reporting import Table

logger = logging.getLogger(__name__)


def configure_logging() -> None:
    """Log to stderr so stdout stays machine-readable"""
    log_level = (os.getenv("LOG_LEVEL") or get_settings().log_level or "INFO").upper()
    if log_level not in logging._nameToLevel:
        log_level = "INFO"
    logging.basicConfig(
        level=log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def _scalar_or_file(text: Optional[str]):
    """`--lambda 0.5` or `--lambda weights.txt`"""
    if text is None:
        return None
    try:
        return float(text)
    except ValueError:
        return load_vector(text).tolist()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--input", help="edge list or matrix JSON file")
    source.add_argument("--generate", help="regular:k | er:p | ba | tree:d1,d2,...")
    common.add_argument("--input-format", choices=["edge_list", "matrix_json"],
                        help="input format (default: by file extension)")
    common.add_argument("--n", type=int, help="node count for generated graphs")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--lambda", dest="lam", default="0.5", help="scalar or path to a per-node vector")
    common.add_argument("--d", default="1", help="lower bound: scalar or path to a per-source vector")
    budget = common.add_mutually_exclusive_group()
    budget.add_argument("--budget", type=float, help="single budget c")
    budget.add_argument("--sweep", help="from:to:steps")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--heuristics", action="store_true",
                        help="add degree-proportional and key-node value ratios to sweeps")
    common.add_argument("--workers", type=int, help="threads for budget sweeps")
    common.add_argument("--out", help="output file (default stdout)")

    parser = argparse.ArgumentParser(
        prog="opinion-defense",
        description="Optimal protection budgets against worst-case source attacks in linear opinion dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("centrality", parents=[common], help="input centrality pi, 1'H1 and c0")
    sub.add_parser("solve", parents=[common], help="optimal protection at one budget")
    sub.add_parser("sweep", parents=[common], help="optimal protection over a budget range")
    sub.add_parser("schedule", parents=[common], help="breakpoints and active sets")
    topo = sub.add_parser("compare-topologies", parents=[common],
                          help="regular vs Erdos-Renyi vs preferential attachment at the same n")
    topo.add_argument("--regular-degree", type=int, default=4)
    topo.add_argument("--er-probability", type=float, default=0.25)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = dict(
        input=args.input,
        input_format=args.input_format,
        generate=args.generate,
        n=args.n,
        seed=args.seed,
        lam=_scalar_or_file(args.lam),
        d=_scalar_or_file(args.d),
        budget=args.budget,
        format=args.format,
        heuristics=args.heuristics,
        out=args.out,
    )
    if args.command == "compare-topologies":
        fields.update(regular_degree=args.regular_degree, er_probability=args.er_probability)
        # topologies are generated; the source flags are not used
        fields.update(input=None, generate=f"regular:{args.regular_degree}")
    if args.workers is not None:
        fields["workers"] = args.workers
    try:
        if args.sweep:
            fields["sweep"] = SweepSpec.parse(args.sweep)
        return RunConfig(**fields)
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"invalid configuration: {e}")


def run_command(config: RunConfig, command: str) -> Table:
    if command == "compare-topologies":
        return compare_topologies(config)
    service = AnalysisService(config)
    if command == "centrality":
        return service.centrality()
    if command == "solve":
        return service.solve()
    if command == "sweep":
        return service.sweep()
    if command == "schedule":
        return service.schedule()
    raise ConfigError(f"unknown command '{command}'")


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        table = run_command(config, args.command)
        text = table.render(config.format)
        if config.out:
            Path(config.out).write_text(text, encoding="utf-8", newline="\n")
            logger.info(f"Wrote {len(table.rows)} rows to {config.out}")
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
    except OpinionDefenseError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except ArithmeticError as e:
        logger.exception("Numerical failure")
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return 6
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
