import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from src.analytics.costs import AnalyticsError
from src.analytics.leakage import cost_table, leakage_sweep, optimal_B, tradeoff_table
from src.config.config import CONFIG
from src.coordinator.coordinator import CoordinatorError, initialize, load_snapshot, save_snapshot
from src.database_node.node import DatabaseNodeError
from src.field_core.field import FieldError, SingularMatrixError
from src.model_domain.model import GlobalModel, ModelError, SchemeCase
from src.output_generator.output import OutputFileGenerator
from src.permutation_engine.permutations import PermutationError
from src.pipeline.orchestrator import (
    CorrectnessError,
    ExperimentConfig,
    ExperimentConfigError,
    load_experiment_config,
    run_experiment,
)
from src.utils.file_storage import rows_to_csv_text
from src.utils.logger import get_logger
from src.worker_pool.pool import WorkerPoolError

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CORRECTNESS = 1
EXIT_USAGE = 2


def _int_csv(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="Experiment file with KEY=VALUE lines")
    parser.add_argument("--case", type=str, default=None, help="1 or 2")
    parser.add_argument("--P", type=int, default=None, help="Number of subpackets")
    parser.add_argument("--B", type=int, default=None, help="Number of segments")
    parser.add_argument("--N", type=int, default=None, help="Number of databases")
    parser.add_argument("--ell", type=int, default=None, help="Subpacketization (derived from N if omitted)")
    parser.add_argument("--r", type=str, default=None, help="Upload sparsification rate, e.g. 4/15")
    parser.add_argument("--rprime", type=str, default=None, help="Download sparsification rate")
    parser.add_argument("--q", type=int, default=None, help="Prime field modulus")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out-dir", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Private federated submodel learning with top-r sparsification",
        allow_abbrev=False,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    init = subparsers.add_parser("init", help="Initialize storage and write a snapshot", allow_abbrev=False)
    _add_model_flags(init)

    run = subparsers.add_parser("run", help="Run a verified multi-round experiment", allow_abbrev=False)
    _add_model_flags(run)
    run.add_argument("--users", type=int, default=None)
    run.add_argument("--rounds", type=int, default=None)
    run.add_argument("--snapshot", type=str, default=None, help="Resume from a snapshot file")

    leakage = subparsers.add_parser("leakage", help="Leakage sweep over B", allow_abbrev=False)
    leakage.add_argument("--P", type=int, required=True)
    leakage.add_argument("--Pr", type=int, required=True)
    leakage.add_argument("--B", type=_int_csv, required=True, help="Comma separated B values")
    leakage.add_argument("--out-dir", type=str, default=None)

    costs = subparsers.add_parser("costs", help="Closed-form costs for given parameters", allow_abbrev=False)
    costs.add_argument("--case", type=str, default=None, help="1 or 2; both when omitted")
    costs.add_argument("--N", type=int, required=True)
    costs.add_argument("--r", type=str, required=True)
    costs.add_argument("--rprime", type=str, required=True)
    costs.add_argument("--P", type=int, required=True)
    costs.add_argument("--q", type=int, default=CONFIG["field_modulus"])
    costs.add_argument("--B", type=int, default=1)
    costs.add_argument("--out-dir", type=str, default=None)

    tradeoff = subparsers.add_parser("tradeoff", help="Optimal B under a leakage budget", allow_abbrev=False)
    tradeoff.add_argument("--P", type=int, required=True)
    tradeoff.add_argument("--Pr", type=int, required=True)
    tradeoff.add_argument("--B", type=_int_csv, required=True, help="Comma separated candidate B values")
    tradeoff.add_argument("--epsilon", type=float, required=True)
    tradeoff.add_argument("--case", type=str, default="1")
    tradeoff.add_argument("--ell", type=int, default=1)
    tradeoff.add_argument("--out-dir", type=str, default=None)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Optional[object]]:
    values = {
        "CASE": args.case,
        "P": args.P,
        "B": args.B,
        "N": args.N,
        "ELL": args.ell,
        "R": args.r,
        "R_PRIME": args.rprime,
        "Q": args.q,
        "SEED": args.seed,
    }
    for flag in ("users", "rounds"):
        values[flag.upper()] = getattr(args, flag, None)
    return values


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out_dir) if args.out_dir else Path(CONFIG["output_dir"])


def _emit(rows: List[dict], path: Path) -> None:
    sys.stdout.write(rows_to_csv_text(rows))
    logger.info(f"Results written to {path}")


def command_init(args: argparse.Namespace) -> int:
    experiment = load_experiment_config(args.config, _overrides(args))
    reference = GlobalModel.random(experiment.model, seed=np.random.default_rng([experiment.seed, 0]))
    package = initialize(experiment.model, reference, seed=experiment.seed)
    path = save_snapshot(package, _out_dir(args) / CONFIG["snapshot_file"])
    print(f"Snapshot written to {path}")
    return EXIT_OK


def command_run(args: argparse.Namespace) -> int:
    init = None
    if args.snapshot:
        init = load_snapshot(args.snapshot)
        if args.config is None:
            overrides = {key: value for key, value in _overrides(args).items() if value is not None}
            experiment = ExperimentConfig(
                model=init.config,
                users=int(overrides.get("USERS", 1)),
                rounds=int(overrides.get("ROUNDS", 1)),
                seed=int(overrides.get("SEED", CONFIG["default_seed"])),
            )
        else:
            experiment = load_experiment_config(args.config, _overrides(args))
    else:
        experiment = load_experiment_config(args.config, _overrides(args))

    reports = run_experiment(experiment, output_dir=_out_dir(args), init=init)
    print(f"{len(reports)} rounds verified; reports written to {_out_dir(args)}")
    return EXIT_OK


def command_leakage(args: argparse.Namespace) -> int:
    rows = leakage_sweep(args.P, args.Pr, args.B)
    _emit(rows, OutputFileGenerator(_out_dir(args)).generate_leakage_file(rows))
    return EXIT_OK


def command_costs(args: argparse.Namespace) -> int:
    cases = [SchemeCase.parse(args.case)] if args.case else [SchemeCase.CASE1, SchemeCase.CASE2]
    rows = cost_table(args.P, args.N, args.r, args.rprime, args.q, B=args.B, cases=cases)
    _emit(rows, OutputFileGenerator(_out_dir(args)).generate_cost_file(rows))
    return EXIT_OK


def command_tradeoff(args: argparse.Namespace) -> int:
    rows = tradeoff_table(args.P, args.Pr, args.B, ell=args.ell)
    path = OutputFileGenerator(_out_dir(args)).generate_tradeoff_file(rows)
    best = optimal_B(args.P, args.Pr, args.epsilon, args.case, args.B, ell=args.ell)
    _emit(rows, path)
    print(f"optimal_B={best}")
    return EXIT_OK


COMMANDS = {
    "init": command_init,
    "run": command_run,
    "leakage": command_leakage,
    "costs": command_costs,
    "tradeoff": command_tradeoff,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        return COMMANDS[args.command](args)
    except (CorrectnessError, SingularMatrixError, DatabaseNodeError, WorkerPoolError) as e:
        logger.error(e.message)
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_CORRECTNESS
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ExperimentConfigError, ModelError, CoordinatorError, PermutationError, AnalyticsError, FieldError) as e:
        logger.error(e.message)
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
