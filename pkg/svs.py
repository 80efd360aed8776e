import sys
import argparse
from typing import Optional
from src.cli import run_command
from src.data import build_run_config
from src.exceptions import SvsError
from src.logs import setup_logging, valid_loglevel, configure_logging
from src.settings import DEFAULT_CHECKPOINT_FREQUENCY


# Get an instance of a logger
logger = setup_logging(__name__)


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    """
    Parse command-line arguments of the DNA sequence design tool.

    Returns
    -------
    args : argparse.Namespace
        Parsed command-line arguments.
    """
    parser = argparse.ArgumentParser(
        description="DNA sequence set evaluation and design with Static Virus Spread."
    )
    # General arguments shared by every mode.
    group_g = parser.add_argument_group("General arguments")
    group_g.add_argument(
        '-L', '--loglevel',
        dest='loglevel',
        metavar='LEVEL',
        default='WARNING',
        help='log level (default: WARNING). F.e: ["INFO", "DEBUG", "WARNING", "ERROR"]',
        type=valid_loglevel
    )
    group_g.add_argument(
        "--mode",
        required=True,
        choices=["evaluate", "design", "stats", "oracle-check", "resume"],
        help="Workflow to run. (required)"
    )
    group_g.add_argument(
        "--config",
        type=str,
        default=None,
        help="Key-value configuration file (e.g. `svs.num_host = 300`)."
    )
    group_g.add_argument(
        "--set",
        dest="overrides",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="Override a configuration key, applied after --config. Repeatable."
    )
    group_g.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Seed of every random draw (default: 1)."
    )

    # Input / output.
    group_io = parser.add_argument_group("Input and output")
    group_io.add_argument(
        "--input",
        dest="inputs",
        action="append",
        default=None,
        help="Sequence file (or values file with --values). Repeatable."
    )
    group_io.add_argument(
        "--output",
        type=str,
        default=None,
        help="Output file (evaluate/stats/oracle-check) or result folder (design). Default: stdout / results/<execution_id>."
    )
    group_io.add_argument(
        "--format",
        choices=["csv", "json", "table"],
        default=None,
        help="Output format (default: csv)."
    )

    # Constraint interpretation flags.
    group_c = parser.add_argument_group("Constraint modes")
    group_c.add_argument("--run_mode", choices=["start", "suffix"], default=None)
    group_c.add_argument(
        "--gap_model", choices=["shift", "concat"], default=None,
        help="Alignment of the second strand: plain shifts (default) or shifted gapped self-concatenations."
    )
    group_c.add_argument(
        "--row_aggregate", choices=["sum", "max"], default=None,
        help="Per-sequence score over the other set members: their sum (default) or the worst one."
    )
    group_c.add_argument("--hairpin_mode", choices=["mirrored", "literal"], default=None)

    # Mode specific.
    group_m = parser.add_argument_group("Mode options")
    group_m.add_argument(
        "--values",
        action="store_true",
        help="stats: input files hold printed Tm values instead of sequences."
    )
    group_m.add_argument(
        "--compare",
        action="store_true",
        help="stats: order the sets by Tm variance."
    )
    group_m.add_argument(
        "--baseline",
        action="store_true",
        help="design: also run random search at the same G-evaluation budget."
    )
    group_m.add_argument(
        "--checkpoint_frequency",
        type=int,
        default=None,
        help=f"design: save the epidemic every N steps. (default: {DEFAULT_CHECKPOINT_FREQUENCY}, disabled)"
    )
    group_m.add_argument(
        "--execution_id",
        type=str,
        default=None,
        help="resume: execution ID of a checkpointed design run."
    )
    group_m.add_argument(
        "--oracle_cases",
        type=int,
        default=None,
        help="oracle-check: random cases per comparison (default: 200)."
    )

    return parser.parse_args(argv)


def options_from_args(args: argparse.Namespace) -> dict:
    similarity = {
        key: value
        for key, value in (
            ("run_mode", args.run_mode),
            ("gap_model", args.gap_model),
            ("row_aggregate", args.row_aggregate),
        )
        if value is not None
    }
    constraints = {}
    if similarity:
        constraints["similarity"] = similarity
    if args.hairpin_mode is not None:
        constraints["hairpin"] = {"mode": args.hairpin_mode}

    return {
        "mode": args.mode,
        "inputs": args.inputs,
        "output": args.output,
        "format": args.format,
        "seed": args.seed,
        "checkpoint_frequency": args.checkpoint_frequency,
        "execution_id": args.execution_id,
        "oracle_cases": args.oracle_cases,
        "values_mode": args.values or None,
        "compare": args.compare or None,
        "baseline": args.baseline or None,
        "constraints": constraints or None,
    }


def main(argv: Optional[list[str]] = None) -> int:
    """
    Resolve the configuration and run the requested workflow.

    Returns
    -------
    status : int
        0 on success, 1 on a domain error or failed check.
    """
    args = parse_args(argv)
    configure_logging(args.loglevel)
    try:
        config = build_run_config(options_from_args(args), args.config, args.overrides)
        return run_command(config)
    except SvsError as e:
        logger.error(f"{e.__class__.__name__}: {e}")
        return 1


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("Interrupted by user. Exiting gracefully.")
