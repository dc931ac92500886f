"""
Command-line entry point.

    nradial-lab <identities|dyson|trace|decay|approx|lattice> [--config FILE]
                [--seed N] [--threads N] [--out-dir DIR] [--log-level LEVEL]

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure,
4 acceptance failure.
"""

import argparse
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv
from loguru import logger

from .. import __version__
from ..utils.logging import configure_logging
from .config import LOG_LEVEL_ENV, SUBCOMMANDS, ConfigValidationError
from .runner import AcceptanceFailure, run

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_ACCEPTANCE = 4


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per experiment kind."""
    parser = argparse.ArgumentParser(
        prog="nradial-lab",
        description="Reproducible experiments for n-radial SLE, Dyson Brownian motion "
                    "and lattice loop models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, kind in SUBCOMMANDS.items():
        sub = subparsers.add_parser(command, help=f"run a {kind} experiment")
        sub.add_argument("--config", help="INI config file (defaults are used when omitted)")
        sub.add_argument("--seed", type=int, help="root seed (overrides the config)")
        sub.add_argument("--threads", type=int, help="worker threads (overrides the config)")
        sub.add_argument("--out-dir", help="output directory (overrides NRADIAL_OUT_DIR)")
        sub.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the experiment and map the outcome to an exit code."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or os.environ.get(LOG_LEVEL_ENV, "INFO"))

    try:
        manifest = run(args.config, kind=SUBCOMMANDS[args.command], seed=args.seed,
                       threads=args.threads, out_dir=args.out_dir)
    except ConfigValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_VALIDATION
    except AcceptanceFailure as e:
        logger.error(str(e))
        return EXIT_ACCEPTANCE
    except Exception as e:
        logger.exception(f"Run failed: {e}")
        return EXIT_RUNTIME

    logger.info(f"Manifest {manifest.hash12}: {', '.join(manifest.outputs)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
