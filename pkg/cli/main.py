"""Command-line entry point: run, grid, report and plot."""
import argparse
import sys
from typing import List, Optional

from cli.commands import grid, plot, report, run
from utils.errors import BenchmarkError
from utils.logging_config import logger, set_level

COMMANDS = {"run": run, "grid": grid, "report": report, "plot": plot}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forgetting-bench",
        description="Measure catastrophic forgetting of DNN model families on MNIST tasks.",
    )
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Console log level")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS.values():
        module.add_parser(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    try:
        return COMMANDS[args.command].execute(args)
    except (BenchmarkError, FileNotFoundError) as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
