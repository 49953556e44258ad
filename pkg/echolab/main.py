#!/usr/bin/env python3
"""
echo-lab command-line entry point
run: scenario experiments; plot: SVG figures from tables; check: property suites
"""
import argparse
import logging
import sys
from typing import List, Optional

from echolab import __version__
from echolab.commands import check_command, plot_command, run_command
from echolab.config import settings
from echolab.exceptions import NumericalFailure, ValidationFailure

logger = logging.getLogger("echolab")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echo-lab", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"echo-lab {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (run_command, plot_command, check_command):
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one sub-command and map errors to exit codes"""
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return int(e.code or 0)

    try:
        return args.func(args)
    except ValidationFailure as e:
        logger.error(f"❌ Invalid input: {e}")
        return ValidationFailure.exit_code
    except NumericalFailure as e:
        logger.error(f"❌ Numerical failure: {e}")
        return NumericalFailure.exit_code


if __name__ == "__main__":
    sys.exit(main())
