import argparse
import logging
import sys
from typing import List, Optional

from qcdyn.api.commands import compare, oracle, plot, run, validate
from qcdyn.core.config import settings
from qcdyn.core.exceptions import (
    QCDynException,
    ScenarioParseError,
    ScenarioValidationError,
)
from qcdyn.core.logging import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_INVALID_SCENARIO = 2
EXIT_DOMAIN_ERROR = 3
EXIT_UNEXPECTED = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcdyn",
        description="Mixed quantum-classical dynamics of one classical and one quantum particle in 1D",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    parser.add_argument("--log-level", default=None, help=f"Logging level (default {settings.LOG_LEVEL})")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for command in (run, compare, plot, oracle, validate):
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        return args.handler(args)
    except (ScenarioParseError, ScenarioValidationError) as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_INVALID_SCENARIO
    except QCDynException as e:
        print(f"error: {type(e).__name__}: {e.message}", file=sys.stderr)
        if e.details:
            print(f"details: {e.details}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    except Exception as e:
        logger.exception(f"Unexpected failure in '{args.command}'")
        print(f"error: unexpected failure: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
