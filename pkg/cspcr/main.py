"""
cspcr - Command-Line Entry Point
"""
import argparse
import logging
import sys

from pydantic import ValidationError

from cspcr.controllers import ratio_controller, simulate_controller, testing_controller
from cspcr.core.config import get_settings
from cspcr.core.exceptions import ConfigurationError, CsPcrError
from cspcr.core.logging import configure_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Covariate-shift corrected Pearson chi-squared conditional randomization tests.",
        epilog="Exit codes: 0 success, 2 usage or input error, 3 numerical or degenerate-null error.",
    )
    parser.add_argument("--version", action="version", version=settings.app_version)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Include sub-commands
    testing_controller.register(subparsers)
    simulate_controller.register(subparsers)
    ratio_controller.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Parse `argv`, run the sub-command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    configure_logging(get_settings(), args.verbose)
    try:
        return args.handler(args)
    except CsPcrError as exc:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        logger.debug("Invalid configuration", exc_info=True)
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return ConfigurationError.exit_code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
