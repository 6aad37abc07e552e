# ABOUTME: cocycle-lab entry point - parses the command line and dispatches experiments
# ABOUTME: Maps verdicts and error classes to the process exit code

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from .config import get_settings
from .errors import ConfigError, LabError, UsageError
from .experiments import (
    SUITES,
    ArtifactWriter,
    aggregate_exit_code,
    config_hash,
    load_config,
    run_estimate,
    run_spectrum,
    run_verify,
)

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


class LabArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'") from e
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(
        prog="cocycle-lab",
        description="Desk-scale experiments on products of random matrices",
    )
    commands = parser.add_subparsers(
        dest="command", required=True, parser_class=LabArgumentParser
    )

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", type=Path, required=True, help="JSON experiment config")
        sub.add_argument("--out", type=Path, default=None, help="Override output_dir")
        sub.add_argument(
            "--threads", type=_positive_int, default=None, help="Worker threads for walks"
        )

    add_common(commands.add_parser("estimate", help="Estimate gamma, rho2, eta and LDT rates"))
    add_common(commands.add_parser("spectrum", help="Transfer-operator spectra (d = 2)"))
    verify = commands.add_parser("verify", help="Check a limit theorem or kernel property")
    verify.add_argument("which", choices=SUITES, help="Suite to run")
    add_common(verify)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """
    Run one command.

    Returns:
        Process exit code: the aggregate verdict, or the exit code of the error class
    """
    try:
        settings = get_settings()
    except Exception as e:
        logger.error(f"Failed to load settings: {e}")
        return ConfigError.exit_code

    errors = settings.validate_ready()
    if errors:
        logger.error("Configuration errors:")
        for error in errors:
            logger.error(f"  - {error}")
        return ConfigError.exit_code
    logging.getLogger().setLevel(settings.logging_level)

    try:
        args = build_parser().parse_args(argv)
        config = load_config(args.config)
    except (ConfigError, UsageError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code

    out_dir = args.out or config.output_dir
    threads = args.threads or settings.threads
    command = f"verify {args.which}" if args.command == "verify" else args.command
    logger.info(f"Running '{command}' into {out_dir} with {threads} thread(s)")

    writer = ArtifactWriter(out_dir, config_hash(config), command)
    try:
        if args.command == "estimate":
            criteria = run_estimate(config, writer, threads)
        elif args.command == "spectrum":
            criteria = run_spectrum(config, writer, threads)
        else:
            criteria = run_verify(config, args.which, writer, threads)
        writer.write_summary(criteria)
    except LabError as e:
        logger.exception(f"'{command}' failed with {type(e).__name__}")
        return e.exit_code
    finally:
        writer.write_manifest()

    code = aggregate_exit_code(criteria)
    logger.info(f"'{command}' finished with exit code {code}")
    return code


def main():
    """Main entry point for cocycle-lab."""
    sys.exit(run())


if __name__ == "__main__":
    main()
