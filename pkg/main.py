import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from app.config import settings
from app.exceptions import ConfigValidationError, DelocLabError
from services.experiment_service import get_experiment_service, validate_config
from services.report_store import read_text
from utils.logger import setup_logger

load_dotenv()

logger = logging.getLogger("deloc_lab")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deloc-lab", description="Eigenvector delocalization laboratory")
    parser.add_argument("--debug", action="store_true", help="Verbose logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one experiment from a JSON config")
    run.add_argument("config", help="Path to the experiment config (JSON)")
    run.add_argument("--out", default=None, help="Output directory (overrides output_dir)")
    run.add_argument("--threads", type=int, default=None, help="Worker threads")
    run.add_argument("--seed", type=int, default=None, help="Master seed (overrides master_seed)")

    check = sub.add_parser("validate", help="Validate a config and list every problem")
    check.add_argument("config", help="Path to the experiment config (JSON)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logger(log_file=settings.log_file, debug=args.debug or settings.debug)

    try:
        config = validate_config(read_text(args.config))
        if args.command == "validate":
            print(f"{args.config}: ok ({config.experiment.value})")
            return 0
        if args.threads is not None and args.threads < 1:
            raise ConfigValidationError(["--threads: must be at least 1"])
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigValidationError(["--seed: must be in [0, 2^64)"])
        manifest = get_experiment_service().run_experiment(
            config, output_dir=args.out, threads=args.threads, seed=args.seed
        )
    except ConfigValidationError as e:
        for error in e.errors:
            print(f"config error: {error}", file=sys.stderr)
        return e.exit_code
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DelocLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    for name, count in manifest.row_counts.items():
        print(f"{name}: {count} rows")
    for warning in manifest.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
