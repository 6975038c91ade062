from dotenv import load_dotenv

load_dotenv()
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from common_lib.errors import NUMERICAL_ERRORS, ConfigError, EvanescentModeError, OptimizerNonConvergenceError
from common_lib.optics.phasematch import MismatchConvention
from common_lib.settings import get_settings
from commands import cmd_decompose, cmd_jsa, cmd_modes, cmd_optimize, cmd_validate
from config import load_config

logger = logging.getLogger("biphoton-service")

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

CONFIG_COMMANDS = {
    "modes": cmd_modes,
    "jsa": cmd_jsa,
    "optimize": cmd_optimize,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    run_options = argparse.ArgumentParser(add_help=False)
    run_options.add_argument("--config", type=Path, required=True, help="Run configuration (JSON)")
    run_options.add_argument("--seed", type=int, help="Override the config seed")
    run_options.add_argument(
        "--convention",
        choices=[c.value for c in MismatchConvention],
        help="Override the momentum-mismatch convention",
    )
    run_options.add_argument("--out", type=Path, help="Override the output directory")

    parser = argparse.ArgumentParser(
        prog="biphoton",
        description="Elegant Gauss-Hermite pump modes, biphoton joint spectral amplitudes and pump optimization",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("modes", parents=[run_options], help="Tabulate pump modes and their spectra")
    subparsers.add_parser("jsa", parents=[run_options], help="Tabulate the joint spectral amplitude")
    subparsers.add_parser("optimize", parents=[run_options], help="Optimal pump coefficients for a target direction")
    subparsers.add_parser("decompose", parents=[run_options], help="Project a sampled field onto the modes")
    validate = subparsers.add_parser("validate", help="Run the numerical invariant suite")
    validate.add_argument("--only", nargs="+", metavar="NAME", help="Run only the named invariants")
    validate.add_argument("--ft-kernel-sign", type=int, choices=[-1, 1], default=-1, help=argparse.SUPPRESS)
    return parser


def _validate(args: argparse.Namespace) -> int:
    results = cmd_validate(names=args.only, ft_kernel_sign=args.ft_kernel_sign)
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'}  {result.name}: {result.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} invariants passed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(level=settings.log_level)

    try:
        if args.command == "validate":
            return _validate(args)
        config = load_config(args.config).with_overrides(args.seed, args.convention, args.out)
        logger.info(f"running {args.command} with {args.config}")
        for path in CONFIG_COMMANDS[args.command](config):
            print(path)
        return EXIT_OK
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG_ERROR
    except EvanescentModeError as e:
        logger.error(f"{e} (indices: {e.indices})")
        return EXIT_NUMERICAL_ERROR
    except OptimizerNonConvergenceError as e:
        logger.error(str(e))
        for diagnostic in e.diagnostics:
            logger.error(f"  {diagnostic}")
        return EXIT_NUMERICAL_ERROR
    except NUMERICAL_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERICAL_ERROR
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
