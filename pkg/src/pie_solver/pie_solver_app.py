"""
pie-solve - command-line entry point.

Routes a subcommand to its command module, prints a JSON summary on stdout
and maps solver errors to stable exit codes:
0 success, 1 verify failure, 2 config, 3 numeric, 4 indeterminate,
5 characteristic, 6 condition (II) divergent, 7 consistency.
"""

import argparse
import logging
import sys
from typing import List, Optional

from pie_solver.command_modules.classify_command import run_classify
from pie_solver.command_modules.eigen_command import run_eigen
from pie_solver.command_modules.profile_command import run_profile
from pie_solver.command_modules.solve_command import run_solve
from pie_solver.command_modules.verify_command import run_verify
from pie_solver.config.settings import app_config
from pie_solver.errors import CharacteristicParameterError, ConditionIIDivergentError, PieError
from pie_solver.job_config import load_job_config
from pie_solver.utils.file_utils import dumps_json

logger = logging.getLogger(__name__)

COMMANDS = {
    "profile": run_profile,
    "classify": run_classify,
    "solve": run_solve,
    "eigen": run_eigen,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pie-solve",
        description="Solvability analysis and solution of partial integral equations f - kappa T1 f = g.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("profile", "sample the determinant D1(y; kappa)"),
        ("classify", "decide whether kappa is regular, essential or characteristic"),
        ("solve", "solve the equation on a Gauss tensor grid"),
        ("eigen", "detect eigenvalues of the partial integral operator"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="path to the JSON job file")
        sub.add_argument("--kappa", help='override kappa: "0.5", "2" or "0.3+0.4j"')
        sub.add_argument("--nx", type=int, help="override the number of x nodes")
        sub.add_argument("--ny", type=int, help="override the number of y nodes")
    subparsers.add_parser("verify", help="run the acceptance checks on the built-in kernels")
    return parser


def _configure_logging():
    logging.basicConfig(
        level=getattr(logging, app_config.log_level, logging.WARNING),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main application function."""
    args = build_parser().parse_args(argv)
    _configure_logging()

    try:
        if args.command == "verify":
            summary = run_verify()
            print(dumps_json(summary))
            return 0 if summary["passed"] else 1

        job = load_job_config(args.config).with_overrides(kappa=args.kappa, nx=args.nx, ny=args.ny)
        summary = COMMANDS[args.command](job)
        print(dumps_json(summary))
        return 0
    except (CharacteristicParameterError, ConditionIIDivergentError) as e:
        print(dumps_json(e.to_dict()))
        print(f"pie-solve: {e}", file=sys.stderr)
        return e.exit_code
    except PieError as e:
        logger.debug("command failed", exc_info=True)
        print(f"pie-solve: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
