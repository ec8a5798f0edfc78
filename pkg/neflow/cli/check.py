"""`neflow check CONFIG`: constants, the sufficient condition and exosystem certificates."""

import argparse

from neflow.cli.common import emit, load_config
from neflow.services.experiment import check_report


def cmd_check(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    emit({"success": True, **check_report(config, lambda2=args.lambda2)})
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("check", help="Check the convergence condition and exosystems of a config")
    parser.add_argument("config", type=str, help="Path to an experiment JSON config")
    parser.add_argument(
        "--lambda2",
        type=float,
        default=None,
        help="Evaluate the condition at this algebraic connectivity instead of the config's graph",
    )
    parser.set_defaults(handler=cmd_check)
