"""
`neflow run CONFIG`: integrate one experiment and write its artifacts.

Exit codes: 0 converged, 2 finished without converging, 1 error.
"""

import argparse

from neflow.cli.common import emit, load_config
from neflow.services.experiment import run_experiment

EXIT_CONVERGED = 0
EXIT_NOT_CONVERGED = 2


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    result = run_experiment(config, output_dir=args.out)
    summary = result.summary
    emit({
        "success": True,
        "name": summary["name"],
        "converged": summary["converged"],
        "final_ne_error": summary["final_ne_error"],
        "final_consensus_error": summary["final_consensus_error"],
        "time_to_tol": summary["time_to_tol"],
        "warnings": summary["warnings"],
        "output_dir": summary.get("output_dir"),
    })
    return EXIT_CONVERGED if result.converged else EXIT_NOT_CONVERGED


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Run one experiment config")
    parser.add_argument("config", type=str, help="Path to an experiment JSON config")
    parser.add_argument("--out", "-o", type=str, default=None, help="Output root (default: NEFLOW_OUT or ./runs)")
    parser.set_defaults(handler=cmd_run)
