"""Subcommands, registered on one argparse parser."""

import argparse

from neflow.cli import check, ne, run, sweep

COMMANDS = (run, check, ne, sweep)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neflow",
        description="Nash-equilibrium seeking under exosystem disturbances",
    )
    parser.add_argument("--log-level", type=str, default=None, help="Override NEFLOW_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser
