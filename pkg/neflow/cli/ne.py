"""`neflow ne SCENARIO`: the Nash equilibrium of a scenario game."""

import argparse
import json

import numpy as np

from neflow.cli.common import emit
from neflow.services.game import pseudo_gradient, solve_ne
from neflow.services.scenarios import SCENARIOS, get_scenario


def cmd_ne(args: argparse.Namespace) -> int:
    params = json.loads(args.params) if args.params else {}
    game = get_scenario(args.scenario, params).game
    x_star = solve_ne(game, tol=args.tol)
    residual = float(np.linalg.norm(pseudo_gradient(game, x_star)))
    emit({
        "success": True,
        "scenario": game.name,
        "x_star": [x_star[game.layout.slot(i)].round(args.digits).tolist() for i in range(game.N)],
        "residual": residual,
        "mu": game.mu,
        "theta": game.theta,
    })
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("ne", help="Print the Nash equilibrium of a scenario")
    parser.add_argument("scenario", choices=sorted(SCENARIOS), help="Scenario name")
    parser.add_argument("--params", type=str, default=None, help="Scenario parameters as a JSON object")
    parser.add_argument("--tol", type=float, default=None, help="Residual tolerance (default: NEFLOW_NE_TOL)")
    parser.add_argument("--digits", type=int, default=6, help="Rounding of the printed profile")
    parser.set_defaults(handler=cmd_ne)
