"""
Experiment pipeline.

Wires scenario, graph, exosystems, laws and the simulator together, then
measures the trajectory against the NE oracle and writes the run artifacts.
"""

import json
import logging
import time
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from neflow.config import get_settings
from neflow.core.errors import ConfigurationError, DomainError, NeflowError
from neflow.models.exosystem import Exosystem
from neflow.models.experiment import DisturbanceConfig, ExperimentConfig, GraphConfig
from neflow.models.game import Certificate, GameSpec
from neflow.models.graph import GraphSpec
from neflow.models.scenario import Scenario
from neflow.models.trajectory import METRIC_NAMES, ExperimentResult, Trajectory
from neflow.services import plotting
from neflow.services.dynamics import ClosedLoop, make_laws
from neflow.services.exosystem import (
    biased_sinusoid,
    constant_disturbance,
    custom_exosystem,
    no_disturbance,
    validate,
    with_gain,
)
from neflow.services.game import certify_constants, exact_constants, pseudo_gradient, solve_ne
from neflow.services.network import (
    build_graph,
    check_condition,
    complete_graph,
    path_graph,
    random_connected_graph,
    required_lambda2,
    ring_graph,
)
from neflow.services.scenarios import get_scenario, osnr_value
from neflow.services.simulation import integrate, tail_is_monotone, tail_oscillation, time_to_tol

logger = logging.getLogger(__name__)

TIME_TO_TOL_LEVELS = (1e-2, 1e-3)
TAIL_FRACTION = 0.2
CSV_COLUMNS = ["t", "agent", "component", "kind", "value"]


# -------------------------------------------------------------------------
# Config -> objects
# -------------------------------------------------------------------------

def build_graph_from_config(config: GraphConfig, N: int) -> GraphSpec:
    if config.kind == "complete":
        return complete_graph(N)
    if config.kind == "random":
        return random_connected_graph(N, config.p, seed=config.seed)
    if config.kind == "path":
        return path_graph(N)
    if config.kind == "ring":
        return ring_graph(N)
    graph = build_graph(config.adjacency)
    if graph.N != N:
        raise ConfigurationError(f"adjacency has {graph.N} vertices for {N} agents")
    return graph


def build_exosystem(config: DisturbanceConfig, dim: int) -> Exosystem:
    if config.type == "constant":
        if len(config.value) != dim:
            raise ConfigurationError(f"constant disturbance has {len(config.value)} components for a {dim}-dimensional action")
        return constant_disturbance(config.value)
    if config.type == "biased_sinusoid":
        return biased_sinusoid(config.bias, config.amplitude, config.frequency_hz, dim=dim, axis=config.axis)
    if config.type == "custom":
        return custom_exosystem(config.S, config.D, config.w0)
    return no_disturbance(dim)


def resolve_exosystems(config: ExperimentConfig, scenario: Scenario) -> List[Exosystem]:
    """Scenario defaults, replaced by config disturbances (one entry broadcasts)."""
    dims = scenario.game.dims
    if config.disturbance_free:
        return [no_disturbance(n_i) for n_i in dims]
    if config.disturbances is None:
        return list(scenario.exosystems)
    entries = config.disturbances
    if len(entries) == 1:
        entries = entries * len(dims)
    if len(entries) != len(dims):
        raise ConfigurationError(f"{len(entries)} disturbances for {len(dims)} agents")
    return [build_exosystem(entry, n_i) for entry, n_i in zip(entries, dims)]


def game_constants(game: GameSpec) -> Certificate:
    """Exact constants for quadratic games, declared or sampled ones otherwise."""
    if game.is_quadratic:
        return exact_constants(game)
    if game.mu is not None and game.theta is not None:
        return Certificate(mu=game.mu, theta=game.theta, exact=False, box=_box_lists(game))
    return certify_constants(game)


def _box_lists(game: GameSpec):
    if game.certify_box is None:
        return None
    lo, hi = game.certify_box
    return (np.asarray(lo).tolist(), np.asarray(hi).tolist())


def output_root(config: ExperimentConfig, output_dir: Optional[Path] = None) -> Path:
    """Explicit argument, then NEFLOW_OUT, then the config's output_dir, then the default."""
    settings = get_settings()
    if output_dir is not None:
        return Path(output_dir)
    if "out" in settings.model_fields_set:
        return Path(settings.out)
    if config.output_dir:
        return Path(config.output_dir)
    return Path(settings.out)


def prepare(config: ExperimentConfig) -> Tuple[Scenario, GraphSpec, ClosedLoop, List[str]]:
    """Scenario, graph and closed loop for a config, plus setup warnings."""
    warnings: List[str] = []

    # Phase 1: scenario and disturbances
    scenario = get_scenario(config.scenario.name, config.scenario.params)
    game = scenario.game
    exosystems = resolve_exosystems(config, scenario)

    # Phase 2: communication graph (built for full-information runs too, for the report)
    graph = build_graph_from_config(config.graph, game.N)
    if not graph.connected:
        warnings.append("communication graph is disconnected")

    # Phase 3: laws and closed loop
    laws = make_laws(
        game,
        config.law.variant,
        exosystems,
        b=config.law.b,
        order=config.law.order,
        c=config.law.c,
        poles=config.pole_list(),
        internal_model=config.law.internal_model,
    )
    loop = ClosedLoop(game, laws, exosystems, graph if laws.variant.is_partial else None)
    return scenario, graph, loop, warnings


# -------------------------------------------------------------------------
# Run
# -------------------------------------------------------------------------

def run_experiment(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    write: bool = True,
) -> ExperimentResult:
    """
    Integrate one configured run and summarize it.

    A violated sufficient condition is a warning only; the run proceeds.
    """
    scenario, graph, loop, warnings = prepare(config)
    game = scenario.game
    variant = loop.variant

    certificate = game_constants(game)
    report = check_condition(certificate.mu, certificate.theta, graph.lambda2)
    if variant.is_partial and not report.holds:
        message = (
            f"sufficient condition mu (lambda2 - theta) > theta^2 fails (margin {report.margin:.4g}); "
            "convergence is not guaranteed"
        )
        warnings.append(message)
        logger.warning(message)

    x_star = solve_ne(game)

    x0 = np.asarray(config.initial.x0, dtype=float) if config.initial.x0 is not None else scenario.x0
    z0 = loop.initial_state(
        x0=x0,
        v0=None if config.initial.v0 is None else np.asarray(config.initial.v0, dtype=float),
        estimates=config.initial.estimates,
    )

    started = time.perf_counter()
    times, samples = integrate(loop.rhs, z0, config.sim)
    elapsed = time.perf_counter() - started
    logger.info("%s: integrated %d samples in %.2fs", config.name, len(times), elapsed)

    metrics = loop.metrics(samples, x_star)
    states, w_states = loop.split(samples)
    trajectory = Trajectory(times=times, states=states, w_states=w_states, metrics=metrics)
    actions = loop.actions(samples)

    osnr = None
    if scenario.name == "osnr":
        osnr = osnr_value(scenario.params, actions)

    summary = summarize(config, trajectory, actions, x_star, game, certificate, report, graph, scenario, warnings, osnr)

    result = ExperimentResult(
        trajectory=trajectory,
        summary=summary,
        x_star=x_star,
        actions=actions,
        osnr=osnr,
        warnings=warnings,
    )
    if write:
        out = output_root(config, output_dir) / config.name
        write_run(result, loop, scenario, out)
        summary["output_dir"] = str(out)
    return result


def summarize(
    config: ExperimentConfig,
    trajectory: Trajectory,
    actions: np.ndarray,
    x_star: np.ndarray,
    game: GameSpec,
    certificate: Certificate,
    report,
    graph: GraphSpec,
    scenario: Scenario,
    warnings: List[str],
    osnr: Optional[np.ndarray],
) -> dict:
    tol = config.converge_tol if config.converge_tol is not None else get_settings().converge_tol
    times, metrics = trajectory.times, trajectory.metrics
    final = {name: trajectory.final(name) for name in METRIC_NAMES}
    converged = all(final[name] < tol for name in ("ne_error", "consensus_error", "velocity_norm"))

    try:
        gradient_norm = float(np.linalg.norm(pseudo_gradient(game, actions[-1])))
    except DomainError as e:
        gradient_norm = None
        warnings.append(f"pseudo-gradient undefined at the final profile: {e}")

    summary = {
        "name": config.name,
        "scenario": scenario.name,
        "variant": config.law.variant.value,
        "converged": bool(converged),
        "converge_tol": tol,
        **{f"final_{name}": value for name, value in final.items()},
        "final_gradient_norm": gradient_norm,
        "time_to_tol": {f"{level:g}": time_to_tol(times, metrics["ne_error"], level) for level in TIME_TO_TOL_LEVELS},
        "tail_oscillation": {
            "ne_error": tail_oscillation(times, metrics["ne_error"], TAIL_FRACTION),
            "actions": tail_oscillation(times, actions, TAIL_FRACTION),
        },
        "tail_monotone": tail_is_monotone(times, metrics["ne_error"], TAIL_FRACTION),
        "x_star": x_star.tolist(),
        "final_actions": actions[-1].tolist(),
        "constants": certificate.to_dict(),
        "condition": {**report.to_dict(), "required_lambda2": required_lambda2(certificate.mu, certificate.theta)},
        "graph": graph.to_dict(),
        "time_scale": scenario.time_scale,
        "sim": config.sim.model_dump(),
        "warnings": list(warnings),
    }
    if osnr is not None:
        summary["final_osnr"] = osnr[-1].tolist()
        summary["tail_oscillation"]["osnr"] = tail_oscillation(times, osnr, TAIL_FRACTION)
    return summary


# -------------------------------------------------------------------------
# Artifacts
# -------------------------------------------------------------------------

def _column_spec(loop: ClosedLoop) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """State columns written to CSV with their (agent, component, kind) labels and component positions."""
    layout = loop.layout
    index, agents, components, kinds, positions = [], [], [], [], []

    def add(i: int, cols: np.ndarray, kind: str):
        index.extend(cols.tolist())
        agents.extend([i] * len(cols))
        components.extend(str(k) for k in range(len(cols)))
        positions.extend(range(len(cols)))
        kinds.extend([kind] * len(cols))

    for i in range(loop.game.N):
        add(i, layout.x_index(i), "action")
        add(i, layout.v_index(i).reshape(-1), "velocity")
        add(i, layout.est_index(i), "estimate")
        add(i, layout.xi_index(i), "observer")
    return np.array(index, dtype=int), np.array(agents), np.array(components), np.array(kinds), np.array(positions, dtype=int)


def trajectory_frame(trajectory: Trajectory, loop: ClosedLoop) -> pd.DataFrame:
    """Long format: one row per (t, agent, component, kind); metrics carry agent -1."""
    index, agents, components, kinds, positions = _column_spec(loop)
    T = len(trajectory.times)
    C = len(index)
    states = pd.DataFrame({
        "t": np.repeat(trajectory.times, C),
        "agent": np.tile(agents, T),
        "component": np.tile(components, T),
        "kind": np.tile(kinds, T),
        "value": trajectory.states[:, index].reshape(-1),
        "position": np.tile(positions, T),
    })
    names = list(METRIC_NAMES)
    metric_values = np.column_stack([trajectory.metrics[name] for name in names])
    metrics = pd.DataFrame({
        "t": np.repeat(trajectory.times, len(names)),
        "agent": -1,
        "component": np.tile(names, T),
        "kind": "metric",
        "value": metric_values.reshape(-1),
        "position": np.tile(np.arange(len(names)), T),
    })
    frame = pd.concat([states, metrics], ignore_index=True)
    # numeric component order: "10" after "2"
    return frame.sort_values(["t", "kind", "agent", "position"], kind="stable", ignore_index=True)[CSV_COLUMNS]


def write_trajectory_csv(trajectory: Trajectory, loop: ClosedLoop, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trajectory_frame(trajectory, loop).to_csv(path, index=False, float_format="%.12g")
    return path


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_summary_json(summary: dict, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True, default=_json_default)
    return path


def write_run(result: ExperimentResult, loop: ClosedLoop, scenario: Scenario, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    trajectory = result.trajectory
    time_label = f"t (physical x {1.0 / scenario.time_scale:g})" if scenario.time_scale != 1.0 else "t"

    write_trajectory_csv(trajectory, loop, out / "trajectory.csv")
    write_summary_json(result.summary, out / "summary.json")
    plotting.plot_actions(
        trajectory.times, result.actions, scenario.game.layout, out / "actions.svg",
        x_star=result.x_star, title=result.summary["name"], time_label=time_label,
    )
    plotting.plot_metrics(
        trajectory.times, trajectory.metrics, out / "metrics.svg",
        title=result.summary["name"], time_label=time_label,
    )
    if result.osnr is not None:
        plotting.plot_osnr(trajectory.times, result.osnr, out / "osnr.svg", title=result.summary["name"], time_label=time_label)
    logger.info("wrote run artifacts to %s", out)


# -------------------------------------------------------------------------
# Condition check
# -------------------------------------------------------------------------

def _exosystem_entry(i: int, exo: Exosystem, poles) -> dict:
    entry = {"agent": i, "kind": exo.kind, **validate(exo).to_dict()}
    if exo.q == 0:
        entry["placed_poles"] = []
        return entry
    try:
        gained = exo if exo.has_gain else with_gain(exo, desired_poles=poles)
        placed = np.sort_complex(np.linalg.eigvals(gained.S - gained.K @ gained.D))
        entry["observer_stable"] = bool(placed.real.max() < 0)
        entry["placed_poles"] = [[float(p.real), float(p.imag)] for p in placed]
    except NeflowError as e:
        entry["placed_poles"] = None
        entry["error"] = f"{type(e).__name__}: {e}"
    return entry


def check_report(config: ExperimentConfig, lambda2: Optional[float] = None) -> dict:
    """
    Constants, the sufficient condition and per-agent exosystem certificates.

    Observer design failures (e.g. an unobservable exosystem) are reported,
    not raised.
    """
    scenario = get_scenario(config.scenario.name, config.scenario.params)
    game = scenario.game
    exosystems = resolve_exosystems(config, scenario)
    graph = build_graph_from_config(config.graph, game.N)

    certificate = game_constants(game)
    l2 = graph.lambda2 if lambda2 is None else float(lambda2)
    report = check_condition(certificate.mu, certificate.theta, l2)
    poles = config.pole_list()
    return {
        "name": config.name,
        "scenario": scenario.name,
        "variant": config.law.variant.value,
        **certificate.to_dict(),
        **report.to_dict(),
        "lambda2_source": "graph" if lambda2 is None else "override",
        "required_lambda2": required_lambda2(certificate.mu, certificate.theta),
        "graph": graph.to_dict(),
        "exosystems": [_exosystem_entry(i, exo, poles) for i, exo in enumerate(exosystems)],
    }
