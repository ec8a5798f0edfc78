"""
`neflow sweep CONFIG --key law.b --values 0.5,1,2`: one run per value.

Runs land in <out>/<config name>/<key>=<value>/ and a sweep summary in
<out>/<config name>/sweep_summary.json. `--jobs k` fans runs across k
worker processes.
"""

import argparse
import copy
import json
from multiprocessing import Pool
from pathlib import Path
from typing import Any, List, Tuple

from neflow.cli.common import emit, load_config
from neflow.config import get_settings
from neflow.core.errors import ConfigurationError, NeflowError
from neflow.models.experiment import ExperimentConfig
from neflow.services.experiment import output_root, run_experiment, write_summary_json


def parse_values(raw: str) -> List[Any]:
    """A JSON list, or comma-separated scalars (numbers parsed as JSON)."""
    raw = raw.strip()
    if raw.startswith("["):
        return json.loads(raw)
    values = []
    for item in raw.split(","):
        item = item.strip()
        try:
            values.append(json.loads(item))
        except json.JSONDecodeError:
            values.append(item)
    return values


def set_key(data: dict, key: str, value: Any) -> dict:
    """Copy of `data` with the dotted `key` set to `value`."""
    data = copy.deepcopy(data)
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"'{part}' in '{key}' is not a config section")
    node[parts[-1]] = value
    return data


def _label(key: str, value: Any) -> str:
    text = json.dumps(value) if not isinstance(value, str) else value
    safe = "".join(ch if ch.isalnum() or ch in "-_.=" else "_" for ch in text)
    return f"{key}={safe}"


def _run_one(payload: Tuple[dict, str, str]) -> dict:
    data, root, label = payload
    try:
        config = ExperimentConfig.model_validate(data)
        result = run_experiment(config, output_dir=Path(root))
        summary = result.summary
        return {
            "label": label,
            "success": True,
            "converged": summary["converged"],
            "final_ne_error": summary["final_ne_error"],
            "final_consensus_error": summary["final_consensus_error"],
            "time_to_tol": summary["time_to_tol"],
            "condition_holds": summary["condition"]["holds"],
        }
    except (NeflowError, ValueError) as e:
        return {"label": label, "success": False, "error": str(e)}


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    values = parse_values(args.values)
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    jobs = args.jobs if args.jobs is not None else get_settings().jobs
    if jobs < 1:
        raise ConfigurationError("--jobs must be at least 1")

    base = config.model_dump(mode="json")
    root = output_root(config, args.out) / config.name
    payloads = []
    for value in values:
        label = _label(args.key, value)
        data = set_key(base, args.key, value)
        data["name"] = label
        payloads.append((data, str(root), label))

    if jobs == 1:
        runs = [_run_one(p) for p in payloads]
    else:
        with Pool(processes=min(jobs, len(payloads))) as pool:
            runs = pool.map(_run_one, payloads)

    summary = {"name": config.name, "key": args.key, "values": values, "runs": runs}
    write_summary_json(summary, root / "sweep_summary.json")
    emit({"success": all(r["success"] for r in runs), **summary, "output_dir": str(root)})
    return 0 if all(r["success"] for r in runs) else 1


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="Run a config over a grid of values for one key")
    parser.add_argument("config", type=str, help="Path to an experiment JSON config")
    parser.add_argument("--key", required=True, type=str, help="Dotted config key, e.g. law.b or graph.seed")
    parser.add_argument("--values", required=True, type=str, help="JSON list or comma-separated values")
    parser.add_argument("--jobs", "-j", type=int, default=None, help="Worker processes (default: NEFLOW_JOBS)")
    parser.add_argument("--out", "-o", type=str, default=None, help="Output root (default: NEFLOW_OUT or ./runs)")
    parser.set_defaults(handler=cmd_sweep)
