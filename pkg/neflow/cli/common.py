"""
Helpers shared by the subcommands: config loading and JSON output.

Stdout carries exactly one JSON document per command; logs go to stderr.
"""

import json
import sys
from pathlib import Path
from typing import Any

from neflow.core.errors import ConfigurationError
from neflow.models.experiment import ExperimentConfig


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigurationError(f"config not found: {path}")
    with open(config_path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return ExperimentConfig.model_validate(data)


def _default(value: Any):
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return str(value)


def emit(result: dict) -> None:
    print(json.dumps(result, indent=2, default=_default))


def emit_error(error: str) -> None:
    print(json.dumps({"success": False, "error": error}, indent=2), file=sys.stderr)
