"""Integrated trajectories and experiment results."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

METRIC_NAMES = ("ne_error", "consensus_error", "velocity_norm", "observer_norm")


@dataclass(frozen=True)
class Trajectory:
    """
    Recorded samples of one run.

    states holds the closed-loop state (without w) row by row; w_states the
    stacked exosystem states. Every metric array has len(times) entries.
    """

    times: np.ndarray
    states: np.ndarray
    w_states: np.ndarray
    metrics: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        for name, values in self.metrics.items():
            if len(values) != len(self.times):
                raise ValueError(f"metric '{name}' has {len(values)} samples for {len(self.times)} times")

    def __len__(self) -> int:
        return len(self.times)

    def final(self, metric: str) -> float:
        return float(self.metrics[metric][-1])


@dataclass
class ExperimentResult:
    trajectory: Trajectory
    summary: dict
    x_star: np.ndarray
    actions: np.ndarray
    osnr: Optional[np.ndarray] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return bool(self.summary["converged"])
