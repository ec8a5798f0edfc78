"""Communication graph model."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class GraphSpec:
    """Undirected, unweighted communication graph and its Laplacian facts."""

    adjacency: np.ndarray
    laplacian: np.ndarray
    lambda2: float
    lambda_max: float
    connected: bool
    neighbors: Tuple[np.ndarray, ...]
    seed: Optional[int] = None

    @property
    def N(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diag(self.laplacian)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "adjacency": self.adjacency.astype(int).tolist(),
            "lambda2": self.lambda2,
            "lambda_max": self.lambda_max,
            "connected": self.connected,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the sufficient condition mu (lambda2 - theta) > theta^2."""

    mu: float
    theta: float
    lambda2: float
    margin: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "theta": self.theta,
            "lambda2": self.lambda2,
            "margin": self.margin,
            "holds": self.holds,
        }
