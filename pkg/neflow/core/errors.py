"""
Exception hierarchy shared by every neflow module.
"""

from typing import Optional

import numpy as np


class NeflowError(Exception):
    """Base class for all library errors."""


class ConfigurationError(NeflowError):
    """Invalid experiment or law configuration (e.g. missing observer gain)."""


class ValidationError(NeflowError):
    """Malformed input: wrong shape, asymmetric adjacency, unclosed pole set."""


class DomainError(NeflowError):
    """A cost or gradient was evaluated outside its domain."""


class GraphError(NeflowError):
    """Graph construction failed."""


class ObservabilityError(NeflowError):
    """The (D, S) pair of an exosystem is not observable."""

    def __init__(self, message: str, rank: int, expected: int):
        super().__init__(f"{message} (rank {rank} < {expected}, defect {expected - rank})")
        self.rank = rank
        self.expected = expected


class ConvergenceError(NeflowError):
    """An iterative solve stopped before reaching its tolerance."""

    def __init__(self, message: str, last_residual: float, iterations: int):
        super().__init__(f"{message} (residual {last_residual:.3e} after {iterations} iterations)")
        self.last_residual = last_residual
        self.iterations = iterations


class IntegrationError(NeflowError):
    """The integrator produced a non-finite state."""

    def __init__(self, message: str, time: float, last_state: Optional[np.ndarray] = None):
        super().__init__(f"{message} at t={time:.6g}")
        self.time = time
        self.last_state = last_state
