"""Core utilities."""

from neflow.core.errors import (
    NeflowError,
    ConfigurationError,
    ValidationError,
    DomainError,
    GraphError,
    ObservabilityError,
    ConvergenceError,
    IntegrationError,
)
from neflow.core.logs import configure_logging

__all__ = [
    "NeflowError",
    "ConfigurationError",
    "ValidationError",
    "DomainError",
    "GraphError",
    "ObservabilityError",
    "ConvergenceError",
    "IntegrationError",
    "configure_logging",
]
