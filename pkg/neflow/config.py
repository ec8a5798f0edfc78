"""
Library configuration using Pydantic Settings.
All config loaded from environment variables (prefix NEFLOW_) or a .env file.
"""

import logging
from functools import lru_cache
from typing import List

from pydantic_settings import BaseSettings, SettingsConfigDict

from neflow.core.errors import ConfigurationError

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Library settings loaded from environment."""

    model_config = SettingsConfigDict(
        env_prefix="NEFLOW_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Output
    out: str = "./runs"
    log_level: str = "INFO"
    svg_hashsalt: str = "neflow"

    # Integration
    default_dt: float = 1e-3
    converge_tol: float = 1e-3

    # NE oracle
    ne_tol: float = 1e-10
    ne_max_iter: int = 200_000

    # Constant certification
    certify_budget: int = 10_000

    # Random graphs
    max_graph_draws: int = 1000

    # Sweep workers
    jobs: int = 1


def validate_settings(settings: Settings) -> None:
    """
    Validate settings before a run. Fails fast on values no run can use.

    Errors (raise):
    - non-positive dt or tolerances
    - jobs < 1

    Warnings (logged but don't fail):
    - dt above 1e-2 (RK4 accuracy of the acceptance runs degrades)
    """
    errors: List[str] = []
    warnings: List[str] = []

    if settings.default_dt <= 0:
        errors.append("NEFLOW_DEFAULT_DT must be positive")
    if settings.ne_tol <= 0 or settings.converge_tol <= 0:
        errors.append("NEFLOW_NE_TOL and NEFLOW_CONVERGE_TOL must be positive")
    if settings.ne_max_iter < 1:
        errors.append("NEFLOW_NE_MAX_ITER must be at least 1")
    if settings.certify_budget < 1:
        errors.append("NEFLOW_CERTIFY_BUDGET must be at least 1")
    if settings.jobs < 1:
        errors.append("NEFLOW_JOBS must be at least 1")

    if settings.default_dt > 1e-2:
        warnings.append(
            f"NEFLOW_DEFAULT_DT={settings.default_dt} is coarse; acceptance numbers assume 1e-3"
        )

    for w in warnings:
        logger.warning(w)

    if errors:
        raise ConfigurationError("; ".join(errors))


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def get_validated_settings() -> Settings:
    """Get settings and validate them. Call this at CLI startup."""
    settings = get_settings()
    validate_settings(settings)
    return settings
