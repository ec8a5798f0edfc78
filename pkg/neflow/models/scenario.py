"""Scenario parameters and the bundle a scenario constructor returns."""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from neflow.models.exosystem import Exosystem
from neflow.models.game import GameSpec

# Sensor-network targets r_i, one pair per robot
SENSOR_TARGETS = ((2.0, -2.0), (-2.0, -2.0), (-4.0, 2.0), (2.0, -4.0), (3.0, 3.0))


class SensorParams(BaseModel):
    """Five mobile robots positioning themselves between targets and each other."""

    model_config = ConfigDict(extra="forbid")

    targets: list[tuple[float, float]] = Field(default_factory=lambda: [tuple(t) for t in SENSOR_TARGETS])
    disturbance: str = Field(default="constant", pattern="^(constant|sinusoid|none)$")
    bias: float = 0.5
    amplitude: float = 0.5
    # one rad/s
    frequency_hz: float = Field(default=1.0 / (2.0 * np.pi), gt=0)

    @field_validator("targets")
    @classmethod
    def _at_least_two(cls, targets):
        if len(targets) < 2:
            raise ValueError("the sensor game needs at least 2 robots")
        return targets

    @property
    def N(self) -> int:
        return len(self.targets)


class OsnrParams(BaseModel):
    """
    Channels sharing an optically amplified link.

    Scalars are broadcast to every channel. The pilot tone of channel i has
    modulation index m_i and frequency f_i (kHz); simulated time runs
    `time_scale` times slower than physical time.
    """

    model_config = ConfigDict(extra="forbid")

    N: int = Field(default=10, ge=2)
    a: float | list[float] = 1.0
    b: float | list[float] = 1.0
    c: float | list[float] = 1.0
    n0: float | list[float] = 0.05
    P0: float = Field(default=5.0, gt=0)
    gamma_offdiag: float = Field(default=0.05, ge=0)
    gamma_diag: float = Field(default=1.0, ge=0)
    Gamma: list[list[float]] | None = None
    m: list[float] | None = None
    f_khz: list[float] | None = None
    time_scale: float = Field(default=1e4, gt=0)
    x0: list[float] | None = None
    certify_samples: int = Field(default=500, ge=1)

    @model_validator(mode="after")
    def _shapes(self):
        for name in ("a", "b", "c", "n0"):
            value = getattr(self, name)
            if isinstance(value, list) and len(value) != self.N:
                raise ValueError(f"{name} must have {self.N} entries")
            if np.any(np.asarray(value, dtype=float) <= 0):
                raise ValueError(f"{name} must be positive")
        if self.Gamma is not None:
            G = np.asarray(self.Gamma, dtype=float)
            if G.shape != (self.N, self.N):
                raise ValueError(f"Gamma must be {self.N}x{self.N}")
            if np.any(G < 0):
                raise ValueError("Gamma must be nonnegative")
        for name in ("m", "f_khz", "x0"):
            value = getattr(self, name)
            if value is not None and len(value) != self.N:
                raise ValueError(f"{name} must have {self.N} entries")
        if self.x0 is not None and (min(self.x0) < 0 or sum(self.x0) >= self.P0):
            raise ValueError("x0 must be nonnegative with total power below P0")
        return self

    def vector(self, name: str) -> np.ndarray:
        return np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (self.N,)).copy()

    def gamma_matrix(self) -> np.ndarray:
        if self.Gamma is not None:
            return np.asarray(self.Gamma, dtype=float)
        G = np.full((self.N, self.N), self.gamma_offdiag)
        np.fill_diagonal(G, self.gamma_diag)
        return G

    def modulation(self) -> np.ndarray:
        """m_i = 0.1 i unless given."""
        return np.asarray(self.m, dtype=float) if self.m is not None else 0.1 * np.arange(1, self.N + 1)

    def pilot_khz(self) -> np.ndarray:
        """f_i = 10 i kHz unless given."""
        return np.asarray(self.f_khz, dtype=float) if self.f_khz is not None else 10.0 * np.arange(1, self.N + 1)

    def initial_powers(self) -> np.ndarray:
        return np.asarray(self.x0, dtype=float) if self.x0 is not None else np.full(self.N, self.P0 / (4 * self.N))


class SyntheticParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: int = Field(default=4, ge=2)
    dims: list[int] | None = None
    conditioning: float = Field(default=4.0, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _dims(self):
        if self.dims is not None and (len(self.dims) != self.N or min(self.dims) < 1):
            raise ValueError(f"dims must list {self.N} positive sizes")
        return self


@dataclass(frozen=True)
class Scenario:
    """A game with its default disturbances and initial actions."""

    name: str
    game: GameSpec
    exosystems: Tuple[Exosystem, ...]
    x0: np.ndarray
    time_scale: float = 1.0
    params: Optional[BaseModel] = field(default=None, compare=False)
