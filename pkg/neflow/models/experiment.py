"""
Experiment configuration schemas.

Configs are JSON files; every section rejects unknown keys.
"""

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from neflow.config import get_settings
from neflow.models.law import LawVariant


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SimConfig(_Strict):
    t_end: float = Field(gt=0)
    dt: float = Field(default_factory=lambda: get_settings().default_dt, gt=0)
    method: Literal["rk4", "rk45"] = "rk4"
    rtol: float = Field(default=1e-8, gt=0)
    atol: float = Field(default=1e-10, gt=0)
    record_every: int = Field(default=10, ge=1)
    max_steps: int = Field(default=10_000_000, ge=1)
    seed: int = 0


class ScenarioConfig(_Strict):
    name: str = Field(pattern="^(sensor|osnr|synthetic)$")
    params: dict[str, Any] = Field(default_factory=dict)


class LawConfig(_Strict):
    variant: LawVariant
    b: float | None = Field(default=None, gt=0)
    order: int | None = Field(default=None, ge=1)
    c: list[float] | None = None
    # false runs an internal-model law with q = 0 (no disturbance model)
    internal_model: bool = True


class GraphConfig(_Strict):
    kind: Literal["complete", "random", "explicit", "path", "ring"] = "complete"
    p: float | None = Field(default=None, gt=0, le=1)
    seed: int = 0
    adjacency: list[list[int]] | None = None

    @model_validator(mode="after")
    def _required_fields(self):
        if self.kind == "random" and self.p is None:
            raise ValueError("random graphs need an edge probability p")
        if self.kind == "explicit" and self.adjacency is None:
            raise ValueError("explicit graphs need an adjacency matrix")
        if self.kind != "explicit" and self.adjacency is not None:
            raise ValueError(f"adjacency is only used by explicit graphs, not '{self.kind}'")
        return self


class DisturbanceConfig(_Strict):
    """One exosystem; `type` selects which fields are read."""

    type: Literal["constant", "biased_sinusoid", "custom", "none"]
    value: list[float] | None = None
    bias: float | None = None
    amplitude: float | None = None
    frequency_hz: float | None = Field(default=None, gt=0)
    axis: int = Field(default=0, ge=0)
    S: list[list[float]] | None = None
    D: list[list[float]] | None = None
    w0: list[float] | None = None

    @model_validator(mode="after")
    def _required_fields(self):
        required = {
            "constant": ("value",),
            "biased_sinusoid": ("bias", "amplitude", "frequency_hz"),
            "custom": ("S", "D", "w0"),
            "none": (),
        }[self.type]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.type} disturbance needs {', '.join(missing)}")
        return self


class InitialConfig(_Strict):
    x0: list[float] | None = None
    v0: list[float] | None = None
    estimates: Literal["zero", "actions"] = "zero"


class ExperimentConfig(_Strict):
    name: str = Field(min_length=1, max_length=200)
    scenario: ScenarioConfig
    law: LawConfig
    graph: GraphConfig = Field(default_factory=GraphConfig)
    # one entry is broadcast to every agent; otherwise one entry per agent
    disturbances: list[DisturbanceConfig] | None = None
    disturbance_free: bool = False
    # real poles as numbers, complex poles as [re, im] pairs
    observer_poles: list[float | tuple[float, float]] | None = None
    initial: InitialConfig = Field(default_factory=InitialConfig)
    sim: SimConfig
    converge_tol: float | None = Field(default=None, gt=0)
    output_dir: str | None = None

    @field_validator("observer_poles")
    @classmethod
    def _stable_poles(cls, poles):
        if poles is None:
            return poles
        for p in poles:
            re = p[0] if isinstance(p, tuple) else p
            if re >= 0:
                raise ValueError(f"observer pole {p} must have negative real part")
        return poles

    @model_validator(mode="after")
    def _consistent(self):
        if self.disturbance_free and self.disturbances is not None:
            raise ValueError("disturbance_free runs take no disturbances")
        return self

    def pole_list(self) -> list[complex] | None:
        if self.observer_poles is None:
            return None
        return [complex(*p) if isinstance(p, tuple) else complex(p) for p in self.observer_poles]
