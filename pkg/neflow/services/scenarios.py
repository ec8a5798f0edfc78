"""
Scenario constructors: the sensor-network and OSNR case studies and
synthetic quadratic games.
"""

import logging
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import ortho_group

from neflow.core.errors import ConfigurationError, DomainError, ValidationError
from neflow.models.exosystem import Exosystem
from neflow.models.game import GameSpec, GeneralGame, ProfileLayout, QuadraticGame
from neflow.models.scenario import OsnrParams, Scenario, SensorParams, SyntheticParams
from neflow.services.exosystem import biased_sinusoid, constant_disturbance, no_disturbance
from neflow.services.game import certify_constants

logger = logging.getLogger(__name__)


# -------------------------------------------------------------------------
# Sensor network
# -------------------------------------------------------------------------

def sensor_network_game(params: Optional[SensorParams] = None) -> GameSpec:
    """
    J_i = x_i'x_i + x_i'r_i + sum_j ||x_i - x_j||^2 with x_i in R^2.

    grad_i J_i = 2 x_i + r_i + 2 (N x_i - sum_j x_j), so A = (2N I - 2 11') (x) I_2 + 2 I,
    with spectrum {2, 2N + 2}.
    """
    params = params or SensorParams()
    N = params.N
    r = np.asarray(params.targets, dtype=float).reshape(-1)
    A = np.kron(2.0 * N * np.eye(N) - 2.0 * np.ones((N, N)), np.eye(2)) + 2.0 * np.eye(2 * N)
    targets = r.reshape(N, 2)

    def cost(i: int, profile: np.ndarray) -> float:
        X = profile.reshape(N, 2)
        return float(X[i] @ X[i] + X[i] @ targets[i] + np.sum((X[i] - X) ** 2))

    return GameSpec(
        name="sensor",
        layout=ProfileLayout((2,) * N),
        model=QuadraticGame(A=A, r=r, cost_fn=cost),
        mu=2.0,
        theta=float(2 * N + 2),
        params=params.model_dump(),
    )


def sensor_disturbances(kind: str = "constant", params: Optional[SensorParams] = None) -> List[Exosystem]:
    """Per-robot exosystems: d_i = (0.5, 0), or bias + amplitude sin(t) on the first coordinate."""
    params = params or SensorParams()
    if kind == "constant":
        return [constant_disturbance([params.bias, 0.0]) for _ in range(params.N)]
    if kind == "sinusoid":
        return [
            biased_sinusoid(params.bias, params.amplitude, params.frequency_hz, dim=2, axis=0)
            for _ in range(params.N)
        ]
    if kind == "none":
        return [no_disturbance(2) for _ in range(params.N)]
    raise ValidationError(f"unknown sensor disturbance '{kind}'")


# -------------------------------------------------------------------------
# OSNR power control
# -------------------------------------------------------------------------

def _osnr_terms(params: OsnrParams):
    return (
        params.vector("a"),
        params.vector("b"),
        params.vector("c"),
        params.vector("n0"),
        params.gamma_matrix(),
    )


def osnr_game(params: Optional[OsnrParams] = None) -> GameSpec:
    """
    J_i = a_i x_i + 1 / (P0 - sum_j x_j) - b_i ln(1 + c_i x_i / (n0_i + sum_{j != i} G_ij x_j))

    grad_i J_i = a_i + 1 / (P0 - sum_j x_j)^2 - b_i c_i / (n0_i + sum_{j != i} G_ij x_j + c_i x_i)

    The constants come from a sampled certificate on [0, 0.9 P0 / N]^N.
    """
    params = params or OsnrParams()
    N, P0 = params.N, params.P0
    a, b, c, n0, G = _osnr_terms(params)
    G_diag = np.diag(G).copy()

    def batch_gradient(blocks: np.ndarray) -> np.ndarray:
        # row i is channel i's view of all powers
        own = np.diag(blocks)
        slack = P0 - blocks.sum(axis=1)
        interference = n0 + (G * blocks).sum(axis=1) - G_diag * own
        if np.any(slack <= 0):
            raise DomainError(f"total power reaches P0={P0} (min slack {slack.min():.3e})")
        if np.any(interference <= 0) or np.any(interference + c * own <= 0):
            raise DomainError("channel power outside the logarithm's domain")
        return a + 1.0 / slack ** 2 - b * c / (interference + c * own)

    def partial_gradient(i: int, profile: np.ndarray) -> np.ndarray:
        return batch_gradient(np.tile(profile, (N, 1)))[i:i + 1]

    def cost(i: int, profile: np.ndarray) -> float:
        slack = P0 - profile.sum()
        interference = n0[i] + G[i] @ profile - G[i, i] * profile[i]
        ratio = 1.0 + c[i] * profile[i] / interference
        if slack <= 0 or interference <= 0 or ratio <= 0:
            raise DomainError("profile outside the OSNR cost's domain")
        return float(a[i] * profile[i] + 1.0 / slack - b[i] * np.log(ratio))

    box = (np.zeros(N), np.full(N, 0.9 * P0 / N))
    game = GameSpec(
        name="osnr",
        layout=ProfileLayout((1,) * N),
        model=GeneralGame(
            partial_gradient_fn=partial_gradient,
            batch_gradient_fn=batch_gradient,
            cost_fn=cost,
            x0=params.initial_powers(),
        ),
        certify_box=box,
        params=params.model_dump(),
    )
    certificate = certify_constants(game, sample_budget=params.certify_samples, seed=0)
    if certificate.mu <= 0:
        raise ValidationError(f"OSNR parameters are not strongly monotone on the box (sampled mu={certificate.mu:.3e})")
    return replace(game, mu=certificate.mu, theta=certificate.theta)


def osnr_pilot_exosystems(params: Optional[OsnrParams] = None) -> List[Exosystem]:
    """
    d_i = P0 (1 + m_i sin(2 pi f_i t)) on channel i, with f_i divided by
    time_scale (10 i kHz becomes i Hz at the default 1e4).
    """
    params = params or OsnrParams()
    m = params.modulation()
    f_sim = params.pilot_khz() * 1e3 / params.time_scale
    return [
        biased_sinusoid(params.P0, params.P0 * m[i], float(f_sim[i]), dim=1, axis=0)
        for i in range(params.N)
    ]


def osnr_value(params: OsnrParams, x: np.ndarray) -> np.ndarray:
    """
    OSNR of every channel, c_i x_i / (n0_i + sum_{j != i} G_ij x_j), on the
    last axis of x (single profiles or recorded rows).
    """
    _, _, c, n0, G = _osnr_terms(params)
    x = np.asarray(x, dtype=float)
    interference = n0 + x @ G.T - np.diag(G) * x
    return c * x / interference


# -------------------------------------------------------------------------
# Synthetic quadratic games
# -------------------------------------------------------------------------

def synthetic_quadratic(
    N: int = 4,
    dims: Optional[Sequence[int]] = None,
    conditioning: float = 4.0,
    seed: int = 0,
) -> GameSpec:
    """
    A = Q diag(1, ..., conditioning) Q' with a seeded random orthogonal Q, so
    mu = 1 and theta = conditioning.
    """
    if conditioning < 1:
        raise ValidationError(f"conditioning must be >= 1, got {conditioning}")
    layout = ProfileLayout(tuple(dims) if dims is not None else (1,) * N)
    if layout.N != N:
        raise ValidationError(f"dims lists {layout.N} players for N={N}")
    n = layout.n

    rng = np.random.default_rng(seed)
    Q = ortho_group.rvs(n, random_state=rng)
    spectrum = np.linspace(1.0, conditioning, n)
    A = Q @ np.diag(spectrum) @ Q.T
    A = 0.5 * (A + A.T)
    r = rng.standard_normal(n)
    return GameSpec(
        name="synthetic",
        layout=layout,
        model=QuadraticGame(A=A, r=r),
        mu=1.0,
        theta=float(conditioning),
        params={"N": N, "dims": list(layout.dims), "conditioning": conditioning, "seed": seed},
    )


# -------------------------------------------------------------------------
# Registry
# -------------------------------------------------------------------------

def _sensor(params: Dict[str, Any]) -> Scenario:
    p = SensorParams(**params)
    game = sensor_network_game(p)
    return Scenario(
        name="sensor",
        game=game,
        exosystems=tuple(sensor_disturbances(p.disturbance, p)),
        x0=np.zeros(game.n),
        params=p,
    )


def _osnr(params: Dict[str, Any]) -> Scenario:
    p = OsnrParams(**params)
    return Scenario(
        name="osnr",
        game=osnr_game(p),
        exosystems=tuple(osnr_pilot_exosystems(p)),
        x0=p.initial_powers(),
        time_scale=p.time_scale,
        params=p,
    )


def _synthetic(params: Dict[str, Any]) -> Scenario:
    p = SyntheticParams(**params)
    game = synthetic_quadratic(p.N, p.dims, p.conditioning, p.seed)
    return Scenario(
        name="synthetic",
        game=game,
        exosystems=tuple(no_disturbance(n_i) for n_i in game.dims),
        x0=np.zeros(game.n),
        params=p,
    )


SCENARIOS = {
    "sensor": _sensor,
    "osnr": _osnr,
    "synthetic": _synthetic,
}


def get_scenario(name: str, params: Optional[Dict[str, Any]] = None) -> Scenario:
    """Build a registered scenario from its JSON parameters."""
    if name not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario '{name}' (available: {', '.join(sorted(SCENARIOS))})")
    return SCENARIOS[name](params or {})
