"""
ODE integration and convergence metrics.

integrate() runs classical RK4 at a fixed step or the embedded Dormand-Prince
5(4) pair with step control. The exosystem state is part of the integrated
vector, so adaptive steps see an autonomous system.
"""

import logging
from typing import Callable, Tuple

import numpy as np

from neflow.core.errors import IntegrationError
from neflow.models.experiment import SimConfig

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# Adaptive steps shorter than this fraction of t_end abort the run
MIN_STEP_FRACTION = 1e-14


def rk4_step(f: Rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def dopri_step(f: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    One Dormand-Prince step.

    Returns (y5, error estimate y5 - y4, f(t + h, y5)); the last stage is the
    first stage of the next step.
    """
    k = [k1]
    for stage in range(1, 7):
        increment = sum(a * kj for a, kj in zip(_DP_A[stage], k))
        k.append(f(t + _DP_C[stage] * h, y + h * increment))
    y5 = y + h * sum(b * kj for b, kj in zip(_DP_B5, k) if b)
    error = h * sum((b5 - b4) * kj for b5, b4, kj in zip(_DP_B5, _DP_B4, k))
    return y5, error, k[6]


def _check_finite(y: np.ndarray, t: float, last: np.ndarray) -> None:
    if not np.all(np.isfinite(y)):
        bad = np.flatnonzero(~np.isfinite(y))
        raise IntegrationError(
            f"non-finite state component(s) {bad[:5].tolist()}",
            time=t,
            last_state=last,
        )


def integrate(rhs: Rhs, z0: np.ndarray, config: SimConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate z' = rhs(t, z) from t = 0 to config.t_end.

    Returns (times, samples) recorded every `record_every` steps of size dt,
    always including t = 0 and t_end. The RK4 step is t_end / ceil(t_end / dt)
    so the grid ends exactly at t_end. RK45 steps are clipped to land on the
    same recording grid.
    """
    z = np.asarray(z0, dtype=float).copy()
    _check_finite(z, 0.0, z)
    if config.method == "rk4":
        return _integrate_rk4(rhs, z, config)
    return _integrate_rk45(rhs, z, config)


def _integrate_rk4(rhs: Rhs, z: np.ndarray, config: SimConfig) -> Tuple[np.ndarray, np.ndarray]:
    n_steps = max(1, int(np.ceil(config.t_end / config.dt - 1e-9)))
    if n_steps > config.max_steps:
        raise IntegrationError(f"{n_steps} steps exceed max_steps={config.max_steps}", time=0.0, last_state=z)
    h = config.t_end / n_steps

    times, samples = [0.0], [z.copy()]
    for step in range(1, n_steps + 1):
        t = (step - 1) * h
        z_next = rk4_step(rhs, t, z, h)
        _check_finite(z_next, step * h, z)
        z = z_next
        if step % config.record_every == 0 or step == n_steps:
            times.append(step * h)
            samples.append(z.copy())

    logger.debug("rk4: %d steps of %.3g", n_steps, h)
    return np.array(times), np.array(samples)


def _integrate_rk45(rhs: Rhs, z: np.ndarray, config: SimConfig) -> Tuple[np.ndarray, np.ndarray]:
    spacing = config.dt * config.record_every
    n_records = max(1, int(np.ceil(config.t_end / spacing - 1e-9)))
    grid = np.minimum(np.arange(1, n_records + 1) * spacing, config.t_end)
    min_step = MIN_STEP_FRACTION * config.t_end

    times, samples = [0.0], [z.copy()]
    t, h = 0.0, config.dt
    k1 = rhs(t, z)
    accepted = rejected = 0
    for target in grid:
        while t < target - min_step:
            h_try = min(h, target - t)
            z_new, error, k_last = dopri_step(rhs, t, z, h_try, k1)
            scale = config.atol + config.rtol * np.maximum(np.abs(z), np.abs(z_new))
            err = float(np.sqrt(np.mean((error / scale) ** 2))) if z.size else 0.0

            if not np.isfinite(err):
                err = np.inf
            if err <= 1.0:
                _check_finite(z_new, t + h_try, z)
                t += h_try
                z, k1 = z_new, k_last
                accepted += 1
                if accepted + rejected > config.max_steps:
                    raise IntegrationError(f"more than {config.max_steps} steps", time=t, last_state=z)
            else:
                rejected += 1

            factor = MAX_FACTOR if err == 0 else SAFETY * err ** -0.2
            # an accepted step clipped to the grid keeps the previous size
            if not (h_try < h and err <= 1.0):
                h = h_try * min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if h < min_step:
                raise IntegrationError(f"step size underflow ({h:.3e})", time=t, last_state=z)
        t = float(target)
        times.append(t)
        samples.append(z.copy())

    logger.debug("rk45: %d accepted, %d rejected steps", accepted, rejected)
    return np.array(times), np.array(samples)


# -------------------------------------------------------------------------
# Metrics
# -------------------------------------------------------------------------

def time_to_tol(times: np.ndarray, values: np.ndarray, tol: float) -> float | None:
    """
    First time after which `values` stays below `tol` for the rest of the run,
    or None when the final sample is not below it.
    """
    values = np.asarray(values)
    above = np.flatnonzero(values >= tol)
    if above.size == 0:
        return float(times[0])
    last = above[-1]
    if last == len(values) - 1:
        return None
    return float(times[last + 1])


def tail_window(times: np.ndarray, fraction: float = 0.2) -> np.ndarray:
    """Boolean mask of samples in the final `fraction` of the horizon."""
    t0, t1 = times[0], times[-1]
    return times >= t1 - fraction * (t1 - t0)


def tail_oscillation(times: np.ndarray, values: np.ndarray, fraction: float = 0.2) -> float:
    """Peak-to-peak of `values` over the final `fraction` of the horizon (max over columns)."""
    tail = np.asarray(values)[tail_window(times, fraction)]
    if tail.ndim == 1:
        return float(tail.max() - tail.min())
    return float((tail.max(axis=0) - tail.min(axis=0)).max())


def tail_is_monotone(times: np.ndarray, values: np.ndarray, fraction: float = 0.2, ripple: float = 1e-9) -> bool:
    """Non-increasing over the final fraction, up to `ripple`."""
    tail = np.asarray(values)[tail_window(times, fraction)]
    return bool(np.all(np.diff(tail) <= ripple))
