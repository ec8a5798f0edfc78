"""
Tests for the integrators and the convergence metrics.
"""

import numpy as np
import pytest

from neflow.core.errors import IntegrationError
from neflow.models.experiment import SimConfig
from neflow.services.simulation import integrate, tail_is_monotone, tail_oscillation, time_to_tol

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _rotation(t, z):
    return ROTATION @ z


def _exact_rotation(t, z0):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, s], [-s, c]]) @ z0


def test_rk4_order_factor():
    """Halving dt shrinks the global error by about 2^4."""
    z0 = np.array([1.0, 0.0])
    errors = []
    for dt in (0.1, 0.05):
        _, samples = integrate(_rotation, z0, SimConfig(t_end=1.0, dt=dt, record_every=1))
        errors.append(np.linalg.norm(samples[-1] - _exact_rotation(1.0, z0)))
    assert 14.0 <= errors[0] / errors[1] <= 18.0


def test_rk4_grid_ends_at_t_end():
    times, samples = integrate(_rotation, np.array([1.0, 0.0]), SimConfig(t_end=1.0, dt=0.3, record_every=1))
    np.testing.assert_allclose(times, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert samples.shape == (5, 2)


def test_rk4_records_every_k_steps():
    times, _ = integrate(_rotation, np.array([1.0, 0.0]), SimConfig(t_end=1.0, dt=0.01, record_every=10))
    assert len(times) == 11
    assert times[-1] == pytest.approx(1.0)


def test_rk45_matches_exact_solution():
    z0 = np.array([1.0, 0.0])
    config = SimConfig(t_end=5.0, dt=0.01, method="rk45", rtol=1e-10, atol=1e-12, record_every=50)
    times, samples = integrate(_rotation, z0, config)
    np.testing.assert_allclose(times, np.linspace(0.0, 5.0, 11), atol=1e-12)
    for t, z in zip(times, samples):
        np.testing.assert_allclose(z, _exact_rotation(t, z0), atol=1e-8)


def test_rk45_and_rk4_share_the_recording_grid():
    z0 = np.array([0.0, 1.0])
    rk4_times, _ = integrate(_rotation, z0, SimConfig(t_end=2.0, dt=0.01, record_every=20))
    rk45_times, _ = integrate(_rotation, z0, SimConfig(t_end=2.0, dt=0.01, record_every=20, method="rk45"))
    np.testing.assert_allclose(rk4_times, rk45_times, atol=1e-12)


def test_blow_up_raises_with_time_stamp():
    """z' = z^2 from z(0) = 1 leaves every finite range at t = 1."""
    with pytest.raises(IntegrationError) as excinfo:
        with np.errstate(over="ignore", invalid="ignore"):
            integrate(lambda t, z: z ** 2, np.array([1.0]), SimConfig(t_end=2.0, dt=0.01))
    assert 0.9 < excinfo.value.time <= 1.1
    assert np.all(np.isfinite(excinfo.value.last_state))


def test_step_budget_is_enforced():
    with pytest.raises(IntegrationError):
        integrate(_rotation, np.array([1.0, 0.0]), SimConfig(t_end=10.0, dt=0.01, max_steps=100))


def test_time_to_tol_uses_last_crossing():
    times = np.arange(6.0)
    values = np.array([1.0, 0.5, 0.005, 0.02, 0.001, 0.0005])
    assert time_to_tol(times, values, 0.01) == 4.0
    assert time_to_tol(times, values, 2.0) == 0.0
    assert time_to_tol(times, values, 1e-4) is None


def test_tail_oscillation_of_a_sinusoid():
    times = np.linspace(0.0, 100.0, 20001)
    values = np.sin(times)
    assert tail_oscillation(times, values) == pytest.approx(2.0, abs=1e-3)
    assert tail_oscillation(times, np.exp(-times)) < 1e-8
    assert tail_is_monotone(times, np.exp(-times))
    assert not tail_is_monotone(times, values)


def test_tail_oscillation_takes_worst_column():
    times = np.linspace(0.0, 10.0, 101)
    values = np.column_stack([np.zeros(101), np.where(times > 9.0, 3.0, 0.0)])
    assert tail_oscillation(times, values) == pytest.approx(3.0)
