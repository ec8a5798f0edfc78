"""
Tests for the scenario constructors and their registry.
"""

import numpy as np
import pydantic
import pytest

from neflow.core.errors import ConfigurationError, DomainError
from neflow.models.scenario import OsnrParams, SensorParams
from neflow.services.exosystem import disturbance_at
from neflow.services.game import pseudo_gradient, solve_ne
from neflow.services.scenarios import (
    get_scenario,
    osnr_game,
    osnr_pilot_exosystems,
    osnr_value,
    sensor_disturbances,
    synthetic_quadratic,
)


def test_sensor_disturbed_plateau(sensor_game):
    """Without rejection the profile settles where F(x) = d: x* shifted by (0.25, 0)."""
    d = np.tile([0.5, 0.0], 5)
    A, r = sensor_game.model.A, sensor_game.model.r
    x_d = np.linalg.solve(A, d - r)
    x_star = solve_ne(sensor_game)
    np.testing.assert_allclose(x_d - x_star, np.tile([0.25, 0.0], 5), atol=1e-12)
    assert np.linalg.norm(x_d - x_star) == pytest.approx(0.559017, abs=1e-6)


def test_sensor_sinusoid_disturbance():
    exos = sensor_disturbances("sinusoid")
    assert len(exos) == 5
    for exo in exos:
        assert exo.q == 3
        np.testing.assert_allclose(disturbance_at(exo, np.pi / 2), [1.0, 0.0], atol=1e-12)


def test_sensor_params_reject_unknown_keys():
    with pytest.raises(pydantic.ValidationError):
        SensorParams(targets=[(0.0, 0.0), (1.0, 1.0)], speed=3)


def test_osnr_constants_are_sampled():
    game = osnr_game()
    assert game.mu > 0
    assert game.theta >= game.mu
    lo, hi = game.certify_box
    np.testing.assert_allclose(hi, np.full(10, 0.45))


def test_osnr_gradient_outside_domain():
    game = osnr_game()
    with pytest.raises(DomainError):
        pseudo_gradient(game, np.full(10, 0.6))


def test_osnr_value_formula():
    params = OsnrParams(N=3, n0=0.1, gamma_offdiag=0.5)
    x = np.array([1.0, 0.5, 0.25])
    expected = [1.0 / (0.1 + 0.5 * 0.75), 0.5 / (0.1 + 0.5 * 1.25), 0.25 / (0.1 + 0.5 * 1.5)]
    np.testing.assert_allclose(osnr_value(params, x), expected)
    # recorded rows evaluate row by row
    np.testing.assert_allclose(osnr_value(params, np.vstack([x, x])), [expected, expected])


def test_osnr_pilots_are_rescaled():
    """10 i kHz pilot tones run at i Hz with the default time scale."""
    params = OsnrParams()
    for i, exo in enumerate(osnr_pilot_exosystems(params), start=1):
        assert exo.params["frequency_hz"] == pytest.approx(float(i))
        assert exo.params["bias"] == params.P0
        assert exo.params["amplitude"] == pytest.approx(params.P0 * 0.1 * i)


def test_osnr_default_initial_powers():
    np.testing.assert_allclose(OsnrParams().initial_powers(), np.full(10, 0.125))


def test_osnr_params_validate_shapes():
    with pytest.raises(pydantic.ValidationError):
        OsnrParams(N=3, a=[1.0, 1.0])
    with pytest.raises(pydantic.ValidationError):
        OsnrParams(N=2, x0=[3.0, 3.0])


def test_synthetic_game_is_seeded():
    first = synthetic_quadratic(4, dims=[1, 2, 1, 2], conditioning=2.0, seed=9)
    second = synthetic_quadratic(4, dims=[1, 2, 1, 2], conditioning=2.0, seed=9)
    assert first.dims == (1, 2, 1, 2)
    np.testing.assert_array_equal(first.model.A, second.model.A)
    np.testing.assert_array_equal(first.model.r, second.model.r)


def test_registry_builds_every_scenario():
    for name in ("sensor", "osnr", "synthetic"):
        scenario = get_scenario(name)
        assert scenario.game.name == name
        assert len(scenario.exosystems) == scenario.game.N
        assert scenario.x0.shape == (scenario.game.n,)
    assert get_scenario("osnr").time_scale == 1e4


def test_registry_rejects_unknown_scenario():
    with pytest.raises(ConfigurationError):
        get_scenario("traffic")
