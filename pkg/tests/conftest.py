"""
Pytest fixtures shared by the neflow test suite.
"""

import pytest

from neflow.config import get_settings
from neflow.models.experiment import ExperimentConfig
from neflow.services.network import complete_graph, random_connected_graph
from neflow.services.scenarios import sensor_disturbances, sensor_network_game


@pytest.fixture(autouse=True)
def fresh_settings():
    """Drop cached settings so env overrides in one test never leak into the next."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    """Point NEFLOW_OUT at a temporary directory."""
    out = tmp_path / "runs"
    monkeypatch.setenv("NEFLOW_OUT", str(out))
    get_settings.cache_clear()
    return out


@pytest.fixture(scope="session")
def sensor_game():
    """The five-robot sensor network game."""
    return sensor_network_game()


@pytest.fixture(scope="session")
def seed7_graph():
    """Random connected 5-graph used by the sensor runs."""
    return random_connected_graph(5, 0.5, seed=7)


@pytest.fixture(scope="session")
def complete5():
    return complete_graph(5)


@pytest.fixture
def constant_pushes():
    """d_i = (0.5, 0) on every robot."""
    return sensor_disturbances("constant")


@pytest.fixture
def make_config():
    """Build a validated ExperimentConfig from section overrides."""

    def _make(**sections) -> ExperimentConfig:
        data = {
            "name": "test_run",
            "scenario": {"name": "sensor"},
            "law": {"variant": "GradientPlayFull"},
            "sim": {"t_end": 1.0, "dt": 0.01, "record_every": 10},
        }
        data.update(sections)
        return ExperimentConfig.model_validate(data)

    return _make
