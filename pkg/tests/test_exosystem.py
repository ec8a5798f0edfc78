"""
Tests for disturbance generators, certificates and observer gain design.
"""

import numpy as np
import pytest

from neflow.core.errors import ObservabilityError, ValidationError
from neflow.services.exosystem import (
    agent_model,
    biased_sinusoid,
    constant_disturbance,
    custom_exosystem,
    default_poles,
    design_observer_gain,
    disturbance_at,
    no_disturbance,
    validate,
    with_gain,
)
from neflow.services.exosystem import _output_blocks


def _placed(exo, K):
    return np.sort_complex(np.linalg.eigvals(exo.S - K @ exo.D))


def test_constant_disturbance_is_constant():
    exo = constant_disturbance([0.5, 0.0])
    assert exo.q == 2
    for t in (0.0, 1.0, 37.5):
        np.testing.assert_allclose(disturbance_at(exo, t), [0.5, 0.0])


@pytest.mark.parametrize("method", ["closed_form", "expm", "rk4"])
def test_biased_sinusoid_evaluation(method):
    exo = biased_sinusoid(0.5, 0.5, 1.0 / (2 * np.pi), dim=2, axis=0)
    for t in (0.0, 0.7, 3.0):
        expected = [0.5 + 0.5 * np.sin(t), 0.0]
        np.testing.assert_allclose(disturbance_at(exo, t, method=method), expected, atol=1e-8)


def test_unknown_evaluation_method():
    with pytest.raises(ValidationError):
        disturbance_at(biased_sinusoid(0.0, 1.0, 1.0), 1.0, method="euler")


def test_standard_generators_are_valid():
    for exo in (constant_disturbance([1.0]), biased_sinusoid(1.0, 0.2, 3.0), no_disturbance(2)):
        cert = validate(exo)
        assert cert.marginally_stable
        assert cert.observable


def test_jordan_block_is_not_marginally_stable():
    exo = custom_exosystem([[0.0, 1.0], [0.0, 0.0]], [[1.0, 0.0]], [0.0, 1.0])
    cert = validate(exo)
    assert not cert.marginally_stable
    assert cert.observable


def test_unobservable_generator_is_reported_and_rejected():
    S = np.zeros((3, 3))
    S[1, 2], S[2, 1] = 1.0, -1.0
    exo = custom_exosystem(S, [[1.0, 0.0, 0.0]], [1.0, 0.0, 1.0])
    cert = validate(exo)
    assert not cert.observable
    assert cert.observability_rank == 1
    with pytest.raises(ObservabilityError):
        design_observer_gain(exo)


def test_constant_2d_with_unit_poles_gives_identity_gain():
    exo = constant_disturbance([0.5, 0.0])
    np.testing.assert_allclose(design_observer_gain(exo, [-1.0, -1.0]), np.eye(2), atol=1e-12)


@pytest.mark.parametrize("exo, poles", [
    (constant_disturbance([0.5, 0.0]), None),
    (constant_disturbance([0.5, -1.0, 2.0]), [-1.0, -2.0, -3.0]),
    (biased_sinusoid(0.5, 0.5, 1.0 / (2 * np.pi), dim=2), [-1.0, -2.0, -3.0]),
    (biased_sinusoid(5.0, 0.5, 1.0), [-2.0, -1.0 + 1.0j, -1.0 - 1.0j]),
    (biased_sinusoid(5.0, 5.0, 10.0), None),
])
def test_pole_placement_round_trip(exo, poles):
    """eig(S - K D) matches the requested poles."""
    K = design_observer_gain(exo, poles)
    requested = default_poles(exo.q) if poles is None else poles
    np.testing.assert_allclose(_placed(exo, K), np.sort_complex(np.asarray(requested, dtype=complex)), atol=1e-6)


def test_multi_output_block_uses_place_poles():
    """Two outputs read the same rotation: the block is placed jointly."""
    S = np.array([[0.0, 2.0], [-2.0, 0.0]])
    D = np.eye(2)
    exo = custom_exosystem(S, D, [1.0, 0.0])
    K = design_observer_gain(exo, [-1.0, -2.0])
    np.testing.assert_allclose(_placed(exo, K), [-2.0, -1.0], atol=1e-6)


@pytest.mark.parametrize("poles", [
    [-1.0],
    [-1.0, 0.5, -2.0],
    [-1.0, -1.0 + 1.0j, -2.0],
])
def test_invalid_pole_requests(poles):
    with pytest.raises(ValidationError):
        design_observer_gain(biased_sinusoid(1.0, 1.0, 1.0), poles)


def test_with_gain_rejects_destabilizing_gain():
    exo = constant_disturbance([1.0])
    with pytest.raises(ValidationError):
        with_gain(exo, K=np.array([[-1.0]]))


def test_agent_model_hides_initial_state():
    exo = with_gain(constant_disturbance([0.5, 0.0]))
    model = agent_model(exo)
    assert model.q == 2
    assert not hasattr(model, "w0")
    np.testing.assert_array_equal(model.K, exo.K)


def test_agent_model_requires_gain():
    with pytest.raises(ValidationError):
        agent_model(constant_disturbance([1.0]))


def test_empty_generator_has_empty_gain():
    K = design_observer_gain(no_disturbance(3))
    assert K.shape == (0, 3)


def test_output_blocks_split_decoupled_channels():
    """A bias read by output 0 and an oscillator read by output 1 form two blocks."""
    S = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    D = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    assert _output_blocks(S, D) == [([0], [0]), ([1, 2], [1])]
    # an output row that reads a second state joins both channels
    D_coupled = np.array([[1.0, 1.0, 0.0]])
    assert _output_blocks(S, D_coupled) == [([0, 1, 2], [0])]

    exo = custom_exosystem(S, D, [0.5, 0.0, 1.0])
    K = design_observer_gain(exo, [-1.0, -2.0, -3.0])
    np.testing.assert_allclose(_placed(exo, K), [-3.0, -2.0, -1.0], atol=1e-8)
    assert K[0, 1] == 0.0 and K[1, 0] == 0.0 and K[2, 0] == 0.0
