"""
Tests for graph construction, Laplacian facts and the sufficient condition.
"""

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import settings as hyp_settings
from hypothesis import strategies as st

from neflow.core.errors import GraphError, ValidationError
from neflow.services.network import (
    build_graph,
    check_condition,
    complete_graph,
    laplacian_quadratic_form,
    laplacian_sums,
    neighbor_lists,
    path_graph,
    random_connected_graph,
    required_lambda2,
    ring_graph,
)


def test_check_condition_sensor_constants():
    report = check_condition(2.0, 12.0, 5.0)
    assert not report.holds
    assert report.margin == pytest.approx(-158.0)


def test_check_condition_holds_above_threshold():
    report = check_condition(1.0, 1.0, 2.6158)
    assert report.holds
    assert report.margin == pytest.approx(0.6158)


def test_required_lambda2_is_the_zero_margin_point():
    l2 = required_lambda2(2.0, 12.0)
    assert l2 == pytest.approx(84.0)
    assert check_condition(2.0, 12.0, l2).margin == pytest.approx(0.0, abs=1e-9)
    assert not check_condition(2.0, 12.0, l2).holds


def test_complete_graph_spectrum():
    graph = complete_graph(5)
    assert graph.connected
    assert graph.lambda2 == pytest.approx(5.0)
    assert graph.lambda_max == pytest.approx(5.0)
    np.testing.assert_array_equal(graph.degrees, np.full(5, 4.0))


def test_three_vertex_path_laplacian():
    graph = path_graph(3)
    np.testing.assert_array_equal(graph.laplacian, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    np.testing.assert_allclose(np.linalg.eigvalsh(graph.laplacian), [0.0, 1.0, 3.0], atol=1e-12)
    assert graph.lambda2 == pytest.approx(1.0)


def test_path_and_ring_graphs():
    assert path_graph(4).lambda2 == pytest.approx(2 - np.sqrt(2))
    assert ring_graph(6).lambda2 == pytest.approx(1.0)


@pytest.mark.parametrize("adjacency", [
    [[0, 1], [0, 0]],
    [[1, 1], [1, 0]],
    [[0, 2], [2, 0]],
    [[0, 1, 0]],
])
def test_build_graph_rejects_malformed_adjacency(adjacency):
    with pytest.raises(ValidationError):
        build_graph(adjacency)


def test_disconnected_graph_has_zero_lambda2():
    A = np.zeros((4, 4))
    A[0, 1] = A[1, 0] = 1
    A[2, 3] = A[3, 2] = 1
    graph = build_graph(A)
    assert not graph.connected
    assert graph.lambda2 == 0.0


def test_random_graph_is_seeded_and_connected():
    first = random_connected_graph(5, 0.5, seed=7)
    second = random_connected_graph(5, 0.5, seed=7)
    assert first.connected
    assert first.seed == 7
    # agent 0 has a single neighbour in this draw
    assert first.lambda2 == pytest.approx(1.0)
    np.testing.assert_array_equal(first.adjacency, second.adjacency)


def test_random_graph_gives_up_after_max_draws():
    with pytest.raises(GraphError):
        random_connected_graph(12, 0.01, seed=0, max_draws=3)


def test_laplacian_sums_match_laplacian(seed7_graph):
    """Neighbor-list sums equal (L (x) I) applied to the stacked blocks."""
    rng = np.random.default_rng(1)
    blocks = rng.standard_normal((5, 10))
    np.testing.assert_allclose(laplacian_sums(seed7_graph, blocks), seed7_graph.laplacian @ blocks, atol=1e-12)
    for i, nbrs in enumerate(neighbor_lists(seed7_graph)):
        np.testing.assert_array_equal(nbrs, np.flatnonzero(seed7_graph.adjacency[i]))


@given(st.lists(st.floats(-10.0, 10.0), min_size=5, max_size=5))
@hyp_settings(max_examples=100, deadline=None)
def test_laplacian_quadratic_form_bounds(values):
    """lambda2 |y|^2 <= y'Ly <= lambda_max |y|^2 on zero-sum vectors."""
    graph = random_connected_graph(5, 0.5, seed=7)
    y = np.array(values)
    y = y - y.mean()
    norm2 = float(y @ y)
    assume(norm2 > 1e-6)
    form = laplacian_quadratic_form(graph, y)
    assert form >= graph.lambda2 * norm2 - 1e-9
    assert form <= graph.lambda_max * norm2 + 1e-9


@given(st.integers(2, 12), st.floats(0.0, 1.0), st.integers(0, 2**31 - 1))
@hyp_settings(max_examples=60, deadline=None)
def test_laplacian_annihilates_ones_and_is_psd(N, p, seed):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((N, N)) < p, k=1)
    graph = build_graph((upper | upper.T).astype(int))
    np.testing.assert_allclose(graph.laplacian @ np.ones(N), 0.0, atol=1e-12)
    np.testing.assert_allclose(graph.laplacian, graph.laplacian.T)
    assert np.linalg.eigvalsh(graph.laplacian).min() >= -1e-9
    assert graph.lambda2 >= 0.0


@given(
    st.floats(0.1, 10.0),
    st.floats(0.1, 20.0),
    st.floats(0.0, 500.0),
    st.floats(0.0, 500.0),
)
@hyp_settings(max_examples=200, deadline=None)
def test_check_condition_is_monotone_in_lambda2(mu, theta, a, b):
    """A better-connected graph never loses the condition."""
    low, high = sorted((a, b))
    weak, strong = check_condition(mu, theta, low), check_condition(mu, theta, high)
    assert strong.margin >= weak.margin
    assert strong.holds or not weak.holds
