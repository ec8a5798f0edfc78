"""
Network service: graph construction, Laplacian spectrum, and the sufficient
condition for convergence under partial-decision information.
"""

import logging
from typing import Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from neflow.config import get_settings
from neflow.core.errors import GraphError, ValidationError
from neflow.models.graph import ConditionReport, GraphSpec

logger = logging.getLogger(__name__)

# Eigenvalues below this are treated as zero
SPECTRAL_ZERO = 1e-9


def build_graph(adjacency: Sequence[Sequence[float]], seed: Optional[int] = None) -> GraphSpec:
    """
    Build a GraphSpec from a symmetric 0/1 adjacency matrix with zero diagonal.
    The Laplacian is L = diag(A 1) - A; lambda2 comes from a full symmetric eigensolve.
    """
    A = np.asarray(adjacency, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"adjacency must be square, got shape {A.shape}")
    if A.shape[0] < 2:
        raise ValidationError("a communication graph needs at least 2 vertices")
    if not np.all((A == 0) | (A == 1)):
        raise ValidationError("adjacency entries must be 0 or 1 (unweighted graph)")
    if np.any(np.diag(A) != 0):
        raise ValidationError("adjacency must have a zero diagonal (no self-loops)")
    if not np.array_equal(A, A.T):
        raise ValidationError("adjacency must be symmetric (undirected graph)")

    L = np.diag(A.sum(axis=1)) - A
    eigenvalues = np.linalg.eigvalsh(L)
    lambda2 = float(eigenvalues[1])
    if abs(lambda2) < SPECTRAL_ZERO:
        lambda2 = 0.0

    # BFS pass must agree with the spectral test
    connected = nx.is_connected(nx.from_numpy_array(A))
    if connected != (lambda2 > 0):
        raise GraphError(
            f"spectral and BFS connectivity disagree (lambda2={lambda2:.3e}, bfs={connected})"
        )

    neighbors = tuple(np.flatnonzero(A[i]) for i in range(A.shape[0]))
    return GraphSpec(
        adjacency=A,
        laplacian=L,
        lambda2=lambda2,
        lambda_max=float(eigenvalues[-1]),
        connected=connected,
        neighbors=neighbors,
        seed=seed,
    )


def complete_graph(N: int) -> GraphSpec:
    """K_N."""
    return build_graph(np.ones((N, N)) - np.eye(N))


def path_graph(N: int) -> GraphSpec:
    return build_graph(nx.to_numpy_array(nx.path_graph(N)))


def ring_graph(N: int) -> GraphSpec:
    return build_graph(nx.to_numpy_array(nx.cycle_graph(N)))


def random_connected_graph(
    N: int,
    edge_probability: float,
    seed: int = 0,
    max_draws: Optional[int] = None,
) -> GraphSpec:
    """
    Erdos-Renyi G(N, p) draws from a seeded stream, resampled until connected.
    """
    if N < 2:
        raise ValidationError("random graphs need N >= 2")
    if not 0 < edge_probability <= 1:
        raise ValidationError(f"edge probability must be in (0, 1], got {edge_probability}")
    max_draws = get_settings().max_graph_draws if max_draws is None else max_draws

    rng = np.random.default_rng(seed)
    for draw in range(max_draws):
        g = nx.gnp_random_graph(N, edge_probability, seed=int(rng.integers(2**32)))
        if nx.is_connected(g):
            logger.debug("connected draw after %d rejections", draw)
            A = nx.to_numpy_array(g, nodelist=range(N))
            return build_graph(A, seed=seed)

    raise GraphError(
        f"{max_draws} consecutive disconnected draws for N={N}, p={edge_probability}; "
        "use a larger edge probability"
    )


def neighbor_lists(graph: GraphSpec) -> Tuple[np.ndarray, ...]:
    """N_i for every agent, as index arrays."""
    return graph.neighbors


def laplacian_sums(graph: GraphSpec, blocks: np.ndarray) -> np.ndarray:
    """
    Row i is sum_{j in N_i} (blocks[i] - blocks[j]), computed from agent i's
    neighbor list only. `blocks` is N x n (one estimate vector per agent).
    """
    out = np.empty_like(blocks)
    for i, nbrs in enumerate(graph.neighbors):
        out[i] = nbrs.size * blocks[i] - blocks[nbrs].sum(axis=0)
    return out


def check_condition(mu: float, theta: float, lambda2: float) -> ConditionReport:
    """Sufficient condition mu (lambda2 - theta) > theta^2 (strict)."""
    margin = mu * (lambda2 - theta) - theta ** 2
    return ConditionReport(
        mu=float(mu),
        theta=float(theta),
        lambda2=float(lambda2),
        margin=float(margin),
        holds=bool(margin > 0),
    )


def required_lambda2(mu: float, theta: float) -> float:
    """Smallest algebraic connectivity for which the sufficient condition holds (exclusive)."""
    return theta + theta ** 2 / mu


def laplacian_quadratic_form(graph: GraphSpec, y: np.ndarray) -> float:
    """y' L y."""
    y = np.asarray(y, dtype=float)
    return float(y @ graph.laplacian @ y)
