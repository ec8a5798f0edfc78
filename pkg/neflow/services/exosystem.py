"""
Exosystem service: disturbance generators, validity certificates and
observer gain design (pole placement on the dual pair).
"""

import logging
from dataclasses import replace
from typing import List, Optional, Sequence

import networkx as nx
import numpy as np
from scipy import linalg, signal
from scipy.optimize import linear_sum_assignment

from neflow.core.errors import ObservabilityError, ValidationError
from neflow.models.exosystem import ExoCertificate, ExoModel, Exosystem
from neflow.services.simulation import rk4_step

logger = logging.getLogger(__name__)

# Real parts within this of zero count as the imaginary axis
MARGINAL_TOL = 1e-9
# Rank threshold for geometric multiplicity and observability
RANK_TOL = 1e-8
# Placed spectrum must match the request to this tolerance
PLACEMENT_TOL = 1e-6


# -------------------------------------------------------------------------
# Generators
# -------------------------------------------------------------------------

def constant_disturbance(value: Sequence[float]) -> Exosystem:
    """d(t) = value: S = 0, D = I, w0 = value."""
    value = np.atleast_1d(np.asarray(value, dtype=float))
    n = value.shape[0]
    return Exosystem(
        S=np.zeros((n, n)),
        D=np.eye(n),
        w0=value.copy(),
        kind="constant",
        params={"value": value.tolist()},
    )


def no_disturbance(n: int) -> Exosystem:
    """Empty generator (q = 0): no disturbance channel and no internal model."""
    return Exosystem(S=np.zeros((0, 0)), D=np.zeros((n, 0)), w0=np.zeros(0), kind="none")


def biased_sinusoid(
    bias: float,
    amplitude: float,
    frequency_hz: float,
    dim: int = 1,
    axis: int = 0,
) -> Exosystem:
    """
    d(t) = bias + amplitude * sin(2 pi f t) on component `axis` of an n = dim action.

    q = 3: S = blkdiag(0, [[0, w], [-w, 0]]), D = [1, 1, 0], w0 = (bias, 0, amplitude).
    """
    if frequency_hz <= 0:
        raise ValidationError(f"frequency must be positive, got {frequency_hz}")
    if not 0 <= axis < dim:
        raise ValidationError(f"axis {axis} out of range for dim {dim}")
    omega = 2.0 * np.pi * frequency_hz
    S = np.zeros((3, 3))
    S[1, 2] = omega
    S[2, 1] = -omega
    D = np.zeros((dim, 3))
    D[axis, :] = [1.0, 1.0, 0.0]
    return Exosystem(
        S=S,
        D=D,
        w0=np.array([bias, 0.0, amplitude]),
        kind="biased_sinusoid",
        params={"bias": bias, "amplitude": amplitude, "frequency_hz": frequency_hz, "dim": dim, "axis": axis},
    )


def custom_exosystem(S, D, w0) -> Exosystem:
    return Exosystem(S=np.asarray(S, dtype=float), D=np.asarray(D, dtype=float), w0=np.asarray(w0, dtype=float))


def agent_model(exo: Exosystem) -> ExoModel:
    """The part of the generator an agent may use: (S, D, K) but never w0."""
    if exo.K is None:
        raise ValidationError("exosystem has no observer gain; call design_observer_gain first")
    return ExoModel(S=exo.S, D=exo.D, K=exo.K)


# -------------------------------------------------------------------------
# Evaluation
# -------------------------------------------------------------------------

def _rotation_blocks(S: np.ndarray) -> Optional[List[tuple]]:
    """
    Split S into diagonal blocks of 1x1 zeros and 2x2 rotations [[0, w], [-w, 0]].
    Returns [(start, size, omega)] or None when S has another structure.
    """
    q = S.shape[0]
    blocks = []
    k = 0
    while k < q:
        if k + 1 < q and S[k, k + 1] != 0:
            omega = S[k, k + 1]
            block = S[k:k + 2, k:k + 2]
            if not np.allclose(block, [[0, omega], [-omega, 0]]):
                return None
            blocks.append((k, 2, float(omega)))
            k += 2
        else:
            if S[k, k] != 0:
                return None
            blocks.append((k, 1, 0.0))
            k += 1
    # off-block entries must vanish
    mask = np.ones_like(S, dtype=bool)
    for start, size, _ in blocks:
        mask[start:start + size, start:start + size] = False
    if np.any(S[mask] != 0):
        return None
    return blocks


def exo_state_at(exo: Exosystem, t: float, method: str = "closed_form", steps_per_unit: int = 1000) -> np.ndarray:
    """w(t) = exp(S t) w0."""
    if exo.q == 0:
        return np.zeros(0)

    if method == "closed_form":
        blocks = _rotation_blocks(exo.S)
        if blocks is None:
            method = "expm"
        else:
            w = exo.w0.copy()
            for start, size, omega in blocks:
                if size == 2:
                    c, s = np.cos(omega * t), np.sin(omega * t)
                    a, b = exo.w0[start], exo.w0[start + 1]
                    w[start] = c * a + s * b
                    w[start + 1] = -s * a + c * b
            return w

    if method == "expm":
        return linalg.expm(exo.S * t) @ exo.w0

    if method == "rk4":
        steps = max(1, int(np.ceil(abs(t) * steps_per_unit)))
        h = t / steps
        w = exo.w0.copy()
        f = lambda _t, z: exo.S @ z
        for k in range(steps):
            w = rk4_step(f, k * h, w, h)
        return w

    raise ValidationError(f"unknown evaluation method '{method}'")


def disturbance_at(exo: Exosystem, t: float, method: str = "closed_form") -> np.ndarray:
    """d(t) = D exp(S t) w0."""
    if exo.q == 0:
        return np.zeros(exo.n)
    return exo.D @ exo_state_at(exo, t, method=method)


# -------------------------------------------------------------------------
# Certificates
# -------------------------------------------------------------------------

def observability_matrix(S: np.ndarray, D: np.ndarray) -> np.ndarray:
    """[D; D S; ...; D S^{q-1}]."""
    q = S.shape[0]
    rows = [D]
    for _ in range(1, q):
        rows.append(rows[-1] @ S)
    return np.vstack(rows) if rows else np.zeros((0, q))


def _is_marginally_stable(S: np.ndarray) -> bool:
    """Every eigenvalue on the imaginary axis and semisimple."""
    q = S.shape[0]
    if q == 0:
        return True
    eigenvalues = np.linalg.eigvals(S)
    if np.any(np.abs(eigenvalues.real) > MARGINAL_TOL):
        return False

    # cluster eigenvalues, then compare algebraic and geometric multiplicity
    remaining = list(eigenvalues)
    while remaining:
        lam = remaining[0]
        cluster = [e for e in remaining if abs(e - lam) < RANK_TOL ** 0.5]
        remaining = [e for e in remaining if abs(e - lam) >= RANK_TOL ** 0.5]
        algebraic = len(cluster)
        singular_values = np.linalg.svd(S - lam * np.eye(q), compute_uv=False)
        geometric = int(np.sum(singular_values < RANK_TOL))
        if geometric < algebraic:
            return False
    return True


def validate(exo: Exosystem) -> ExoCertificate:
    """Marginal stability (with semisimplicity) and observability flags."""
    q = exo.q
    rank = int(np.linalg.matrix_rank(observability_matrix(exo.S, exo.D), tol=RANK_TOL)) if q else 0
    observer_stable = None
    if exo.K is not None:
        observer_stable = q == 0 or bool(np.linalg.eigvals(exo.S - exo.K @ exo.D).real.max() < 0)
    return ExoCertificate(
        marginally_stable=_is_marginally_stable(exo.S),
        observable=rank == q,
        observer_stable=observer_stable,
        observability_rank=rank,
        q=q,
    )


# -------------------------------------------------------------------------
# Observer gain design
# -------------------------------------------------------------------------

def default_poles(q: int) -> List[complex]:
    """{-1, -2, ..., -q}."""
    return [-(k + 1.0) for k in range(q)]


def _conjugate_closed(poles: Sequence[complex]) -> bool:
    poles = np.asarray(poles, dtype=complex)
    if poles.size == 0:
        return True
    cost = np.abs(poles[:, None] - np.conj(poles)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return bool(cost[rows, cols].max() < PLACEMENT_TOL)


def spectrum_mismatch(placed: Sequence[complex], desired: Sequence[complex]) -> float:
    """Largest distance in the best one-to-one matching of two spectra."""
    placed = np.asarray(placed, dtype=complex)
    desired = np.asarray(desired, dtype=complex)
    if placed.size == 0:
        return 0.0
    cost = np.abs(placed[:, None] - desired[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def _output_blocks(S: np.ndarray, D: np.ndarray) -> List[tuple]:
    """
    Decouple (S, D) into independent (states, outputs) blocks: connected components
    of the graph joining states coupled through S and states read by the same output.
    """
    q, m = S.shape[0], D.shape[0]
    g = np.zeros((q + m, q + m), dtype=bool)
    g[:q, :q] = (S != 0) | (S.T != 0)
    g[q:, :q] = D != 0
    g[:q, q:] = (D != 0).T

    blocks = []
    for members in nx.connected_components(nx.from_numpy_array(g.astype(int))):
        states = sorted(k for k in members if k < q)
        if not states:
            continue
        outputs = sorted(k - q for k in members if k >= q)
        blocks.append((states, outputs))
    return sorted(blocks, key=lambda block: block[0][0])


def ackermann(A: np.ndarray, B: np.ndarray, poles: Sequence[complex]) -> np.ndarray:
    """Single-input Ackermann formula: row gain L with eig(A - B L) = poles."""
    q = A.shape[0]
    ctrb = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(q)])
    if np.linalg.matrix_rank(ctrb, tol=RANK_TOL) != q:
        raise ObservabilityError("block is not observable", int(np.linalg.matrix_rank(ctrb, tol=RANK_TOL)), q)
    p = np.real(np.poly(poles))
    # Horner evaluation of p(A)
    pmat = np.zeros_like(A)
    for coeff in p:
        pmat = pmat @ A + coeff * np.eye(q)
    return np.linalg.solve(ctrb, pmat)[-1, :]


def design_observer_gain(exo: Exosystem, desired_poles: Optional[Sequence[complex]] = None) -> np.ndarray:
    """
    Observer gain K (q x n) with eig(S - K D) = desired_poles.

    Poles are assigned in order to the decoupled (states, outputs) blocks of
    (S, D); single-output blocks use Ackermann on (S', D'), multi-output blocks
    scipy's place_poles on the same dual pair.
    """
    q, n = exo.q, exo.n
    if q == 0:
        return np.zeros((0, n))

    poles = default_poles(q) if desired_poles is None else [complex(p) for p in desired_poles]
    if len(poles) != q:
        raise ValidationError(f"need {q} poles for a {q}-dimensional exosystem, got {len(poles)}")
    if any(p.real >= 0 for p in poles):
        raise ValidationError("observer poles must have negative real part")
    if not _conjugate_closed(poles):
        raise ValidationError("observer poles must be closed under conjugation")

    rank = int(np.linalg.matrix_rank(observability_matrix(exo.S, exo.D), tol=RANK_TOL))
    if rank != q:
        raise ObservabilityError("(D, S) is not observable", rank, q)

    K = np.zeros((q, n))
    cursor = 0
    for states, outputs in _output_blocks(exo.S, exo.D):
        chunk = poles[cursor:cursor + len(states)]
        cursor += len(states)
        if not _conjugate_closed(chunk):
            raise ValidationError(
                f"poles {chunk} assigned to states {states} are not closed under conjugation; reorder the pole list"
            )
        S_b = exo.S[np.ix_(states, states)]
        D_b = exo.D[np.ix_(outputs, states)]
        if len(outputs) == 1:
            L = ackermann(S_b.T, D_b.T, chunk).reshape(1, -1)
        else:
            L = signal.place_poles(S_b.T, D_b.T, np.asarray(chunk)).gain_matrix
        K[np.ix_(states, outputs)] = L.T

    placed = np.linalg.eigvals(exo.S - K @ exo.D)
    mismatch = spectrum_mismatch(placed, poles)
    if mismatch > PLACEMENT_TOL:
        raise ValidationError(f"pole placement missed the requested spectrum by {mismatch:.3e}")
    logger.debug("placed observer poles %s (mismatch %.2e)", np.round(placed, 6), mismatch)
    return K


def with_gain(exo: Exosystem, K: Optional[np.ndarray] = None, desired_poles: Optional[Sequence[complex]] = None) -> Exosystem:
    """Copy of exo with K set (designed from desired_poles when K is None)."""
    if K is None:
        K = design_observer_gain(exo, desired_poles)
    return replace(exo, K=np.asarray(K, dtype=float))
