"""
Dynamics service: vector fields of every agent learning law and the
closed-loop object the simulator integrates.

Partial-information laws read agent i's private estimate block, whose own
slot holds the agent's output (x_i, x_i + b_i v_i or the chain output
gamma_i) and whose other slots hold the estimate state. Laplacian terms are
neighbor sums computed per agent from adjacency lists.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from neflow.core.errors import ConfigurationError, ValidationError
from neflow.models.exosystem import Exosystem
from neflow.models.game import GameSpec, ProfileLayout
from neflow.models.graph import GraphSpec
from neflow.models.law import (
    AgentLaw,
    LawSet,
    LawVariant,
    StackedState,
    StateLayout,
    hurwitz_coefficients,
    is_hurwitz,
    stack_blocks,
)
from neflow.services.exosystem import agent_model, no_disturbance, with_gain
from neflow.services.game import extended_pseudo_gradient, pseudo_gradient
from neflow.services.network import laplacian_sums

logger = logging.getLogger(__name__)

__all__ = [
    "ClosedLoop",
    "embed",
    "hurwitz_coefficients",
    "is_hurwitz",
    "linearize",
    "make_laws",
    "observer_error",
    "rhs_double_int_full_im",
    "rhs_double_int_partial_im",
    "rhs_gradient_play_full",
    "rhs_gradient_play_partial",
    "rhs_multi_int_partial_im",
    "rhs_single_int_full_im",
    "rhs_single_int_partial_im",
    "select_action",
    "select_others",
]


# -------------------------------------------------------------------------
# Selection arithmetic
# -------------------------------------------------------------------------

def _check_block(layout: ProfileLayout, est_block: np.ndarray) -> np.ndarray:
    est_block = np.asarray(est_block, dtype=float)
    if est_block.shape != (layout.n,):
        raise ValidationError(f"estimate block must have length {layout.n}, got shape {est_block.shape}")
    return est_block


def select_action(layout: ProfileLayout, i: int, est_block: np.ndarray) -> np.ndarray:
    """R_i x^i: agent i's own slot."""
    return _check_block(layout, est_block)[layout.slot(i)]


def select_others(layout: ProfileLayout, i: int, est_block: np.ndarray) -> np.ndarray:
    """S_i x^i: every slot except agent i's."""
    return _check_block(layout, est_block)[layout.others_index(i)]


def embed(layout: ProfileLayout, i: int, own: np.ndarray, others: np.ndarray) -> np.ndarray:
    """R_i' own + S_i' others."""
    own = np.atleast_1d(np.asarray(own, dtype=float))
    others = np.asarray(others, dtype=float)
    if own.shape != (layout.dims[i],):
        raise ValidationError(f"own action of agent {i} must have length {layout.dims[i]}, got {own.shape}")
    if others.shape != (layout.n - layout.dims[i],):
        raise ValidationError(f"estimates of agent {i} must have length {layout.n - layout.dims[i]}, got {others.shape}")
    out = np.empty(layout.n)
    out[layout.slot(i)] = own
    out[layout.others_index(i)] = others
    return out


# -------------------------------------------------------------------------
# Shared pieces
# -------------------------------------------------------------------------

def _estimate_blocks(state: StackedState, own: np.ndarray) -> np.ndarray:
    """N x n matrix of private estimate blocks, own slots filled with `own`."""
    layout = state.layout
    N, n = layout.profile.N, layout.profile.n
    flat = np.empty(own.shape[:-1] + (N * n,))
    flat[..., layout.own_target] = own
    flat[..., layout.est_target] = state.values[..., layout.est_all]
    return flat.reshape(own.shape[:-1] + (N, n))


def _consensus_terms(game: GameSpec, graph: GraphSpec, state: StackedState, own: np.ndarray):
    """(extended pseudo-gradient, Laplacian sums flattened) at the current estimates."""
    blocks = _estimate_blocks(state, own)
    lap = laplacian_sums(graph, blocks).reshape(-1)
    grad = extended_pseudo_gradient(game, blocks.reshape(-1))
    return grad, lap


def _disturbance(laws: LawSet, w: np.ndarray, d: Optional[np.ndarray]) -> np.ndarray:
    return laws.D @ w if d is None else d


def _require_gain(laws: LawSet) -> None:
    if not laws.variant.is_internal_model:
        raise ConfigurationError(f"{laws.variant.value} has no internal model")
    for i, law in enumerate(laws.laws):
        if law.exo is None or law.exo.K is None:
            raise ConfigurationError(f"agent {i} has no observer gain K")


def _chain_terms(laws: LawSet, layout: StateLayout, values: np.ndarray):
    """
    Multi-integrator outputs on the last axis of `values`:
    gamma_i = x_i + sum_k c_k v^k + v^{r-1}, damping_i = v^1 + sum_k c_k v^{k+1},
    and the observed top derivative v^{r-1}.
    """
    profile = layout.profile
    shape = values.shape[:-1] + (profile.n,)
    gamma = np.empty(shape)
    damping = np.empty(shape)
    top = np.empty(shape)
    for i, law in enumerate(laws.laws):
        sl = profile.slot(i)
        v_idx = layout.v_index(i)
        x = values[..., layout.x_index(i)]
        V = [values[..., v_idx[k]] for k in range(law.order - 1)]
        g = x + V[-1]
        damp = V[0].copy()
        for k, c_k in enumerate(law.c, start=1):
            g = g + c_k * V[k - 1]
            damp = damp + c_k * V[k]
        gamma[..., sl] = g
        damping[..., sl] = damp
        top[..., sl] = V[-1]
    return gamma, damping, top


# -------------------------------------------------------------------------
# Vector fields
# -------------------------------------------------------------------------

def rhs_gradient_play_full(game: GameSpec, x: np.ndarray, d: Optional[np.ndarray] = None) -> np.ndarray:
    """x' = -F(x) + d."""
    xdot = -pseudo_gradient(game, x)
    return xdot if d is None else xdot + d


def rhs_gradient_play_partial(
    game: GameSpec, graph: GraphSpec, state: StackedState, d: Optional[np.ndarray] = None
) -> StackedState:
    """
    x_i' = -grad_i J_i(x_i, x^i_-i) - R_i sum_j (x^i - x^j) + d_i
    x^i_-i' = -S_i sum_j (x^i - x^j)
    """
    layout = state.layout
    x = state.x
    grad, lap = _consensus_terms(game, graph, state, x)
    out = np.zeros(layout.size)
    out[layout.x_all] = -grad - lap[layout.own_target]
    if d is not None:
        out[layout.x_all] += d
    out[layout.est_all] = -lap[layout.est_target]
    return state.with_values(out)


def rhs_single_int_partial_im(
    game: GameSpec,
    graph: GraphSpec,
    laws: LawSet,
    state: StackedState,
    w: np.ndarray,
    d: Optional[np.ndarray] = None,
) -> StackedState:
    """
    x_i'  = -grad_i J_i - R_i sum_j (x^i - x^j) - D_i (K_i x_i + xi_i) + d_i
    xi_i' = S_i (K_i x_i + xi_i) + K_i grad_i J_i + K_i R_i sum_j (x^i - x^j)
    """
    _require_gain(laws)
    layout = state.layout
    x, xi = state.x, state.xi
    grad, lap = _consensus_terms(game, graph, state, x)
    lap_own = lap[layout.own_target]
    internal = laws.K @ x + xi

    out = np.zeros(layout.size)
    out[layout.x_all] = -grad - lap_own - laws.D @ internal + _disturbance(laws, w, d)
    out[layout.est_all] = -lap[layout.est_target]
    out[layout.xi_all] = laws.S @ internal + laws.K @ (grad + lap_own)
    return state.with_values(out)


def rhs_single_int_full_im(
    game: GameSpec,
    laws: LawSet,
    x: np.ndarray,
    xi: np.ndarray,
    w: np.ndarray,
    d: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (x', xi') with the true profile in place of estimates."""
    _require_gain(laws)
    grad = pseudo_gradient(game, x)
    internal = laws.K @ x + xi
    xdot = -grad - laws.D @ internal + _disturbance(laws, w, d)
    xidot = laws.S @ internal + laws.K @ grad
    return xdot, xidot


def rhs_double_int_partial_im(
    game: GameSpec,
    graph: GraphSpec,
    laws: LawSet,
    state: StackedState,
    w: np.ndarray,
    d: Optional[np.ndarray] = None,
) -> StackedState:
    """
    Gradients are evaluated at the predicted point x_i + b_i v_i, which is also
    what agent i's own estimate slot holds:

    x_i'  = v_i
    v_i'  = -grad_i J_i(x_i + b_i v_i, g^i_-i) - v_i / b_i - R_i sum_j (g^i - g^j) - D_i (K_i v_i + xi_i) + d_i
    xi_i' = S_i (K_i v_i + xi_i) + K_i (grad_i J_i + v_i / b_i + R_i sum_j (g^i - g^j))
    """
    _require_gain(laws)
    layout = state.layout
    x, v, xi = state.x, state.velocities(), state.xi
    b = laws.b
    grad, lap = _consensus_terms(game, graph, state, x + b * v)
    lap_own = lap[layout.own_target]
    damping = v / b
    internal = laws.K @ v + xi

    out = np.zeros(layout.size)
    out[layout.x_all] = v
    out[layout.v_all] = -grad - damping - lap_own - laws.D @ internal + _disturbance(laws, w, d)
    out[layout.est_all] = -lap[layout.est_target]
    out[layout.xi_all] = laws.S @ internal + laws.K @ (grad + damping + lap_own)
    return state.with_values(out)


def rhs_double_int_full_im(
    game: GameSpec,
    laws: LawSet,
    x: np.ndarray,
    v: np.ndarray,
    xi: np.ndarray,
    w: np.ndarray,
    d: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (x', v', xi'); every player's gradient is read at x + B v."""
    _require_gain(laws)
    b = laws.b
    grad = pseudo_gradient(game, x + b * v)
    damping = v / b
    internal = laws.K @ v + xi
    vdot = -grad - damping - laws.D @ internal + _disturbance(laws, w, d)
    xidot = laws.S @ internal + laws.K @ (grad + damping)
    return v.copy(), vdot, xidot


def rhs_multi_int_partial_im(
    game: GameSpec,
    graph: GraphSpec,
    laws: LawSet,
    state: StackedState,
    w: np.ndarray,
    d: Optional[np.ndarray] = None,
) -> StackedState:
    """
    Chain of r_i integrators x_i' = v_i^1, ..., (v_i^{r-2})' = v_i^{r-1},
    (v_i^{r-1})' = u_i + d_i with

    u_i = -grad_i J_i(gamma_i, g^i_-i) - damping_i - R_i sum_j (g^i - g^j) - D_i (K_i v_i^{r-1} + xi_i)

    and the internal model observing v_i^{r-1}.
    """
    _require_gain(laws)
    layout = state.layout
    values = state.values
    gamma, damping, top = _chain_terms(laws, layout, values)
    grad, lap = _consensus_terms(game, graph, state, gamma)
    lap_own = lap[layout.own_target]
    internal = laws.K @ top + state.xi
    u = -grad - damping - lap_own - laws.D @ internal
    accel = u + _disturbance(laws, w, d)

    out = np.zeros(layout.size)
    profile = layout.profile
    for i in range(profile.N):
        v_idx = layout.v_index(i)
        out[layout.x_index(i)] = values[v_idx[0]]
        for k in range(len(v_idx) - 1):
            out[v_idx[k]] = values[v_idx[k + 1]]
        out[v_idx[-1]] = accel[profile.slot(i)]
    out[layout.est_all] = -lap[layout.est_target]
    out[layout.xi_all] = laws.S @ internal + laws.K @ (grad + damping + lap_own)
    return state.with_values(out)


def _observed_output(laws: LawSet, state: StackedState) -> np.ndarray:
    """What each internal model observes: x_i, v_i or v_i^{r-1}."""
    variant = laws.variant
    if variant.is_multi:
        return _chain_terms(laws, state.layout, state.values)[2]
    if variant.is_double:
        return state.velocities()
    return state.x


def observer_error(laws: LawSet, state: StackedState, w: np.ndarray) -> List[np.ndarray]:
    """rho_i = w_i - (K_i y_i + xi_i), with y_i the observed output."""
    _require_gain(laws)
    rho = np.asarray(w, dtype=float) - (laws.K @ _observed_output(laws, state) + state.xi)
    bounds = np.cumsum((0,) + laws.qs)
    return [rho[bounds[i]:bounds[i + 1]] for i in range(laws.N)]


# -------------------------------------------------------------------------
# Law construction
# -------------------------------------------------------------------------

def make_laws(
    game: GameSpec,
    variant: LawVariant,
    exosystems: Sequence[Exosystem],
    b: Optional[float] = None,
    order: Optional[int] = None,
    c: Optional[Sequence[float]] = None,
    poles: Optional[Sequence[complex]] = None,
    internal_model: bool = True,
) -> LawSet:
    """
    One AgentLaw per agent. Internal-model variants receive the (S, D, K)
    model of their own exosystem; K is designed from `poles` when unset.
    internal_model=False gives them an empty (q = 0) model instead, which
    leaves the disturbance unrejected.
    """
    variant = LawVariant(variant)
    laws = []
    for exo in exosystems:
        model = None
        if variant.is_internal_model and not internal_model:
            model = agent_model(with_gain(no_disturbance(exo.n)))
        elif variant.is_internal_model:
            gained = exo if exo.has_gain else with_gain(exo, desired_poles=poles if exo.q else None)
            model = agent_model(gained)
        laws.append(AgentLaw(
            variant=variant,
            order=order,
            b=b if variant.is_double else None,
            c=tuple(c) if (c is not None and variant.is_multi) else None,
            exo=model,
        ))
    return LawSet(tuple(laws), game.dims)


# -------------------------------------------------------------------------
# Closed loop
# -------------------------------------------------------------------------

class ClosedLoop:
    """
    The networked system integrated by the simulator.

    The integrated vector is z = (agent states, w_1, ..., w_N). Agents see
    their exosystem only through d_i = D_i w_i and their own (S, D, K) model.
    """

    def __init__(
        self,
        game: GameSpec,
        laws: LawSet,
        exosystems: Sequence[Exosystem],
        graph: Optional[GraphSpec] = None,
    ):
        self.game = game
        self.laws = laws
        self.variant = laws.variant
        self.exosystems = tuple(exosystems)
        self.graph = graph

        if len(self.exosystems) != game.N:
            raise ValidationError(f"{len(self.exosystems)} exosystems for {game.N} agents")
        for i, exo in enumerate(self.exosystems):
            if exo.n != game.dims[i]:
                raise ValidationError(f"exosystem {i} drives {exo.n} components, agent has {game.dims[i]}")

        if self.variant.is_partial:
            if graph is None:
                raise ConfigurationError(f"{self.variant.value} needs a communication graph")
            if graph.N != game.N:
                raise ValidationError(f"graph has {graph.N} vertices for {game.N} agents")
            if not graph.connected:
                logger.warning("communication graph is disconnected; estimates cannot reach consensus")

        if self.variant.is_internal_model:
            for i, (law, exo) in enumerate(zip(laws.laws, self.exosystems)):
                if law.q == 0:
                    continue
                if law.q != exo.q or not (np.allclose(law.exo.S, exo.S) and np.allclose(law.exo.D, exo.D)):
                    raise ConfigurationError(f"agent {i}'s internal model does not match its exosystem")

        self.layout = StateLayout.for_laws(game.layout, laws)
        qs = tuple(exo.q for exo in self.exosystems)
        self.S_true = stack_blocks([exo.S for exo in self.exosystems], qs, qs)
        self.D_true = stack_blocks([exo.D for exo in self.exosystems], game.dims, qs)
        self.w0 = np.concatenate([exo.w0 for exo in self.exosystems])

    @property
    def state_dim(self) -> int:
        return self.layout.size

    @property
    def w_dim(self) -> int:
        return int(self.w0.size)

    @property
    def dim(self) -> int:
        return self.state_dim + self.w_dim

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return z[..., :self.state_dim], z[..., self.state_dim:]

    def initial_state(
        self,
        x0: Optional[np.ndarray] = None,
        v0: Optional[np.ndarray] = None,
        estimates: str = "zero",
    ) -> np.ndarray:
        """
        z(0): actions x0 (default 0), first velocities v0 (default 0), estimates
        zero or copied from x0, xi(0) = 0 and w(0) from the exosystems.
        """
        layout, profile = self.layout, self.game.layout
        x0 = np.zeros(profile.n) if x0 is None else profile.check_profile(x0)
        values = np.zeros(layout.size)
        values[layout.x_all] = x0
        if v0 is not None:
            v0 = profile.check_profile(v0)
            if not layout.v_all.size:
                raise ConfigurationError(f"{self.variant.value} has no velocity state")
            for i in range(profile.N):
                values[layout.v_index(i)[0]] = v0[profile.slot(i)]
        if estimates == "actions":
            if self.variant.is_partial:
                for i in range(profile.N):
                    values[layout.est_index(i)] = x0[profile.others_index(i)]
        elif estimates != "zero":
            raise ValidationError(f"unknown estimate initialization '{estimates}'")
        return np.concatenate([values, self.w0])

    def _state_rhs(self, state: StackedState, w: np.ndarray, d: np.ndarray) -> np.ndarray:
        variant, layout = self.variant, self.layout
        if variant is LawVariant.GRADIENT_PLAY_FULL:
            out = np.zeros(layout.size)
            out[layout.x_all] = rhs_gradient_play_full(self.game, state.x, d)
            return out
        if variant is LawVariant.GRADIENT_PLAY_PARTIAL:
            return rhs_gradient_play_partial(self.game, self.graph, state, d).values
        if variant is LawVariant.SINGLE_INT_PARTIAL_IM:
            return rhs_single_int_partial_im(self.game, self.graph, self.laws, state, w, d).values
        if variant is LawVariant.DOUBLE_INT_PARTIAL_IM:
            return rhs_double_int_partial_im(self.game, self.graph, self.laws, state, w, d).values
        if variant is LawVariant.MULTI_INT_PARTIAL_IM:
            return rhs_multi_int_partial_im(self.game, self.graph, self.laws, state, w, d).values

        out = np.zeros(layout.size)
        if variant is LawVariant.SINGLE_INT_FULL_IM:
            xdot, xidot = rhs_single_int_full_im(self.game, self.laws, state.x, state.xi, w, d)
        else:
            xdot, vdot, xidot = rhs_double_int_full_im(self.game, self.laws, state.x, state.velocities(), state.xi, w, d)
            out[layout.v_all] = vdot
        out[layout.x_all] = xdot
        out[layout.xi_all] = xidot
        return out

    def rhs(self, t: float, z: np.ndarray) -> np.ndarray:
        s, w = self.split(z)
        state = StackedState(self.layout, s)
        d = self.D_true @ w
        return np.concatenate([self._state_rhs(state, w, d), self.S_true @ w])

    # ---------------------------------------------------------------------
    # Views over single samples or recorded rows
    # ---------------------------------------------------------------------

    def actions(self, z: np.ndarray) -> np.ndarray:
        return z[..., self.layout.x_all]

    def velocities(self, z: np.ndarray) -> np.ndarray:
        return z[..., self.layout.v_all]

    def outputs(self, z: np.ndarray) -> np.ndarray:
        """What each agent writes into its own estimate slot."""
        if self.variant.is_multi:
            return _chain_terms(self.laws, self.layout, z[..., :self.state_dim])[0]
        if self.variant.is_double:
            return self.actions(z) + self.laws.b * self.velocities(z)
        return self.actions(z)

    def estimates(self, z: np.ndarray) -> np.ndarray:
        """Private estimate blocks (... x N x n); the true profile repeated for full-information laws."""
        own = self.outputs(z)
        if not self.variant.is_partial:
            return np.repeat(own[..., None, :], self.game.N, axis=-2)
        s = z[..., :self.state_dim]
        return _estimate_blocks(_RowState(self.layout, s), own)

    def observer_error(self, z: np.ndarray) -> np.ndarray:
        """Stacked rho over the last axis."""
        if not self.variant.is_internal_model:
            raise ConfigurationError(f"{self.variant.value} has no internal model")
        s, w = self.split(z)
        if self.variant.is_multi:
            observed = _chain_terms(self.laws, self.layout, s)[2]
        elif self.variant.is_double:
            observed = s[..., self.layout.v_all]
        else:
            observed = s[..., self.layout.x_all]
        return w - (observed @ self.laws.K.T + s[..., self.layout.xi_all])

    def metrics(self, samples: np.ndarray, x_star: np.ndarray) -> dict:
        """Per-sample ne_error, consensus_error, velocity_norm and observer_norm."""
        samples = np.atleast_2d(samples)
        T = samples.shape[0]
        ne_error = np.linalg.norm(self.actions(samples) - x_star, axis=-1)

        if self.variant.is_partial:
            blocks = self.estimates(samples)
            consensus = np.linalg.norm((blocks - blocks.mean(axis=-2, keepdims=True)).reshape(T, -1), axis=-1)
        else:
            consensus = np.zeros(T)

        v = self.velocities(samples)
        velocity = np.linalg.norm(v, axis=-1) if v.shape[-1] else np.zeros(T)
        if self.variant.is_internal_model and self.laws.K.shape[0]:
            observer = np.linalg.norm(self.observer_error(samples), axis=-1)
        else:
            observer = np.zeros(T)
        return {
            "ne_error": ne_error,
            "consensus_error": consensus,
            "velocity_norm": velocity,
            "observer_norm": observer,
        }


class _RowState:
    """StackedState stand-in for recorded rows (no length check on leading axes)."""

    def __init__(self, layout: StateLayout, values: np.ndarray):
        self.layout = layout
        self.values = values


def linearize(closed_loop: ClosedLoop, z: np.ndarray, eps: float = 1e-6, state_only: bool = True) -> np.ndarray:
    """
    Central-difference Jacobian of the closed-loop vector field at z.

    state_only=True returns the block with respect to the agent state (w
    frozen); the exosystem block is only marginally stable by construction.
    """
    z = np.asarray(z, dtype=float)
    dim = closed_loop.state_dim if state_only else closed_loop.dim
    J = np.empty((dim, dim))
    for k in range(dim):
        step = np.zeros_like(z)
        step[k] = eps
        J[:, k] = (closed_loop.rhs(0.0, z + step)[:dim] - closed_loop.rhs(0.0, z - step)[:dim]) / (2 * eps)
    return J
