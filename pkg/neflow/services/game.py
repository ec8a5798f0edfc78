"""
Game service: partial gradients, pseudo-gradients, the NE oracle and the
strong-monotonicity / Lipschitz constant estimators.

All functions are pure in their inputs.
"""

import logging
from typing import Optional, Tuple, Union

import numpy as np

from neflow.config import get_settings
from neflow.core.errors import ConfigurationError, ConvergenceError, DomainError, ValidationError
from neflow.models.game import Certificate, GameSpec, GeneralGame, QuadraticGame, StackedEstimate

logger = logging.getLogger(__name__)

# Default sampling box for games that do not declare one
DEFAULT_BOX = (-1.0, 1.0)


def _finite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{what} is not finite; profile is outside the cost's domain")
    return values


def partial_gradient(game: GameSpec, i: int, profile: np.ndarray) -> np.ndarray:
    """Evaluate grad_i J_i at a full profile."""
    layout = game.layout
    layout.check_player(i)
    profile = layout.check_profile(profile)

    if isinstance(game.model, QuadraticGame):
        rows = layout.slot(i)
        return game.model.A[rows, :] @ profile + game.model.r[rows]

    grad = np.atleast_1d(np.asarray(game.model.partial_gradient_fn(i, profile), dtype=float))
    if grad.shape != (layout.dims[i],):
        raise ValidationError(f"partial gradient of player {i} has shape {grad.shape}, expected ({layout.dims[i]},)")
    return _finite(grad, f"partial gradient of player {i}")


def pseudo_gradient(game: GameSpec, profile: np.ndarray) -> np.ndarray:
    """F(x) = col(grad_1 J_1(x), ..., grad_N J_N(x))."""
    profile = game.layout.check_profile(profile)

    if isinstance(game.model, QuadraticGame):
        return game.model.A @ profile + game.model.r
    if game.model.batch_gradient_fn is not None:
        views = np.tile(profile, (game.N, 1))
        return _finite(np.asarray(game.model.batch_gradient_fn(views), dtype=float), "pseudo-gradient")
    return np.concatenate([partial_gradient(game, i, profile) for i in range(game.N)])


def _as_blocks(game: GameSpec, est: Union[StackedEstimate, np.ndarray]) -> np.ndarray:
    if isinstance(est, StackedEstimate):
        return est.blocks()
    return StackedEstimate(game.layout, est).blocks()


def extended_pseudo_gradient(game: GameSpec, est: Union[StackedEstimate, np.ndarray]) -> np.ndarray:
    """
    Extended pseudo-gradient: block i is grad_i J_i(x_i, x^i_{-i}), every
    argument read from agent i's own estimate block.
    """
    blocks = _as_blocks(game, est)

    if isinstance(game.model, QuadraticGame):
        return game.extended_matrix @ blocks.reshape(-1) + game.model.r
    if game.model.batch_gradient_fn is not None:
        return _finite(np.asarray(game.model.batch_gradient_fn(blocks), dtype=float), "extended pseudo-gradient")
    return np.concatenate([partial_gradient(game, i, blocks[i]) for i in range(game.N)])


def cost(game: GameSpec, i: int, profile: np.ndarray) -> float:
    """
    J_i at a profile where a closed form exists.

    Quadratic games without an explicit cost use the canonical cost
    x_i' A_ii x_i / 2 + x_i' (sum_{j != i} A_ij x_j + r_i), whose partial
    gradient is (A x + r)_i when A_ii is symmetric.
    """
    layout = game.layout
    layout.check_player(i)
    profile = layout.check_profile(profile)

    if game.model.cost_fn is not None:
        return float(game.model.cost_fn(i, profile))
    if isinstance(game.model, QuadraticGame):
        rows = layout.slot(i)
        x_i = profile[rows]
        A_row = game.model.A[rows, :]
        own = A_row[:, rows]
        others = A_row @ profile - own @ x_i
        return float(0.5 * x_i @ own @ x_i + x_i @ (others + game.model.r[rows]))
    raise ConfigurationError(f"game '{game.name}' has no closed-form cost")


def jacobian(game: GameSpec) -> np.ndarray:
    """Constant Jacobian A of F for a quadratic game."""
    if not isinstance(game.model, QuadraticGame):
        raise ConfigurationError("a constant Jacobian exists only for quadratic games")
    return game.model.A.copy()


def extended_jacobian(game: GameSpec) -> np.ndarray:
    """Constant n x N*n Jacobian of the extended pseudo-gradient."""
    if not isinstance(game.model, QuadraticGame):
        raise ConfigurationError("a constant Jacobian exists only for quadratic games")
    return game.extended_matrix.copy()


def exact_constants(game: GameSpec) -> Certificate:
    """
    Exact constants of a quadratic game.

    mu is the smallest eigenvalue of the symmetric part of A. theta is the
    largest of ||A|| and ||J_F|| (the extended Jacobian), so the same value
    bounds both F and the extended pseudo-gradient.
    """
    if not isinstance(game.model, QuadraticGame):
        raise ConfigurationError("exact constants require a quadratic game")
    A = game.model.A
    mu = float(np.linalg.eigvalsh(0.5 * (A + A.T)).min())
    theta_f = float(np.linalg.norm(A, 2))
    theta_ext = float(np.linalg.norm(extended_jacobian(game), 2))
    return Certificate(mu=mu, theta=max(theta_f, theta_ext), exact=True)


def _sampling_box(game: GameSpec, box: Optional[Tuple]) -> Tuple[np.ndarray, np.ndarray]:
    box = box if box is not None else game.certify_box
    if box is None:
        box = DEFAULT_BOX
    lo, hi = box
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (game.n,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (game.n,)).copy()
    if np.any(hi <= lo):
        raise ValidationError("sampling box must have hi > lo in every coordinate")
    return lo, hi


def certify_constants(
    game: GameSpec,
    sample_budget: Optional[int] = None,
    seed: int = 0,
    box: Optional[Tuple] = None,
    exact: bool = True,
) -> Certificate:
    """
    Estimate (mu, theta) on a sampling box.

    Quadratic games return the exact spectral values unless exact=False.
    Sampled mu is the minimum monotonicity ratio over random pairs (an upper
    bound on the true mu); sampled theta the maximum Lipschitz ratio of F and
    of the extended pseudo-gradient (a lower bound on the true theta).
    """
    if sample_budget is None:
        sample_budget = get_settings().certify_budget
    if sample_budget < 1:
        raise ValidationError("certify_constants needs a positive sample budget")

    if exact and isinstance(game.model, QuadraticGame):
        return exact_constants(game)

    lo, hi = _sampling_box(game, box)
    rng = np.random.default_rng(seed)
    N, n = game.N, game.n

    mu_hat = np.inf
    theta_hat = 0.0
    for _ in range(sample_budget):
        x = rng.uniform(lo, hi)
        y = rng.uniform(lo, hi)
        dx = x - y
        dF = pseudo_gradient(game, x) - pseudo_gradient(game, y)
        sq = float(dx @ dx)
        if sq == 0.0:
            continue
        mu_hat = min(mu_hat, float(dx @ dF) / sq)
        theta_hat = max(theta_hat, float(np.linalg.norm(dF)) / np.sqrt(sq))

        # extended pseudo-gradient: each agent's copy drawn from the same box
        xb = rng.uniform(np.tile(lo, N), np.tile(hi, N))
        yb = rng.uniform(np.tile(lo, N), np.tile(hi, N))
        dxb = xb - yb
        dFb = extended_pseudo_gradient(game, xb) - extended_pseudo_gradient(game, yb)
        theta_hat = max(theta_hat, float(np.linalg.norm(dFb) / np.linalg.norm(dxb)))

    logger.info(
        "sampled constants for %s: mu<=%.6g (upper bound), theta>=%.6g (lower bound)",
        game.name, mu_hat, theta_hat,
    )
    return Certificate(
        mu=float(mu_hat),
        theta=float(theta_hat),
        exact=False,
        samples=sample_budget,
        box=(lo.tolist(), hi.tolist()),
    )


def solve_ne(game: GameSpec, tol: Optional[float] = None, max_iter: Optional[int] = None) -> np.ndarray:
    """
    Unique NE x* with ||F(x*)|| < tol.

    Quadratic games: exact linear solve of A x = -r (symmetric part must be
    positive definite). General games: forward-Euler flow of x' = -F(x) with
    step 1/theta (or 1e-2), halving the step whenever it leaves the domain.
    """
    settings = get_settings()
    tol = settings.ne_tol if tol is None else tol
    max_iter = settings.ne_max_iter if max_iter is None else max_iter

    if isinstance(game.model, QuadraticGame):
        A = game.model.A
        if np.linalg.eigvalsh(0.5 * (A + A.T)).min() <= 0:
            raise ValidationError("symmetric part of A is not positive definite; NE not unique")
        x = np.linalg.solve(A, -game.model.r)
        residual = float(np.linalg.norm(pseudo_gradient(game, x)))
        if residual >= tol:
            # one refinement step for ill-conditioned A
            x = x - np.linalg.solve(A, pseudo_gradient(game, x))
            residual = float(np.linalg.norm(pseudo_gradient(game, x)))
        if residual >= tol:
            raise ConvergenceError("linear NE solve is ill-conditioned", residual, 2)
        return x

    if game.mu is None:
        raise ConfigurationError(
            f"game '{game.name}' does not declare mu; the gradient-flow oracle relies on strong monotonicity"
        )
    return _gradient_flow(game, tol, max_iter)


def _gradient_flow(game: GameSpec, tol: float, max_iter: int) -> np.ndarray:
    model: GeneralGame = game.model
    step = 1.0 / game.theta if game.theta else 1e-2
    x = np.zeros(game.n) if model.x0 is None else np.asarray(model.x0, dtype=float).copy()
    F = pseudo_gradient(game, x)
    residual = float(np.linalg.norm(F))

    for iteration in range(max_iter):
        if residual < tol:
            logger.debug("gradient flow converged in %d iterations", iteration)
            return x
        h = step
        for _ in range(40):
            try:
                candidate = x - h * F
                F_candidate = pseudo_gradient(game, candidate)
                break
            except DomainError:
                h *= 0.5
        else:
            raise ConvergenceError("gradient flow cannot stay inside the domain", residual, iteration)
        x, F = candidate, F_candidate
        residual = float(np.linalg.norm(F))

    if residual < tol:
        return x
    raise ConvergenceError("gradient flow did not reach tolerance", residual, max_iter)
