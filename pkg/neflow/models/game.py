"""
Game models: action-profile layout, cost models and the stacked estimate vector.

Profiles are player-major concatenations in declaration order. The stacked
estimate is col(x^1, ..., x^N), each block a full copy of the profile held
by one agent (its own action sits in its own slot).
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Tuple, Union

import numpy as np

from neflow.core.errors import ValidationError

# (i, profile) -> partial gradient of J_i w.r.t. x_i
PartialGradientFn = Callable[[int, np.ndarray], np.ndarray]
# (N x n profiles, row i read by player i) -> stacked partial gradients (n,)
BatchGradientFn = Callable[[np.ndarray], np.ndarray]
# (i, profile) -> J_i
CostFn = Callable[[int, np.ndarray], float]


@dataclass(frozen=True)
class ProfileLayout:
    """Slot arithmetic for a profile x = col(x_1, ..., x_N)."""

    dims: Tuple[int, ...]

    def __post_init__(self):
        if len(self.dims) < 2:
            raise ValidationError(f"a game needs N >= 2 players, got {len(self.dims)}")
        if any(int(d) < 1 for d in self.dims):
            raise ValidationError(f"every action dimension must be >= 1, got {self.dims}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def N(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        return int(sum(self.dims))

    @cached_property
    def offsets(self) -> Tuple[int, ...]:
        """Start index of each player's slot (prefix sums n_{<i})."""
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.dims)[:-1]]))

    def slot(self, i: int) -> slice:
        self.check_player(i)
        start = self.offsets[i]
        return slice(start, start + self.dims[i])

    @cached_property
    def _others(self) -> Tuple[np.ndarray, ...]:
        idx = np.arange(self.n)
        return tuple(
            np.concatenate([idx[: self.offsets[i]], idx[self.offsets[i] + self.dims[i]:]])
            for i in range(self.N)
        )

    def others_index(self, i: int) -> np.ndarray:
        """Indices of x_{-i} inside a profile (rows of S_i)."""
        self.check_player(i)
        return self._others[i]

    def check_player(self, i: int) -> None:
        if not 0 <= i < self.N:
            raise ValidationError(f"player index {i} out of range for N={self.N}")

    def check_profile(self, profile: np.ndarray) -> np.ndarray:
        profile = np.asarray(profile, dtype=float)
        if profile.shape != (self.n,):
            raise ValidationError(f"profile must have length n={self.n}, got shape {profile.shape}")
        return profile

    def split(self, profile: np.ndarray) -> list:
        """Per-player views of a profile."""
        return [profile[self.slot(i)] for i in range(self.N)]


@dataclass(frozen=True)
class QuadraticGame:
    """F(x) = A x + r, with a constant Jacobian A."""

    A: np.ndarray
    r: np.ndarray
    cost_fn: Optional[CostFn] = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValidationError(f"A must be square, got shape {A.shape}")
        if r.shape != (A.shape[0],):
            raise ValidationError(f"r must have length {A.shape[0]}, got shape {r.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "r", r)


@dataclass(frozen=True)
class GeneralGame:
    """Game given by per-player partial-gradient callbacks."""

    partial_gradient_fn: PartialGradientFn
    batch_gradient_fn: Optional[BatchGradientFn] = None
    cost_fn: Optional[CostFn] = None
    x0: Optional[np.ndarray] = None


CostModel = Union[QuadraticGame, GeneralGame]


@dataclass(frozen=True)
class GameSpec:
    """
    A game with N players, action dimensions `dims` and a cost model.

    mu/theta are the strong-monotonicity and Lipschitz constants when known.
    certify_box bounds the region where sampled constants are estimated.
    """

    name: str
    layout: ProfileLayout
    model: CostModel
    mu: Optional[float] = None
    theta: Optional[float] = None
    certify_box: Optional[Tuple[np.ndarray, np.ndarray]] = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.mu is not None and not self.mu > 0:
            raise ValidationError(f"strong monotonicity requires mu > 0, got {self.mu}")
        if self.theta is not None and not self.theta > 0:
            raise ValidationError(f"Lipschitz constant must be > 0, got {self.theta}")
        if isinstance(self.model, QuadraticGame) and self.model.A.shape[0] != self.layout.n:
            raise ValidationError(
                f"A is {self.model.A.shape[0]}x{self.model.A.shape[0]} but dims sum to {self.layout.n}"
            )

    @property
    def N(self) -> int:
        return self.layout.N

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.layout.dims

    @property
    def is_quadratic(self) -> bool:
        return isinstance(self.model, QuadraticGame)

    @cached_property
    def extended_matrix(self) -> np.ndarray:
        """
        Constant Jacobian of the extended pseudo-gradient (n x N*n) for quadratic
        games: block-row i holds row-block i of A, placed on agent i's estimate.
        """
        if not self.is_quadratic:
            raise ValidationError("extended_matrix is only defined for quadratic games")
        n, layout = self.n, self.layout
        M = np.zeros((n, layout.N * n))
        for i in range(layout.N):
            rows = layout.slot(i)
            M[rows, i * n:(i + 1) * n] = self.model.A[rows, :]
        return M


@dataclass(frozen=True)
class StackedEstimate:
    """x_bold = col(x^1, ..., x^N) in R^{N n}."""

    layout: ProfileLayout
    x_bold: np.ndarray

    def __post_init__(self):
        x_bold = np.asarray(self.x_bold, dtype=float)
        expected = self.layout.N * self.layout.n
        if x_bold.shape != (expected,):
            raise ValidationError(f"stacked estimate must have length N*n={expected}, got {x_bold.shape}")
        object.__setattr__(self, "x_bold", x_bold)

    @classmethod
    def consensus(cls, layout: ProfileLayout, x: np.ndarray) -> "StackedEstimate":
        """1_N (x) x."""
        x = layout.check_profile(x)
        return cls(layout, np.tile(x, layout.N))

    def blocks(self) -> np.ndarray:
        """N x n view; row i is agent i's copy of the profile."""
        return self.x_bold.reshape(self.layout.N, self.layout.n)

    def block(self, i: int) -> np.ndarray:
        self.layout.check_player(i)
        return self.blocks()[i]

    def mean_profile(self) -> np.ndarray:
        return self.blocks().mean(axis=0)

    def consensus_error(self) -> float:
        blocks = self.blocks()
        return float(np.linalg.norm(blocks - blocks.mean(axis=0)))

    def is_consensus(self, atol: float = 1e-12) -> bool:
        return self.consensus_error() <= atol


@dataclass(frozen=True)
class Certificate:
    """
    Strong-monotonicity and Lipschitz constants of a game.

    Sampled estimates bound the true constants from the optimistic side:
    mu is an upper bound on the true mu, theta a lower bound on the true theta.
    """

    mu: float
    theta: float
    exact: bool
    samples: int = 0
    box: Optional[Tuple[list, list]] = None

    @property
    def mu_is_upper_bound(self) -> bool:
        return not self.exact

    @property
    def theta_is_lower_bound(self) -> bool:
        return not self.exact

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "theta": self.theta,
            "exact": self.exact,
            "samples": self.samples,
            "mu_is_upper_bound": self.mu_is_upper_bound,
            "theta_is_lower_bound": self.theta_is_lower_bound,
            "box": self.box,
        }
