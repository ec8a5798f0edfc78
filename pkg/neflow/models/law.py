"""
Agent learning laws and the stacked closed-loop state layout.

State layout (agent-major): for each agent i, in order
    x_i                       n_i
    v_i = (v_i^1..v_i^{r-1})  n_i (r_i - 1)      absent for r_i = 1
    estimates of the others   n - n_i            partial-information variants
    xi_i                      q_i                internal-model variants
The exosystem states w_1..w_N follow the agent blocks in the integrator
state; they are not part of StackedState.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from neflow.core.errors import ConfigurationError, ValidationError
from neflow.models.exosystem import ExoModel
from neflow.models.game import ProfileLayout


class LawVariant(str, Enum):
    GRADIENT_PLAY_FULL = "GradientPlayFull"
    GRADIENT_PLAY_PARTIAL = "GradientPlayPartial"
    SINGLE_INT_FULL_IM = "SingleIntFullIM"
    SINGLE_INT_PARTIAL_IM = "SingleIntPartialIM"
    DOUBLE_INT_FULL_IM = "DoubleIntFullIM"
    DOUBLE_INT_PARTIAL_IM = "DoubleIntPartialIM"
    MULTI_INT_PARTIAL_IM = "MultiIntPartialIM"

    @property
    def is_partial(self) -> bool:
        return self in (
            LawVariant.GRADIENT_PLAY_PARTIAL,
            LawVariant.SINGLE_INT_PARTIAL_IM,
            LawVariant.DOUBLE_INT_PARTIAL_IM,
            LawVariant.MULTI_INT_PARTIAL_IM,
        )

    @property
    def is_internal_model(self) -> bool:
        return self not in (LawVariant.GRADIENT_PLAY_FULL, LawVariant.GRADIENT_PLAY_PARTIAL)

    @property
    def is_double(self) -> bool:
        return self in (LawVariant.DOUBLE_INT_FULL_IM, LawVariant.DOUBLE_INT_PARTIAL_IM)

    @property
    def is_multi(self) -> bool:
        return self is LawVariant.MULTI_INT_PARTIAL_IM


def hurwitz_coefficients(order: int) -> Tuple[float, ...]:
    """Interior coefficients of (s + 1)^(order - 1): c_k = binom(order - 1, k), k = 1..order-2."""
    return tuple(float(math.comb(order - 1, k)) for k in range(1, order - 1))


def chain_polynomial(c: Sequence[float]) -> np.ndarray:
    """
    Coefficients (descending) of p(s) = s^{r-1} + c_{r-2} s^{r-2} + ... + c_1 s + 1,
    where c = (c_1, ..., c_{r-2}).
    """
    return np.concatenate([[1.0], np.asarray(c, dtype=float)[::-1], [1.0]])


def is_hurwitz(c: Sequence[float]) -> bool:
    """All roots of the chain polynomial in the open left half plane."""
    roots = np.roots(chain_polynomial(c))
    return bool(np.all(roots.real < 0))


@dataclass(frozen=True)
class AgentLaw:
    """Which closed-loop dynamics an agent runs and its parameters."""

    variant: LawVariant
    order: Optional[int] = None
    b: Optional[float] = None
    c: Optional[Tuple[float, ...]] = None
    exo: Optional[ExoModel] = None

    def __post_init__(self):
        variant = LawVariant(self.variant)
        object.__setattr__(self, "variant", variant)
        if self.order is None:
            object.__setattr__(self, "order", 3 if variant.is_multi else (2 if variant.is_double else 1))

        if variant.is_multi:
            if self.order < 2:
                raise ValidationError(f"multi-integrator laws need order >= 2, got {self.order}")
            c = hurwitz_coefficients(self.order) if self.c is None else tuple(float(v) for v in self.c)
            if len(c) != self.order - 2:
                raise ValidationError(f"order {self.order} needs {self.order - 2} coefficients, got {len(c)}")
            if not is_hurwitz(c):
                raise ValidationError(f"coefficients {c} do not define a Hurwitz polynomial")
            object.__setattr__(self, "c", c)
        elif self.c is not None:
            raise ValidationError(f"{variant.value} takes no chain coefficients")

        if variant.is_double:
            if self.order != 2:
                raise ValidationError(f"{variant.value} is a double-integrator law (order 2), got order {self.order}")
            b = 1.0 if self.b is None else float(self.b)
            if b <= 0:
                raise ValidationError(f"prediction horizon b must be positive, got {b}")
            object.__setattr__(self, "b", b)
        elif self.b is not None:
            raise ValidationError(f"{variant.value} takes no prediction horizon b")

        if not variant.is_multi and not variant.is_double and self.order != 1:
            raise ValidationError(f"{variant.value} is a single-integrator law (order 1)")

        if variant.is_internal_model and self.exo is None:
            raise ConfigurationError(f"{variant.value} needs an exosystem model with observer gain K")
        if not variant.is_internal_model and self.exo is not None:
            raise ConfigurationError(f"{variant.value} has no internal model")

    @property
    def q(self) -> int:
        return 0 if self.exo is None else self.exo.q


def stack_blocks(blocks: Sequence[np.ndarray], rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    """Block diagonal with explicit sizes (zero-sized blocks allowed)."""
    out = np.zeros((int(sum(rows)), int(sum(cols))))
    r = c = 0
    for block, nr, nc in zip(blocks, rows, cols):
        if nr and nc:
            out[r:r + nr, c:c + nc] = block
        r += nr
        c += nc
    return out


@dataclass(frozen=True)
class LawSet:
    """The N agent laws of one run, with stacked internal-model matrices."""

    laws: Tuple[AgentLaw, ...]
    dims: Tuple[int, ...]

    def __post_init__(self):
        laws = tuple(self.laws)
        object.__setattr__(self, "laws", laws)
        if len(laws) != len(self.dims):
            raise ValidationError(f"{len(laws)} laws for {len(self.dims)} agents")
        variants = {law.variant for law in laws}
        if len(variants) != 1:
            raise ConfigurationError(f"all agents must run the same law variant, got {sorted(v.value for v in variants)}")
        for i, (law, n_i) in enumerate(zip(laws, self.dims)):
            if law.exo is not None and law.exo.D.shape[0] != n_i:
                raise ValidationError(f"agent {i}: D has {law.exo.D.shape[0]} rows, action dimension is {n_i}")

    @property
    def variant(self) -> LawVariant:
        return self.laws[0].variant

    @property
    def N(self) -> int:
        return len(self.laws)

    @property
    def qs(self) -> Tuple[int, ...]:
        return tuple(law.q for law in self.laws)

    @cached_property
    def K(self) -> np.ndarray:
        """blkdiag(K_1, ..., K_N), Q x n."""
        return stack_blocks(
            [law.exo.K if law.exo is not None else None for law in self.laws], self.qs, self.dims
        )

    @cached_property
    def D(self) -> np.ndarray:
        """blkdiag(D_1, ..., D_N), n x Q."""
        return stack_blocks(
            [law.exo.D if law.exo is not None else None for law in self.laws], self.dims, self.qs
        )

    @cached_property
    def S(self) -> np.ndarray:
        """blkdiag(S_1, ..., S_N), Q x Q."""
        return stack_blocks(
            [law.exo.S if law.exo is not None else None for law in self.laws], self.qs, self.qs
        )

    @cached_property
    def b(self) -> np.ndarray:
        """Prediction horizons expanded per action coordinate."""
        return np.concatenate([np.full(n_i, law.b if law.b is not None else 1.0) for law, n_i in zip(self.laws, self.dims)])


@dataclass(frozen=True)
class StateLayout:
    """Index arithmetic for the agent-major closed-loop state."""

    profile: ProfileLayout
    orders: Tuple[int, ...]
    partial: bool
    qs: Tuple[int, ...]

    @classmethod
    def for_laws(cls, profile: ProfileLayout, laws: LawSet) -> "StateLayout":
        return cls(
            profile=profile,
            orders=tuple(law.order for law in laws.laws),
            partial=laws.variant.is_partial,
            qs=laws.qs,
        )

    @cached_property
    def _indices(self) -> dict:
        p = self.profile
        x_idx, v_idx, est_idx, xi_idx = [], [], [], []
        cursor = 0
        for i in range(p.N):
            n_i, r_i = p.dims[i], self.orders[i]
            x_idx.append(np.arange(cursor, cursor + n_i))
            cursor += n_i
            v_idx.append(np.arange(cursor, cursor + n_i * (r_i - 1)).reshape(r_i - 1, n_i))
            cursor += n_i * (r_i - 1)
            size = p.n - n_i if self.partial else 0
            est_idx.append(np.arange(cursor, cursor + size))
            cursor += size
            xi_idx.append(np.arange(cursor, cursor + self.qs[i]))
            cursor += self.qs[i]

        # scatter targets inside the flattened N x n estimate matrix
        own_target = np.concatenate([i * p.n + np.arange(p.slot(i).start, p.slot(i).stop) for i in range(p.N)])
        est_target = np.concatenate([i * p.n + p.others_index(i) for i in range(p.N)]) if self.partial else np.zeros(0, int)
        return {
            "x": x_idx,
            "v": v_idx,
            "est": est_idx,
            "xi": xi_idx,
            "size": cursor,
            "x_all": np.concatenate(x_idx),
            "v_all": np.concatenate([v.reshape(-1) for v in v_idx]) if any(r > 1 for r in self.orders) else np.zeros(0, int),
            "est_all": np.concatenate(est_idx) if self.partial else np.zeros(0, int),
            "xi_all": np.concatenate(xi_idx) if sum(self.qs) else np.zeros(0, int),
            "own_target": own_target,
            "est_target": est_target,
        }

    @property
    def size(self) -> int:
        return self._indices["size"]

    def x_index(self, i: int) -> np.ndarray:
        return self._indices["x"][i]

    def v_index(self, i: int) -> np.ndarray:
        """(r_i - 1) x n_i array; row k-1 indexes v_i^k."""
        return self._indices["v"][i]

    def est_index(self, i: int) -> np.ndarray:
        return self._indices["est"][i]

    def xi_index(self, i: int) -> np.ndarray:
        return self._indices["xi"][i]

    @property
    def x_all(self) -> np.ndarray:
        """Action indices in profile order."""
        return self._indices["x_all"]

    @property
    def v_all(self) -> np.ndarray:
        return self._indices["v_all"]

    @property
    def est_all(self) -> np.ndarray:
        return self._indices["est_all"]

    @property
    def xi_all(self) -> np.ndarray:
        return self._indices["xi_all"]

    @property
    def own_target(self) -> np.ndarray:
        return self._indices["own_target"]

    @property
    def est_target(self) -> np.ndarray:
        return self._indices["est_target"]

    def top_velocity_all(self) -> np.ndarray:
        """Indices of v_i^{r_i - 1} in profile order (the internal-model observes it)."""
        return np.concatenate([self.v_index(i)[-1] for i in range(self.profile.N)])


@dataclass(frozen=True)
class StackedState:
    """Flat closed-loop state with per-agent accessors."""

    layout: StateLayout
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.layout.size,):
            raise ValidationError(f"state must have length {self.layout.size}, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, layout: StateLayout) -> "StackedState":
        return cls(layout, np.zeros(layout.size))

    @property
    def x(self) -> np.ndarray:
        return self.values[self.layout.x_all]

    @property
    def xi(self) -> np.ndarray:
        return self.values[self.layout.xi_all]

    def action(self, i: int) -> np.ndarray:
        return self.values[self.layout.x_index(i)]

    def velocity(self, i: int, k: int = 1) -> np.ndarray:
        """v_i^k."""
        return self.values[self.layout.v_index(i)[k - 1]]

    def velocities(self) -> np.ndarray:
        return self.values[self.layout.v_all]

    def estimates(self, i: int) -> np.ndarray:
        return self.values[self.layout.est_index(i)]

    def observer(self, i: int) -> np.ndarray:
        return self.values[self.layout.xi_index(i)]

    def with_values(self, values: np.ndarray) -> "StackedState":
        return StackedState(self.layout, values)

    def blocks(self) -> List[dict]:
        """Per-agent dictionaries (unflattened view)."""
        out = []
        for i in range(self.layout.profile.N):
            out.append({
                "x": self.action(i),
                "v": self.values[self.layout.v_index(i)],
                "estimates": self.estimates(i),
                "xi": self.observer(i),
            })
        return out

    @classmethod
    def from_blocks(cls, layout: StateLayout, blocks: Sequence[dict]) -> "StackedState":
        values = np.zeros(layout.size)
        for i, block in enumerate(blocks):
            values[layout.x_index(i)] = block["x"]
            values[layout.v_index(i)] = np.asarray(block.get("v", np.zeros(layout.v_index(i).shape))).reshape(layout.v_index(i).shape)
            values[layout.est_index(i)] = block.get("estimates", np.zeros(layout.est_index(i).size))
            values[layout.xi_index(i)] = block.get("xi", np.zeros(layout.xi_index(i).size))
        return cls(layout, values)
