"""
Exosystem models.

An Exosystem is the disturbance generator w' = S w, d = D w with its initial
condition. Agents never see w0: they receive an ExoModel holding (S, D, K) only.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from neflow.core.errors import ValidationError

# Observer closed loop must satisfy max Re(eig(S - K D)) < -STABILITY_MARGIN
STABILITY_MARGIN = 0.0


def _closed_loop_stable(S: np.ndarray, D: np.ndarray, K: np.ndarray) -> bool:
    if S.shape[0] == 0:
        return True
    return bool(np.linalg.eigvals(S - K @ D).real.max() < -STABILITY_MARGIN)


@dataclass(frozen=True)
class ExoModel:
    """What an agent knows about its disturbance: (S, D) and its observer gain K."""

    S: np.ndarray
    D: np.ndarray
    K: np.ndarray

    @property
    def q(self) -> int:
        return int(self.S.shape[0])


@dataclass(frozen=True)
class Exosystem:
    """
    w' = S w, d = D w, w(0) = w0.

    S is q x q, D is n x q, w0 has length q and K (when set) is q x n.
    """

    S: np.ndarray
    D: np.ndarray
    w0: np.ndarray
    K: Optional[np.ndarray] = None
    kind: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.S, dtype=float)) if np.size(self.S) else np.zeros((0, 0))
        w0 = np.atleast_1d(np.asarray(self.w0, dtype=float)) if np.size(self.w0) else np.zeros(0)
        q = S.shape[0]
        if S.shape != (q, q):
            raise ValidationError(f"S must be square, got shape {S.shape}")
        D = np.asarray(self.D, dtype=float)
        if D.ndim == 1:
            D = D.reshape(-1, q) if q else D.reshape(-1, 0)
        if D.ndim != 2 or D.shape[1] != q:
            raise ValidationError(f"D must have {q} columns, got shape {D.shape}")
        if w0.shape != (q,):
            raise ValidationError(f"w0 must have length {q}, got shape {w0.shape}")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "w0", w0)

        if self.K is not None:
            K = np.asarray(self.K, dtype=float).reshape(q, D.shape[0])
            if not _closed_loop_stable(S, D, K):
                raise ValidationError("observer gain K does not make S - K D Hurwitz")
            object.__setattr__(self, "K", K)

    @property
    def q(self) -> int:
        return int(self.S.shape[0])

    @property
    def n(self) -> int:
        return int(self.D.shape[0])

    @property
    def has_gain(self) -> bool:
        return self.K is not None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "S": self.S.tolist(),
            "D": self.D.tolist(),
            "w0": self.w0.tolist(),
            "K": None if self.K is None else self.K.tolist(),
            "params": self.params,
        }


@dataclass(frozen=True)
class ExoCertificate:
    """Validity flags of an exosystem (flags, not exceptions)."""

    marginally_stable: bool
    observable: bool
    observer_stable: Optional[bool] = None
    observability_rank: int = 0
    q: int = 0

    @property
    def valid(self) -> bool:
        return self.marginally_stable and self.observable

    def to_dict(self) -> dict:
        return {
            "marginally_stable": self.marginally_stable,
            "observable": self.observable,
            "observer_stable": self.observer_stable,
            "observability_rank": self.observability_rank,
            "q": self.q,
        }
