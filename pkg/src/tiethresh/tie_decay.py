"""Tie-strength matrices and their evolution in time.

The tie strength between a pair of nodes jumps by +1 whenever the pair
interacts and decays exponentially (rate ``alpha``) in between.  Discretized
with step length ``dt``, one step of the recurrence is

    B_new = exp(-alpha * dt) * B_old + A,

where ``A`` counts the interactions that fell inside the step (an interaction
at t' with (tau-1)*dt < t' <= tau*dt belongs to step tau).  The closed-form
continuous evolution is available for cross-checking the recurrence.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import StructuralError

__all__ = [
    "TieMatrix",
    "InteractionMatrix",
    "DecayParams",
    "SnapshotSequence",
    "step",
    "closed_form_strength",
    "capped",
]


@dataclass(frozen=True)
class TieMatrix:
    """Symmetric nonnegative tie-strength matrix with a zero diagonal.

    The entry array is copied and frozen on construction; stepping produces
    new values, so instances can be shared across workers without locking.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise StructuralError(f"tie matrix must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise StructuralError("tie matrix must be symmetric")
        if np.any(np.diagonal(a) != 0.0):
            raise StructuralError("tie matrix must have a zero diagonal (no self-ties)")
        if np.any(a < 0.0) or not np.all(np.isfinite(a)):
            raise StructuralError("tie strengths must be finite and nonnegative")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def zeros(cls, n: int) -> TieMatrix:
        return cls(np.zeros((n, n)))

    def capped_entries(self) -> np.ndarray:
        """Elementwise min(b, 1), as a fresh writable array."""
        return np.minimum(self.entries, 1.0)


@dataclass(frozen=True)
class InteractionMatrix:
    """Multiset of node pairs interacting during one step.

    A pair may appear more than once when several contacts fall in the same
    step; the recurrence then increments that tie by the count.
    """

    n: int
    pairs: np.ndarray  # (k, 2) integer array; repeated rows = repeated contacts

    def __post_init__(self):
        p = np.array(self.pairs, dtype=np.int64).reshape(-1, 2)
        if p.size:
            if p.min() < 0 or p.max() >= self.n:
                raise StructuralError(f"pair endpoints must lie in [0, {self.n})")
            if np.any(p[:, 0] == p[:, 1]):
                raise StructuralError("self-interactions are not allowed")
        p.flags.writeable = False
        object.__setattr__(self, "pairs", p)

    @classmethod
    def empty(cls, n: int) -> InteractionMatrix:
        return cls(n, np.empty((0, 2), dtype=np.int64))

    def __len__(self) -> int:
        return self.pairs.shape[0]

    def counts(self) -> np.ndarray:
        """Symmetric matrix counting this step's contacts per pair."""
        a = np.zeros((self.n, self.n))
        if len(self):
            np.add.at(a, (self.pairs[:, 0], self.pairs[:, 1]), 1.0)
            np.add.at(a, (self.pairs[:, 1], self.pairs[:, 0]), 1.0)
        return a


@dataclass(frozen=True)
class DecayParams:
    """Decay coefficient (per unit time) and step duration."""

    alpha: float
    dt: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise StructuralError(f"alpha must be > 0, got {self.alpha}")
        if not self.dt > 0:
            raise StructuralError(f"dt must be > 0, got {self.dt}")

    @property
    def step_factor(self) -> float:
        """Per-step decay multiplier exp(-alpha * dt)."""
        return math.exp(-self.alpha * self.dt)


def step(b: TieMatrix, a: InteractionMatrix, d: DecayParams) -> TieMatrix:
    """Advance one step: decay every tie, then add 1 per contact in ``a``."""
    if a.n != b.n:
        raise StructuralError(
            f"node count mismatch: tie matrix has n={b.n}, interactions have n={a.n}"
        )
    decayed = d.step_factor * b.entries
    if len(a) == 0:
        return TieMatrix(decayed)
    return TieMatrix(decayed + a.counts())


def closed_form_strength(
    b0: float,
    alpha: float,
    event_times: Sequence[float] | np.ndarray,
    t: float,
) -> float:
    """Tie strength of one pair at time ``t`` under the continuous evolution.

    Returns b0 * exp(-alpha*t) plus one exponentially decayed unit per past
    interaction.  An interaction at exactly ``t`` is included: the discrete
    recurrence assigns a boundary event to the step ending there, so the
    snapshot at the boundary already carries its increment, and the closed
    form must agree with the recurrence at step boundaries.
    """
    if not alpha > 0:
        raise StructuralError(f"alpha must be > 0, got {alpha}")
    if t < 0:
        raise StructuralError(f"query time must be >= 0, got {t}")
    times = np.asarray(event_times, dtype=float)
    if times.ndim != 1:
        raise StructuralError("event_times must be one-dimensional")
    if times.size and np.any(np.diff(times) < 0):
        raise StructuralError("event_times must be sorted ascending")
    past = times[times <= t]
    return b0 * math.exp(-alpha * t) + float(np.exp(-alpha * (t - past)).sum())


def capped(b: TieMatrix) -> TieMatrix:
    """Elementwise min(b_ij, 1): the saturation used by infection probabilities."""
    return TieMatrix(np.minimum(b.entries, 1.0))


class SnapshotSequence:
    """Lazily evaluated tie-matrix snapshots B(0), B(1), ..., B(num_steps).

    Entry 0 is the initial matrix; entry tau is the result of tau
    applications of the recurrence.  Iteration replays the recurrence, so the
    sequence can be walked repeatedly without storing every snapshot; callers
    that need random access should materialize ``list(seq)`` themselves.
    """

    def __init__(
        self,
        initial: TieMatrix,
        interactions: Iterable[InteractionMatrix],
        decay: DecayParams,
    ):
        self._initial = initial
        self._interactions = list(interactions)
        self._decay = decay
        for a in self._interactions:
            if a.n != initial.n:
                raise StructuralError(
                    f"interaction matrix with n={a.n} does not match n={initial.n}"
                )

    @property
    def n(self) -> int:
        return self._initial.n

    @property
    def decay(self) -> DecayParams:
        return self._decay

    @property
    def initial(self) -> TieMatrix:
        return self._initial

    @property
    def num_steps(self) -> int:
        return len(self._interactions)

    def __len__(self) -> int:
        return len(self._interactions) + 1

    def __iter__(self) -> Iterator[TieMatrix]:
        b = self._initial
        yield b
        for a in self._interactions:
            b = step(b, a, self._decay)
            yield b
