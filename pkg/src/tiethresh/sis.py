"""Monte Carlo SIS dynamics on a tie-decay snapshot sequence.

A susceptible node j escapes infection in one step with probability
prod_i (1 - lambda_max * min{b_ij, 1}) over infected neighbors i; an
infected node recovers with probability mu.  Updates are synchronous: both
infections and recoveries are evaluated against the previous state, so a
node infected in a step cannot recover in that same step and a recovering
node cannot be reinfected in it.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from itertools import islice

import numpy as np

from .errors import ConfigError, StructuralError
from .tie_decay import TieMatrix

__all__ = [
    "SISParams",
    "SISState",
    "Trajectory",
    "EnsembleResult",
    "infection_probability",
    "sis_step",
    "seed_state",
    "simulate",
    "run_ensemble",
    "replicate_rng",
    "trajectory_csv_rows",
]


@dataclass(frozen=True)
class SISParams:
    lambda_max: float
    mu: float
    seed_fraction: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lambda_max <= 1.0:
            raise ConfigError(f"lambda_max must lie in [0, 1], got {self.lambda_max}")
        if not 0.0 <= self.mu <= 1.0:
            raise ConfigError(f"mu must lie in [0, 1], got {self.mu}")
        if not 0.0 < self.seed_fraction <= 1.0:
            raise ConfigError(f"seed_fraction must lie in (0, 1], got {self.seed_fraction}")

    def num_seeds(self, n: int) -> int:
        return max(1, math.ceil(self.seed_fraction * n))


@dataclass(frozen=True)
class SISState:
    """Per-node compartment flags (True = infected) at step ``step``."""

    infected: np.ndarray  # (n,) bool
    step: int = 0

    def __post_init__(self):
        a = np.array(self.infected, dtype=bool)
        a.flags.writeable = False
        object.__setattr__(self, "infected", a)

    @property
    def n(self) -> int:
        return self.infected.shape[0]

    def count(self) -> int:
        return int(self.infected.sum())


@dataclass(frozen=True)
class Trajectory:
    """Infected counts per step; index 0 is the seeded initial state."""

    infected_counts: np.ndarray  # (T+1,) int

    @property
    def final_outbreak_size(self) -> int:
        return int(self.infected_counts[-1])

    def __len__(self) -> int:
        return self.infected_counts.shape[0]


@dataclass(frozen=True)
class EnsembleResult:
    final_sizes: np.ndarray  # (replicates,)
    trajectories: np.ndarray  # (replicates, T+1)

    @property
    def mean_final_size(self) -> float:
        return float(self.final_sizes.mean())


def replicate_rng(master_seed: int, k: int) -> np.random.Generator:
    """Counter-split substream for replicate ``k``, reproducible in isolation."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(k,)))


def infection_probability(
    infected: np.ndarray, b: TieMatrix | np.ndarray, lambda_max: float
) -> np.ndarray:
    """Per-node probability of catching the infection this step.

    The escape probability is accumulated in log space so that many infected
    neighbors cannot underflow the product.  Entries for currently infected
    nodes are computed but unused by the update rule.
    """
    entries = b.entries if isinstance(b, TieMatrix) else b
    lam_b = lambda_max * np.minimum(entries, 1.0)
    cols = np.flatnonzero(infected)
    if cols.size == 0:
        return np.zeros(entries.shape[0])
    with np.errstate(divide="ignore"):
        esc_log = np.log1p(-lam_b[:, cols]).sum(axis=1)
    return -np.expm1(esc_log)


def sis_step(
    state: SISState, b: TieMatrix, params: SISParams, rng: np.random.Generator
) -> SISState:
    """One synchronous update of the whole population against snapshot ``b``."""
    if b.n != state.n:
        raise StructuralError(f"snapshot has n={b.n} but state has n={state.n}")
    p_inf = infection_probability(state.infected, b, params.lambda_max)
    u_inf = rng.random(state.n)
    u_rec = rng.random(state.n)
    new_infections = ~state.infected & (u_inf < p_inf)
    recoveries = state.infected & (u_rec < params.mu)
    return SISState(infected=(state.infected & ~recoveries) | new_infections,
                    step=state.step + 1)


def seed_state(n: int, params: SISParams, rng: np.random.Generator) -> SISState:
    """Infect ceil(seed_fraction * n) uniformly random nodes at step 0."""
    k = params.num_seeds(n)
    infected = np.zeros(n, dtype=bool)
    infected[rng.choice(n, size=k, replace=False)] = True
    return SISState(infected=infected, step=0)


def simulate(
    snapshots: Iterable[TieMatrix],
    params: SISParams,
    T: int,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Run one SIS realization for ``T`` steps against snapshots B(0)..B(T-1).

    Draw order is fixed (seed choice, then per step one infection and one
    recovery uniform per node), so a fixed generator state reproduces the
    trajectory exactly.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(params.rng_seed))
    if hasattr(snapshots, "__len__") and T > len(snapshots):  # type: ignore[arg-type]
        raise StructuralError(
            f"T={T} exceeds the {len(snapshots)} available snapshots"  # type: ignore[arg-type]
        )
    it = iter(snapshots)
    try:
        first = next(it)
    except StopIteration:
        raise StructuralError("empty snapshot sequence") from None
    state = seed_state(first.n, params, rng)
    counts = np.empty(T + 1, dtype=np.int64)
    counts[0] = state.count()
    for tau, b in enumerate(islice(_chain_first(first, it), T)):
        state = sis_step(state, b, params, rng)
        counts[tau + 1] = state.count()
    if state.step != T:
        raise StructuralError(f"T={T} exceeds the available snapshots (got {state.step})")
    return Trajectory(infected_counts=counts)


def _chain_first(first: TieMatrix, rest):
    yield first
    yield from rest


def run_ensemble(
    snapshots: Iterable[TieMatrix],
    params: SISParams,
    T: int,
    replicates: int,
) -> EnsembleResult:
    """Independent replicates on counter-split substreams of the master seed."""
    if replicates < 1:
        raise ConfigError(f"replicates must be >= 1, got {replicates}")
    trajectories = np.empty((replicates, T + 1), dtype=np.int64)
    for k in range(replicates):
        traj = simulate(snapshots, params, T, rng=replicate_rng(params.rng_seed, k))
        trajectories[k] = traj.infected_counts
    return EnsembleResult(final_sizes=trajectories[:, -1].copy(), trajectories=trajectories)


def trajectory_csv_rows(result: EnsembleResult):
    """Yield (replicate, step, infected_count) rows for CSV export."""
    for k, row in enumerate(result.trajectories):
        for step, count in enumerate(row):
            yield k, step, int(count)
