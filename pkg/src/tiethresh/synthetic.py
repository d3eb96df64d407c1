"""Synthetic inputs: connected Erdos-Renyi backbones, per-edge exponential
interaction streams, and the initial tie matrix."""

from __future__ import annotations

from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .errors import ConfigError, ResampleExhaustedError
from .events import EventLog
from .tie_decay import TieMatrix

__all__ = [
    "ErConfig",
    "WaitingTimeConfig",
    "generate_er",
    "generate_event_times",
    "initial_tie_matrix",
]

Edge = tuple[int, int]


@dataclass(frozen=True)
class ErConfig:
    """G(n, p) draw configuration."""

    n: int
    p: float
    require_connected: bool = True
    seed: int = 0
    max_attempts: int = 10_000

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if self.require_connected and self.p == 0.0 and self.n > 1:
            raise ConfigError("a connected graph is infeasible with p = 0 and n > 1")


@dataclass(frozen=True)
class WaitingTimeConfig:
    """Exponential inter-event gaps with mean ``beta`` steps per stream.

    ``beta`` is expressed in units of the step length ``dt``; the generator
    converts to absolute time internally (mean gap = beta * dt).  By default
    each undirected edge carries two independent directional streams (i->j
    and j->i), so a pair interacts with mean gap beta*dt/2; this matches the
    reference critical values, which are only reproduced at the doubled
    per-pair rate.  Set ``streams_per_edge=1`` for a single renewal stream
    per edge.
    """

    beta: float
    seed: int = 0
    dt: float = 1.0
    streams_per_edge: int = 2

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError(f"beta must be > 0, got {self.beta}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if self.streams_per_edge < 1:
            raise ConfigError(f"streams_per_edge must be >= 1, got {self.streams_per_edge}")


def _connected(n: int, edges: Sequence[Edge]) -> bool:
    # union-find with path halving
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = n
    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            components -= 1
    return components == 1


def _draw_edges(n: int, p: float, rng: np.random.Generator) -> list[Edge]:
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.shape[0]) < p
    return [(int(i), int(j)) for i, j in zip(iu[mask], ju[mask])]


def generate_er(cfg: ErConfig) -> list[Edge]:
    """Draw a G(n, p) edge set, resampling until connected when required.

    Each attempt uses a fresh RNG substream derived from the seed, so the
    result is deterministic for a fixed config and reproducible regardless
    of how many attempts earlier configs consumed.
    """
    for attempt in range(cfg.max_attempts):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(attempt,)))
        edges = _draw_edges(cfg.n, cfg.p, rng)
        if not cfg.require_connected or _connected(cfg.n, edges):
            return edges
    raise ResampleExhaustedError(
        f"no connected G({cfg.n}, {cfg.p}) draw within {cfg.max_attempts} attempts"
    )


def generate_event_times(
    edges: Sequence[Edge],
    w: WaitingTimeConfig,
    horizon: float,
    *,
    n: int | None = None,
) -> EventLog:
    """Per-edge renewal streams with exponential gaps, merged and time-sorted.

    Each stream's first event is a fresh exponential draw from t = 0 and the
    stream is truncated at ``horizon`` (absolute time).  Edges are processed
    in sorted order from a single RNG stream, so the log is deterministic for
    a fixed seed.
    """
    if horizon < 0:
        raise ConfigError(f"horizon must be >= 0, got {horizon}")
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    rng = np.random.default_rng(np.random.SeedSequence(w.seed))
    mean_gap = w.beta * w.dt
    times: list[float] = []
    pairs: list[Edge] = []
    for i, j in sorted(edges):
        for _ in range(w.streams_per_edge):
            t = rng.exponential(mean_gap)
            while t <= horizon:
                times.append(t)
                pairs.append((i, j))
                t += rng.exponential(mean_gap)
    order = np.argsort(np.asarray(times, dtype=float), kind="stable")
    t_arr = np.asarray(times, dtype=float)[order]
    p_arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)[order]
    return EventLog(times=t_arr, pairs=p_arr, n=n, horizon=float(horizon))


def initial_tie_matrix(n: int, edges: Sequence[Edge], strength: float = 0.5) -> TieMatrix:
    """Tie matrix with ``strength`` on every edge and 0 elsewhere."""
    if strength < 0:
        raise ConfigError(f"strength must be >= 0, got {strength}")
    a = np.zeros((n, n))
    for i, j in edges:
        a[i, j] = strength
        a[j, i] = strength
    return TieMatrix(a)
