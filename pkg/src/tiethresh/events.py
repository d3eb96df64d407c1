"""Interaction event logs and their on-disk text format.

One record per line, whitespace-separated: ``t i j``.  Lines starting with
``#`` are comments.  The synthetic generator writes this format and the
contact-ingestion parser reads it, so synthetic and real data share one
pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .errors import StructuralError

__all__ = ["EventLog", "write_event_log"]


@dataclass(frozen=True)
class EventLog:
    """Timestamped undirected contacts between node pairs, sorted by time."""

    times: np.ndarray  # (m,) float, nondecreasing, in [0, horizon]
    pairs: np.ndarray  # (m, 2) int, endpoints in [0, n), i != j
    n: int
    horizon: float
    labels: tuple | None = None  # original node identifiers, index = dense id

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        p = np.array(self.pairs, dtype=np.int64).reshape(-1, 2)
        if t.shape != (p.shape[0],):
            raise StructuralError("times and pairs must have matching lengths")
        if t.size:
            if np.any(np.diff(t) < 0):
                raise StructuralError("event times must be nondecreasing")
            if t[0] < 0 or t[-1] > self.horizon:
                raise StructuralError("event times must lie in [0, horizon]")
            if p.min() < 0 or p.max() >= self.n:
                raise StructuralError(f"node ids must lie in [0, {self.n})")
            if np.any(p[:, 0] == p[:, 1]):
                raise StructuralError("self-contacts are not allowed")
        if self.horizon < 0:
            raise StructuralError("horizon must be nonnegative")
        if self.labels is not None and len(self.labels) != self.n:
            raise StructuralError("labels must have one entry per node")
        t.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "pairs", p)

    def __len__(self) -> int:
        return self.times.shape[0]

    def max_time(self) -> float:
        return float(self.times[-1]) if len(self) else 0.0


def _format_time(t: float) -> str:
    # %.17g round-trips doubles and prints integral times without a decimal
    return f"{t:.17g}"


def write_event_log(log: EventLog, destination: str | Path | IO[str]) -> None:
    """Write ``log`` in the one-record-per-line ``t i j`` text format."""
    if hasattr(destination, "write"):
        _write_records(log, destination)
    else:
        with open(destination, "w") as fh:
            _write_records(log, fh)


def _write_records(log: EventLog, fh: IO[str]) -> None:
    for t, (i, j) in zip(log.times, log.pairs):
        fh.write(f"{_format_time(t)} {i} {j}\n")
