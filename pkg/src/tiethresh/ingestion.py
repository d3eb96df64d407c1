"""Contact-log ingestion: parsing, step-length selection, and binning into
per-step interaction matrices.

Input format is one whitespace-separated record ``t i j`` per line with ``#``
comments, matching publicly distributed face-to-face contact datasets (extra
metadata columns after the third field are ignored).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .errors import ContactParseError, StructuralError
from .events import EventLog
from .tie_decay import InteractionMatrix

__all__ = [
    "DiscretizationPlan",
    "parse_contact_file",
    "choose_dt",
    "discretize",
]


@dataclass(frozen=True)
class DiscretizationPlan:
    """Step length, total step count, and the observed per-bin contact load.

    ``satisfied`` is False when no candidate step length met the requested
    per-bin bound and the plan fell back to the native resolution.
    ``max_per_bin == 0`` means the load was not measured (synthetic plans).
    """

    dt: float
    num_steps: int
    max_per_bin: int = 0
    forced: bool = False
    satisfied: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise StructuralError(f"dt must be > 0, got {self.dt}")
        if self.num_steps < 1:
            raise StructuralError(f"num_steps must be >= 1, got {self.num_steps}")


def _read_lines(source: str | Path | bytes | IO) -> list[str]:
    if isinstance(source, bytes):
        return source.decode().splitlines()
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode()
        return data.splitlines()
    return Path(source).read_text().splitlines()


def parse_contact_file(
    source: str | Path | bytes | IO,
    *,
    relabel: bool = True,
    shift_times: bool = True,
    n: int | None = None,
) -> EventLog:
    """Parse a contact log into a normalized :class:`EventLog`.

    With ``relabel=True`` (the default, for raw datasets) node identifiers
    are remapped to dense ids in [0, N) by order of first appearance in the
    time-sorted log, and the original identifiers are kept in ``log.labels``.
    With ``relabel=False`` the identifiers must already be dense integers
    (synthetic logs round-tripping through the text format); pass ``n`` to
    cover nodes that never interact.

    Duplicate records are kept; times are shifted so the earliest is 0
    unless ``shift_times=False``.
    """
    records: list[tuple[float, str, str]] = []
    for lineno, raw in enumerate(_read_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 3:
            raise ContactParseError(
                f"expected at least 3 fields 't i j', got {len(fields)}", lineno
            )
        try:
            t = float(fields[0])
        except ValueError:
            raise ContactParseError(f"non-numeric timestamp {fields[0]!r}", lineno) from None
        i_tok, j_tok = fields[1], fields[2]
        if not relabel:
            try:
                int(i_tok), int(j_tok)
            except ValueError:
                raise ContactParseError(
                    f"non-integer node id in {i_tok!r} {j_tok!r}", lineno
                ) from None
        if i_tok == j_tok:
            raise ContactParseError(f"self-contact on node {i_tok!r}", lineno)
        records.append((t, i_tok, j_tok))

    times = np.asarray([r[0] for r in records], dtype=float)
    order = np.argsort(times, kind="stable")
    times = times[order]

    labels: tuple | None = None
    if relabel:
        index: dict[str, int] = {}
        pairs = np.empty((len(records), 2), dtype=np.int64)
        for row, k in enumerate(order):
            _, i_tok, j_tok = records[k]
            pairs[row, 0] = index.setdefault(i_tok, len(index))
            pairs[row, 1] = index.setdefault(j_tok, len(index))
        n_nodes = len(index)
        labels = tuple(index.keys())
    else:
        pairs = np.asarray(
            [(int(records[k][1]), int(records[k][2])) for k in order], dtype=np.int64
        ).reshape(-1, 2)
        n_nodes = n if n is not None else (int(pairs.max()) + 1 if len(pairs) else 0)

    if n is not None:
        if len(pairs) and pairs.max() >= n:
            raise ContactParseError(f"node id {int(pairs.max())} outside [0, {n})")
        n_nodes = n

    if shift_times and times.size:
        times = times - times[0]
    horizon = float(times[-1]) if times.size else 0.0
    return EventLog(times=times, pairs=pairs, n=n_nodes, horizon=horizon, labels=labels)


def _bin_indices(times: np.ndarray, dt: float) -> np.ndarray:
    # event at t' with (tau-1)*dt < t' <= tau*dt lands in bin tau; t = 0 in bin 1
    idx = np.ceil(times / dt).astype(np.int64)
    return np.maximum(idx, 1)


def _max_bin_load(times: np.ndarray, dt: float) -> int:
    idx = _bin_indices(times, dt)
    return int(np.bincount(idx).max())


def _candidate_grid(native: float, span: float) -> list[float]:
    # 1-2-5 multiples of the native resolution, up to one whole-span bin
    candidates = []
    scale = 1.0
    while True:
        for m in (1.0, 2.0, 5.0):
            c = m * scale * native
            candidates.append(c)
            if c >= span:
                return candidates
        scale *= 10.0


def choose_dt(
    log: EventLog,
    max_per_bin: int,
    *,
    native_resolution: float = 20.0,
    forced_dt: float | None = None,
) -> DiscretizationPlan:
    """Pick the largest step length keeping every bin at or below ``max_per_bin``.

    Candidates are 1-2-5 multiples of the data's native resolution.  A
    user-forced ``forced_dt`` is accepted as-is; the per-bin load is then
    only reported, not enforced.
    """
    if len(log) == 0:
        raise StructuralError("cannot choose a step length for an empty event log")
    if max_per_bin < 1:
        raise StructuralError(f"max_per_bin must be >= 1, got {max_per_bin}")
    t_max = log.max_time()

    if forced_dt is not None:
        if not forced_dt > 0:
            raise StructuralError(f"forced dt must be > 0, got {forced_dt}")
        load = _max_bin_load(log.times, forced_dt)
        num_steps = max(1, math.ceil(t_max / forced_dt))
        return DiscretizationPlan(
            dt=float(forced_dt),
            num_steps=num_steps,
            max_per_bin=load,
            forced=True,
            satisfied=load <= max_per_bin,
        )

    best: float | None = None
    for c in _candidate_grid(native_resolution, max(t_max, native_resolution)):
        if _max_bin_load(log.times, c) <= max_per_bin:
            best = c
    if best is None:
        # no candidate satisfies the bound; fall back to the native resolution
        best = native_resolution
        satisfied = False
    else:
        satisfied = True
    num_steps = max(1, math.ceil(t_max / best))
    return DiscretizationPlan(
        dt=float(best),
        num_steps=num_steps,
        max_per_bin=_max_bin_load(log.times, best),
        forced=False,
        satisfied=satisfied,
    )


def discretize(log: EventLog, plan: DiscretizationPlan) -> list[InteractionMatrix]:
    """Bin the log into one interaction matrix per step.

    Every event lands in exactly one bin (boundary events in the earlier
    legal bin), so the total pair count across steps equals the log length.
    """
    empty = InteractionMatrix.empty(log.n)
    if len(log) == 0:
        return [empty] * plan.num_steps
    idx = _bin_indices(log.times, plan.dt)
    if idx.max() > plan.num_steps:
        raise StructuralError(
            f"event at t={log.max_time()} falls outside the {plan.num_steps}-step plan"
        )
    order = np.argsort(idx, kind="stable")
    sorted_idx = idx[order]
    sorted_pairs = log.pairs[order]
    out: list[InteractionMatrix] = []
    for tau in range(1, plan.num_steps + 1):
        lo = np.searchsorted(sorted_idx, tau, side="left")
        hi = np.searchsorted(sorted_idx, tau, side="right")
        out.append(empty if lo == hi else InteractionMatrix(log.n, sorted_pairs[lo:hi]))
    return out
