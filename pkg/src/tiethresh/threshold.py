"""Epidemic-threshold machinery.

The system operator for period l is the ordered product S_{l-1} ... S_1 S_0
with per-step factors S_tau = (1-mu) I + lambda_max * min{B(tau), 1}.  The
spectral radius rho of that product governs stability of the disease-free
state; the disease dies out when rho < 1.  The value reported here is the
per-step normalization rho**(1/l), which stays O(1) as the period grows and
crosses 1 exactly when rho does.

Everything is matrix-free: the radius comes from power iteration on the
composite map v -> S_{l-1}( ... (S_0 v)), renormalizing after every factor
and accumulating the growth in log space so periods of thousands of factors
neither overflow nor underflow.  The deterministic mean-field iteration of
the infection probabilities lives here too; its one-period Jacobian at the
disease-free state is exactly the system operator, which the tests exploit.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .errors import StructuralError
from .tie_decay import TieMatrix

__all__ = [
    "SystemOperator",
    "SpectralRadiusResult",
    "CriticalValueSeries",
    "GridSeriesResult",
    "spectral_radius_product",
    "critical_value_series",
    "critical_value_grid",
    "fixed_period_values",
    "classify",
    "mean_field_step",
    "mean_field_trajectory",
]

DIES_OUT = "dies_out"
OUTBREAK = "outbreak"


def _capped_factor(snapshot) -> np.ndarray:
    a = snapshot.entries if isinstance(snapshot, TieMatrix) else np.asarray(snapshot, float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise StructuralError(f"factor must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise StructuralError("factor entries must be finite")
    return np.minimum(a, 1.0)


@dataclass(frozen=True)
class SystemOperator:
    """Ordered capped-snapshot factors plus the SIS rates defining each S_tau.

    ``factors[tau]`` is min{B(tau), 1}; application order is factors[0]
    first, i.e. the product S_{l-1} ... S_0 acting on a column vector.
    """

    factors: tuple
    lambda_max: float
    mu: float

    def __post_init__(self):
        facs = tuple(_capped_factor(f) for f in self.factors)
        if len(facs) < 1:
            raise StructuralError("a system operator needs at least one factor")
        n = facs[0].shape[0]
        if any(f.shape != (n, n) for f in facs):
            raise StructuralError("all factors must share one dimension")
        object.__setattr__(self, "factors", facs)

    @classmethod
    def from_snapshots(
        cls, snapshots: Iterable[TieMatrix], lambda_max: float, mu: float, l: int
    ) -> SystemOperator:
        facs = []
        for b in snapshots:
            facs.append(b)
            if len(facs) == l:
                break
        if len(facs) < l:
            raise StructuralError(f"period l={l} exceeds the {len(facs)} available snapshots")
        return cls(factors=tuple(facs), lambda_max=lambda_max, mu=mu)

    @property
    def l(self) -> int:
        return len(self.factors)

    @property
    def n(self) -> int:
        return self.factors[0].shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply the full (unnormalized) period product to ``v``."""
        v = np.asarray(v, dtype=float)
        for c in self.factors:
            v = (1.0 - self.mu) * v + self.lambda_max * (c @ v)
        return v


@dataclass(frozen=True)
class SpectralRadiusResult:
    per_period: float  # rho(S); may overflow to inf for very long periods
    per_step: float  # rho(S)**(1/l), the reported critical value
    converged: bool
    periods: int  # period applications consumed
    vector: np.ndarray  # final iterate (dominant direction when converged)


def _period_pass(factors, lam, mu, V):
    """One full period application, renormalizing after every factor.

    ``lam`` and ``mu`` are (M,) arrays pairing with the columns of ``V``.
    Returns the updated block and per-column log growth; a column collapsing
    to exactly zero is annihilated by the product (radius 0) and gets -inf.
    """
    logg = np.zeros(V.shape[1])
    dead = np.zeros(V.shape[1], dtype=bool)
    one_minus_mu = 1.0 - mu
    for c in factors:
        V = one_minus_mu * V + lam * (c @ V)
        norms = np.linalg.norm(V, axis=0)
        zero = norms == 0.0
        if zero.any():
            dead |= zero
            norms = np.where(zero, 1.0, norms)
            V[:, zero] = 1.0  # keep the block finite; these columns are flagged
        V = V / norms
        with np.errstate(divide="ignore"):
            logg += np.log(norms)
    logg[dead] = -np.inf
    return V, logg


def _power_iteration_block(factors, lam, mu, V, tol, max_periods):
    """Iterate whole periods until each column's per-step estimate settles.

    Convergence is a relative test between successive per-step estimates.
    Returns (per_step, log_growth, V, periods, converged), each per column.
    """
    l = len(factors)
    M = V.shape[1]
    est = np.full(M, np.nan)
    log_growth = np.full(M, np.nan)
    periods_used = np.zeros(M, dtype=np.int64)
    conv = np.zeros(M, dtype=bool)
    active = np.arange(M)
    V = np.array(V, dtype=float)
    for k in range(1, max_periods + 1):
        block, logg = _period_pass(factors, lam[active], mu[active], V[:, active])
        V[:, active] = block
        with np.errstate(over="ignore"):
            new_est = np.exp(logg / l)
        prev = est[active]
        est[active] = new_est
        log_growth[active] = logg
        periods_used[active] = k
        if k >= 2:
            settled = np.abs(new_est - prev) <= tol * np.maximum(np.abs(prev), 1e-300)
            if settled.any():
                conv[active[settled]] = True
                active = active[~settled]
        if active.size == 0:
            break
    return est, log_growth, V, periods_used, conv


def spectral_radius_product(
    op: SystemOperator,
    *,
    tol: float = 1e-8,
    max_periods: int = 10_000,
    v0: np.ndarray | None = None,
) -> SpectralRadiusResult:
    """Spectral radius of the period product, matrix-free.

    Starts from the normalized all-ones vector (the factors are nonnegative,
    so the dominant direction is nonnegative and the start has overlap with
    it).  Non-convergence at the period cap is reported via the flag with the
    last estimate; it is not silently resolved.
    """
    n = op.n
    start = np.ones(n) if v0 is None else np.asarray(v0, dtype=float)
    if start.shape != (n,):
        raise StructuralError(f"start vector must have shape ({n},)")
    nrm = np.linalg.norm(start)
    if nrm == 0:
        raise StructuralError("start vector must be nonzero")
    V = (start / nrm).reshape(n, 1)
    est, logg, V, periods, conv = _power_iteration_block(
        list(op.factors),
        np.array([op.lambda_max]),
        np.array([op.mu]),
        V,
        tol,
        max_periods,
    )
    with np.errstate(over="ignore"):
        per_period = float(np.exp(logg[0]))
    return SpectralRadiusResult(
        per_period=per_period,
        per_step=float(est[0]),
        converged=bool(conv[0]),
        periods=int(periods[0]),
        vector=V[:, 0],
    )


@dataclass(frozen=True)
class CriticalValueSeries:
    """Per-step critical values indexed by period l = 1, 2, ...

    ``converged_l`` is the first period where the trailing-window spread of
    the series drops to ``tol`` (None if that never happens), and
    ``converged_value`` the series value there.
    """

    per_step_values: np.ndarray
    converged_l: int | None
    converged_value: float | None
    window: int
    tol: float

    def rows(self):
        """(l, per_step_value, converged_flag) rows for CSV export."""
        for i, v in enumerate(self.per_step_values):
            l = i + 1
            yield l, float(v), bool(self.converged_l is not None and l >= self.converged_l)


@dataclass(frozen=True)
class GridSeriesResult:
    """Stopping-rule critical values for a whole (lambda, mu) grid.

    ``values[i, j]`` pairs lambdas[i] with mus[j]; ``converged_l`` is 0 where
    the series never met the stopping rule by l_max (the value is then the
    estimate at the last computed period).
    """

    lambdas: np.ndarray
    mus: np.ndarray
    values: np.ndarray  # (len(lambdas), len(mus))
    converged_l: np.ndarray  # (len(lambdas), len(mus)) int, 0 = not converged
    series: np.ndarray  # (l_used, cells) per-step estimates, NaN once a cell froze


def critical_value_grid(
    snapshots,
    lambdas,
    mus,
    l_max: int,
    window: int = 10,
    tol: float = 0.02,
    *,
    power_tol: float = 1e-8,
    max_periods: int = 10_000,
    stop_early: bool = True,
) -> GridSeriesResult:
    """Critical-value series with the trailing-window stopping rule, batched
    over every (lambda, mu) cell.

    All cells share the capped snapshot factors, and each period length warm
    starts its power iteration from the previous period's dominant direction,
    so extending the period costs one extra factor application per pass
    rather than a fresh computation.  Cells whose series has converged are
    frozen and drop out of the block.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    mus = np.asarray(mus, dtype=float)
    if window < 2:
        raise StructuralError(f"window must be >= 2, got {window}")
    if l_max < 1:
        raise StructuralError(f"l_max must be >= 1, got {l_max}")
    if hasattr(snapshots, "__len__") and l_max > len(snapshots):
        raise StructuralError(f"l_max={l_max} exceeds the {len(snapshots)} available snapshots")
    lam_cells = np.repeat(lambdas, mus.size)
    mu_cells = np.tile(mus, lambdas.size)
    M = lam_cells.size

    it = iter(snapshots)
    factors: list[np.ndarray] = []
    values = np.full((l_max, M), np.nan)
    conv_l = np.zeros(M, dtype=np.int64)
    conv_val = np.full(M, np.nan)
    # cells still iterated; with stop_early converged cells freeze and drop out,
    # otherwise every cell runs to l_max (full series for convergence plots)
    active = np.arange(M)
    V: np.ndarray | None = None
    l_used = 0

    for l in range(1, l_max + 1):
        try:
            factors.append(_capped_factor(next(it)))
        except StopIteration:
            raise StructuralError(
                f"l_max={l_max} exceeds the {l - 1} available snapshots"
            ) from None
        if V is None:
            n = factors[0].shape[0]
            V = np.full((n, M), 1.0 / math.sqrt(n))
        est, _, block, _, _ = _power_iteration_block(
            factors, lam_cells[active], mu_cells[active], V[:, active], power_tol, max_periods
        )
        V[:, active] = block
        values[l - 1, active] = est
        l_used = l
        if l >= window:
            pending = active[conv_l[active] == 0]
            if pending.size:
                win = values[l - window : l, pending]
                done = (win.max(axis=0) - win.min(axis=0)) <= tol
                conv_l[pending[done]] = l
                conv_val[pending[done]] = values[l - 1, pending[done]]
            if stop_early:
                active = active[conv_l[active] == 0]
        if (conv_l > 0).all() and stop_early:
            break

    # cells that never met the stopping rule keep their last estimate
    never = conv_l == 0
    final = conv_val.copy()
    final[never] = values[l_used - 1, never]
    return GridSeriesResult(
        lambdas=lambdas,
        mus=mus,
        values=final.reshape(lambdas.size, mus.size),
        converged_l=conv_l.reshape(lambdas.size, mus.size),
        series=values[:l_used],
    )


def critical_value_series(
    snapshots,
    lambda_max: float,
    mu: float,
    l_max: int,
    window: int = 10,
    tol: float = 0.02,
    *,
    power_tol: float = 1e-8,
    max_periods: int = 10_000,
    full: bool = False,
) -> CriticalValueSeries:
    """Per-step critical value as a function of the period length.

    Stops at the first period where the trailing ``window`` values spread at
    most ``tol`` (pass ``full=True`` to keep going to ``l_max`` anyway, e.g.
    for convergence plots).  A never-converging series is reported whole with
    ``converged_l=None``.
    """
    grid = critical_value_grid(
        snapshots,
        [lambda_max],
        [mu],
        l_max,
        window,
        tol,
        power_tol=power_tol,
        max_periods=max_periods,
        stop_early=not full,
    )
    series = grid.series[:, 0]
    series = series[~np.isnan(series)]
    cl = int(grid.converged_l[0, 0])
    return CriticalValueSeries(
        per_step_values=series,
        converged_l=cl if cl > 0 else None,
        converged_value=float(grid.values[0, 0]) if cl > 0 else None,
        window=window,
        tol=tol,
    )


def fixed_period_values(
    snapshots,
    lambdas,
    mus,
    l: int,
    *,
    power_tol: float = 1e-8,
    max_periods: int = 10_000,
):
    """Per-step critical values at one fixed period for a (lambda, mu) grid.

    Returns ``(values, converged)`` shaped (len(lambdas), len(mus)).
    """
    lambdas = np.asarray(lambdas, dtype=float)
    mus = np.asarray(mus, dtype=float)
    factors = []
    for b in snapshots:
        factors.append(_capped_factor(b))
        if len(factors) == l:
            break
    if len(factors) < l:
        raise StructuralError(f"period l={l} exceeds the {len(factors)} available snapshots")
    lam_cells = np.repeat(lambdas, mus.size)
    mu_cells = np.tile(mus, lambdas.size)
    n = factors[0].shape[0]
    V = np.full((n, lam_cells.size), 1.0 / math.sqrt(n))
    est, _, _, _, conv = _power_iteration_block(
        factors, lam_cells, mu_cells, V, power_tol, max_periods
    )
    return est.reshape(lambdas.size, mus.size), conv.reshape(lambdas.size, mus.size)


def classify(per_step_value: float) -> str:
    """Threshold verdict: values below 1 die out, 1 and above go to outbreak."""
    if not per_step_value > 0:
        raise StructuralError(f"critical value must be > 0, got {per_step_value}")
    return DIES_OUT if per_step_value < 1.0 else OUTBREAK


def mean_field_step(
    p: np.ndarray, capped_entries: np.ndarray, lambda_max: float, mu: float
) -> np.ndarray:
    """One exact iterate of the deterministic infection-probability map.

    p_i' = 1 - mu p_i - (1 - p_i) * prod_j (1 - lambda_max min{b_ij,1} p_j).
    The product form is evaluated directly (not in logs) so the map stays a
    polynomial, which the finite-difference Jacobian checks rely on.
    """
    xi = np.prod(1.0 - lambda_max * capped_entries * p, axis=1)
    return 1.0 - mu * p - (1.0 - p) * xi


def mean_field_trajectory(
    snapshots: Iterable[TieMatrix],
    lambda_max: float,
    mu: float,
    p0: np.ndarray,
    T: int,
) -> np.ndarray:
    """Iterate the mean-field map for T steps; row tau is p at step tau."""
    p = np.asarray(p0, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise StructuralError("initial probabilities must lie in [0, 1]")
    out = np.empty((T + 1, p.shape[0]))
    out[0] = p
    tau = 0
    for b in snapshots:
        if tau == T:
            break
        c = b.capped_entries() if isinstance(b, TieMatrix) else np.minimum(b, 1.0)
        p = mean_field_step(p, c, lambda_max, mu)
        tau += 1
        out[tau] = p
    if tau < T:
        raise StructuralError(f"T={T} exceeds the available snapshots (got {tau})")
    return out
