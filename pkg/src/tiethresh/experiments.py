"""Experiment harness: parameter sweeps, correlation analysis, scenario
registry, and plot-ready CSV / JSON-manifest outputs.

Grid computations are batched: every (lambda, mu) cell shares the capped
snapshot factors, the critical-value series runs power iteration on one
n x cells block, and SIS replicates advance in lockstep through a single
pass over the snapshots.  All randomness derives from one master seed, so a
manifest regenerates every output byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from ._version import __version__ as _version
from .errors import ConfigError, StructuralError, UndefinedCorrelationError, UnknownScenarioError
from .events import EventLog
from .ingestion import DiscretizationPlan, choose_dt, discretize, parse_contact_file
from .sis import SISParams
from .synthetic import ErConfig, WaitingTimeConfig, generate_er, generate_event_times, initial_tie_matrix
from .threshold import critical_value_grid, critical_value_series, fixed_period_values
from .tie_decay import DecayParams, SnapshotSequence, TieMatrix
from .windowed import bin_windows, rescale_windows, simulate_windowed, window_csv_rows, windowed_threshold

__all__ = [
    "DEFAULT_GRID",
    "ExperimentConfig",
    "SweepGrid",
    "Instance",
    "build_instance",
    "grid_outbreak_means",
    "sweep",
    "boundary",
    "pcc",
    "run_scenario",
    "scenario_defaults",
    "SCENARIO_NAMES",
    "load_config_file",
    "default_out_dir",
]

DEFAULT_GRID = tuple(round(0.05 * k, 2) for k in range(1, 21))

# spawn-key indices carving independent substreams out of the master seed
_NETWORK, _EVENTS, _SIM, _OVERLAY = 0, 1, 2, 3


def derive_seed(master: int, index: int) -> int:
    """Deterministic integer sub-seed for component ``index``."""
    return int(np.random.SeedSequence(master, spawn_key=(index,)).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a scenario needs; one master seed drives all substreams."""

    scenario: str = ""
    n: int = 100
    p: float = 0.1
    alpha: float = 0.1
    beta: float = 100.0
    dt: float = 1.0
    steps: int = 1000
    l_max: int = 1000
    fixed_l: int | None = None  # bypass the stopping rule with one period length
    replicates: int = 10
    seed: int = 0
    lambdas: tuple = DEFAULT_GRID
    mus: tuple = DEFAULT_GRID
    window: int = 10
    mode: str = "literal"
    contact_file: str | None = None
    max_per_bin: int = 10
    init_strength: float = 0.5
    seed_fraction: float = 0.1
    series_window: int = 10
    series_tol: float = 0.02
    power_tol: float = 1e-6

    def __post_init__(self):
        for v in tuple(self.lambdas) + tuple(self.mus):
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"grid values must lie in (0, 1], got {v}")
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "mus", tuple(float(v) for v in self.mus))


@dataclass(frozen=True)
class Instance:
    """A fully materialized tie-decay network ready for sweeps."""

    n: int
    edges: list
    log: EventLog
    plan: DiscretizationPlan
    initial: TieMatrix
    snapshots: SnapshotSequence
    capped: list  # min{B(tau), 1} arrays, tau = 0..num_steps
    strength_sums: np.ndarray  # sum_ij B(tau) (uncapped), tau = 0..num_steps


def build_instance(cfg: ExperimentConfig) -> Instance:
    """Generate (or ingest) the event stream and materialize its snapshots."""
    if cfg.contact_file is None:
        edges = generate_er(ErConfig(cfg.n, cfg.p, require_connected=True,
                                     seed=derive_seed(cfg.seed, _NETWORK)))
        log = generate_event_times(
            edges,
            WaitingTimeConfig(cfg.beta, seed=derive_seed(cfg.seed, _EVENTS), dt=cfg.dt),
            horizon=cfg.steps * cfg.dt,
            n=cfg.n,
        )
        plan = DiscretizationPlan(dt=cfg.dt, num_steps=cfg.steps)
    else:
        log = parse_contact_file(cfg.contact_file)
        plan = choose_dt(log, cfg.max_per_bin, forced_dt=cfg.dt)
        # the initial ties overlay an ER draw on the observed nodes
        edges = generate_er(ErConfig(log.n, cfg.p, require_connected=False,
                                     seed=derive_seed(cfg.seed, _OVERLAY)))
    interactions = discretize(log, plan)
    initial = initial_tie_matrix(log.n, edges, cfg.init_strength)
    snapshots = SnapshotSequence(initial, interactions, DecayParams(cfg.alpha, plan.dt))
    capped = []
    sums = np.empty(len(snapshots))
    for tau, b in enumerate(snapshots):
        capped.append(b.capped_entries())
        sums[tau] = b.entries.sum()
    return Instance(
        n=log.n,
        edges=edges,
        log=log,
        plan=plan,
        initial=initial,
        snapshots=snapshots,
        capped=capped,
        strength_sums=sums,
    )


def grid_outbreak_means(
    capped,
    lambdas,
    mus,
    *,
    T: int,
    replicates: int,
    master_seed: int,
    seed_fraction: float = 0.1,
):
    """Mean final outbreak size per (lambda, mu) cell over ``replicates``.

    A single pass over the snapshots advances every cell and replicate in
    lockstep.  Each cell owns a counter-split substream of ``master_seed``
    with the same draw order as :func:`tiethresh.sis.simulate` (seed choice,
    then one infection and one recovery uniform per node per step), so a
    one-replicate cell reproduces ``simulate`` on the same substream exactly.

    Returns ``(means, finals)`` with shapes (L, M) and (L, M, replicates).
    """
    lambdas = np.asarray(lambdas, dtype=float)
    mus = np.asarray(mus, dtype=float)
    if T > len(capped):
        raise StructuralError(f"T={T} exceeds the {len(capped)} available snapshots")
    n = capped[0].shape[0]
    L, Mmu = lambdas.size, mus.size
    n_cells = L * Mmu
    cols = n_cells * replicates
    rngs = [
        np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(cell,)))
        for cell in range(n_cells)
    ]
    k_seeds = max(1, math.ceil(seed_fraction * n))
    infected = np.zeros((n, cols), dtype=bool)
    for cell in range(n_cells):
        for r in range(replicates):
            infected[rngs[cell].choice(n, size=k_seeds, replace=False),
                     cell * replicates + r] = True

    mu_cols = np.repeat(np.tile(mus, L), replicates)
    p_inf = np.empty((n, cols))
    u_inf = np.empty((n, cols))
    u_rec = np.empty((n, cols))
    group_width = Mmu * replicates
    for tau in range(T):
        c_tau = capped[tau]
        infected_f = infected.astype(float)
        for g in range(L):
            sl = slice(g * group_width, (g + 1) * group_width)
            with np.errstate(divide="ignore"):
                esc = np.log1p(-lambdas[g] * c_tau)
            # -inf only where lambda*b == 1; clamp so the 0-weight matmul terms
            # cannot produce NaN (exp(-1e6) underflows to the exact 0 we want)
            np.maximum(esc, -1e6, out=esc)
            p_inf[:, sl] = -np.expm1(esc @ infected_f[:, sl])
        for cell in range(n_cells):
            sl = slice(cell * replicates, (cell + 1) * replicates)
            u_inf[:, sl] = rngs[cell].random((n, replicates))
            u_rec[:, sl] = rngs[cell].random((n, replicates))
        new_inf = ~infected & (u_inf < p_inf)
        recovered = infected & (u_rec < mu_cols)
        infected = (infected & ~recovered) | new_inf
    finals = infected.sum(axis=0).reshape(L, Mmu, replicates)
    return finals.mean(axis=2), finals


@dataclass(frozen=True)
class SweepGrid:
    """Per-cell outputs of a (lambda, mu) sweep; rows pair with lambdas."""

    lambdas: np.ndarray
    mus: np.ndarray
    critical_values: np.ndarray  # per-step normalization
    converged_l: np.ndarray  # 0 where the stopping rule never fired (or fixed_l used)
    mean_outbreak: np.ndarray | None = None

    @property
    def cells(self) -> int:
        return self.lambdas.size * self.mus.size

    def outbreak_cell_count(self) -> int:
        """Number of cells whose critical value exceeds 1."""
        return int((self.critical_values > 1.0).sum())


def sweep(cfg: ExperimentConfig, instance: Instance | None = None, *, with_sims: bool = True) -> SweepGrid:
    """Critical values (stopping rule of the series, or ``fixed_l``) and,
    optionally, ensemble outbreak sizes for every grid cell."""
    inst = instance if instance is not None else build_instance(cfg)
    T = min(cfg.steps, inst.plan.num_steps)
    if cfg.fixed_l is not None:
        values, _ = fixed_period_values(
            inst.capped, cfg.lambdas, cfg.mus, cfg.fixed_l, power_tol=cfg.power_tol
        )
        conv = np.zeros_like(values, dtype=np.int64)
    else:
        l_max = min(cfg.l_max, T)
        grid = critical_value_grid(
            inst.capped,
            cfg.lambdas,
            cfg.mus,
            l_max,
            cfg.series_window,
            cfg.series_tol,
            power_tol=cfg.power_tol,
        )
        values, conv = grid.values, grid.converged_l
    if not np.all(np.isfinite(values)):
        raise StructuralError("sweep produced non-finite critical values")
    mean_outbreak = None
    if with_sims:
        mean_outbreak, _ = grid_outbreak_means(
            inst.capped[:T],
            cfg.lambdas,
            cfg.mus,
            T=T,
            replicates=cfg.replicates,
            master_seed=derive_seed(cfg.seed, _SIM),
            seed_fraction=cfg.seed_fraction,
        )
    return SweepGrid(
        lambdas=np.asarray(cfg.lambdas),
        mus=np.asarray(cfg.mus),
        critical_values=values,
        converged_l=conv,
        mean_outbreak=mean_outbreak,
    )


def boundary(grid: SweepGrid):
    """Per lambda, the smallest mu whose critical value is closest to 1.

    Returns (lambda, mu_star, value) triples; ties break toward smaller mu.
    """
    out = []
    for i, lam in enumerate(grid.lambdas):
        j = int(np.argmin(np.abs(grid.critical_values[i] - 1.0)))
        out.append((float(lam), float(grid.mus[j]), float(grid.critical_values[i, j])))
    return out


def pcc(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape or x.size < 2:
        raise StructuralError("pcc needs two samples of equal length >= 2")
    if np.all(x == x[0]) and np.all(y == y[0]):
        raise UndefinedCorrelationError("correlation of two constant samples is undefined")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise UndefinedCorrelationError("correlation with a constant sample is undefined")
    xc = x - x.mean()
    yc = y - y.mean()
    return float((xc @ yc) / math.sqrt((xc @ xc) * (yc @ yc)))


# ---------------------------------------------------------------------------
# output plumbing

def default_out_dir() -> Path:
    return Path(os.environ.get("TIETHRESH_OUT", "tiethresh_out"))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _grid_rows(grid: SweepGrid):
    for i, lam in enumerate(grid.lambdas):
        for j, mu in enumerate(grid.mus):
            row = [float(lam), float(mu), float(grid.critical_values[i, j]),
                   int(grid.converged_l[i, j])]
            if grid.mean_outbreak is not None:
                row.append(float(grid.mean_outbreak[i, j]))
            yield row


def _grid_header(grid: SweepGrid):
    header = ["lambda", "mu", "critical_value", "converged_l"]
    if grid.mean_outbreak is not None:
        header.append("mean_outbreak")
    return header


def _write_grid(out: Path, name: str, grid: SweepGrid) -> None:
    _write_csv(out / f"{name}.csv", _grid_header(grid), _grid_rows(grid))
    _write_csv(out / f"{name}_boundary.csv", ["lambda", "mu_star", "critical_value"],
               boundary(grid))


def _write_manifest(out: Path, cfg: ExperimentConfig, extra: dict) -> dict:
    manifest = {"package": "tiethresh", "version": _version,
                "config": asdict(cfg), **extra}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# scenarios

PCC_ALPHAS = (1e-1, 1e-2, 1e-3)
PCC_BETAS = (10.0, 50.0, 100.0)
PERIOD_PAIRS = ((0.3, 0.7), (0.4, 0.6))


def _scenario_validation(cfg: ExperimentConfig, out: Path) -> dict:
    rows = []
    pcc_values = {}
    wrote_grid = False
    for a in PCC_ALPHAS:
        for b in PCC_BETAS:
            grid = sweep(replace(cfg, alpha=a, beta=b))
            if (a, b) == (cfg.alpha, cfg.beta):
                _write_grid(out, "grid", grid)
                wrote_grid = True
            r = pcc(grid.mean_outbreak.ravel(), grid.critical_values.ravel())
            pcc_values[(a, b)] = r
            rows.append([a, b, r])
    if not wrote_grid:
        _write_grid(out, "grid", sweep(cfg))
    _write_csv(out / "pcc_table.csv", ["alpha", "beta", "pcc"], rows)
    return _write_manifest(out, cfg, {"pcc_table": {f"{a:g},{b:g}": v for (a, b), v in pcc_values.items()}})


def _parameter_sweep(cfg: ExperimentConfig, out: Path, param: str, values) -> dict:
    counts = []
    for v in values:
        variant = replace(cfg, **{param: v})
        grid = sweep(variant, with_sims=False)
        _write_grid(out, f"grid_{param}{v:g}", grid)
        counts.append([v, grid.outbreak_cell_count()])
    _write_csv(out / "outbreak_cell_counts.csv", [param, "cells_above_1"], counts)
    return _write_manifest(out, cfg, {param: list(values),
                                      "outbreak_cell_counts": [c for _, c in counts]})


def _scenario_decay(cfg: ExperimentConfig, out: Path) -> dict:
    return _parameter_sweep(cfg, out, "alpha", PCC_ALPHAS)


def _scenario_frequency(cfg: ExperimentConfig, out: Path) -> dict:
    return _parameter_sweep(cfg, out, "beta", PCC_BETAS)


def _scenario_sparsity(cfg: ExperimentConfig, out: Path) -> dict:
    return _parameter_sweep(cfg, out, "p", (0.02, 0.05, 0.10))


def _scenario_period_convergence(cfg: ExperimentConfig, out: Path) -> dict:
    inst = build_instance(cfg)
    rows = []
    summary = []
    for lam, mu in PERIOD_PAIRS:
        series = critical_value_series(
            inst.capped, lam, mu, min(cfg.l_max, inst.plan.num_steps),
            cfg.series_window, cfg.series_tol, power_tol=cfg.power_tol, full=True,
        )
        rows.extend([lam, mu, l, v, flag] for l, v, flag in series.rows())
        summary.append([lam, mu, series.converged_l or 0, series.converged_value or float("nan")])
    _write_csv(out / "series.csv", ["lambda", "mu", "l", "per_step_value", "converged"], rows)
    _write_csv(out / "series_summary.csv", ["lambda", "mu", "converged_l", "converged_value"], summary)
    return _write_manifest(out, cfg, {"pairs": [list(p) for p in PERIOD_PAIRS]})


def _scenario_real(cfg: ExperimentConfig, out: Path) -> dict:
    if cfg.contact_file is None:
        raise ConfigError("a contact file is required for real-data scenarios")
    inst = build_instance(cfg)
    grid = sweep(cfg, inst)
    _write_grid(out, "grid", grid)
    return _write_manifest(out, cfg, {
        "nodes": inst.n,
        "num_steps": inst.plan.num_steps,
        "dt": inst.plan.dt,
        "max_per_bin": inst.plan.max_per_bin,
        "events": len(inst.log),
    })


def _scenario_windowed_compare(cfg: ExperimentConfig, out: Path) -> dict:
    inst = build_instance(cfg)
    T = min(cfg.steps, inst.plan.num_steps)
    mu = cfg.mus[0] if len(cfg.mus) == 1 else 0.5
    lambdas = cfg.lambdas

    tie_grid = critical_value_grid(
        inst.capped, lambdas, [mu], min(cfg.l_max, T),
        cfg.series_window, cfg.series_tol, power_tol=cfg.power_tol,
    )
    tie_outbreak, _ = grid_outbreak_means(
        inst.capped[:T], lambdas, [mu], T=T, replicates=cfg.replicates,
        master_seed=derive_seed(cfg.seed, _SIM), seed_fraction=cfg.seed_fraction,
    )

    raw = bin_windows(inst.log, inst.plan.dt, cfg.window, num_steps=T)
    net = rescale_windows(raw, inst.snapshots)
    win_literal = np.empty(len(lambdas))
    win_expanded = np.empty(len(lambdas))
    win_outbreak = np.empty(len(lambdas))
    for i, lam in enumerate(lambdas):
        win_literal[i] = windowed_threshold(net, lam, mu, "literal", tol=cfg.power_tol).per_step
        win_expanded[i] = windowed_threshold(net, lam, mu, "expanded", tol=cfg.power_tol).per_step
        params = SISParams(lambda_max=lam, mu=mu, seed_fraction=cfg.seed_fraction,
                           rng_seed=derive_seed(cfg.seed, _SIM) + i)
        finals = [
            simulate_windowed(net, params, np.random.default_rng(
                np.random.SeedSequence(params.rng_seed, spawn_key=(r,))),
                initial=inst.initial, T=T).final_outbreak_size
            for r in range(cfg.replicates)
        ]
        win_outbreak[i] = float(np.mean(finals))

    rows = [
        [float(lam), float(tie_grid.values[i, 0]), float(win_literal[i]),
         float(win_expanded[i]), float(tie_outbreak[i, 0]), float(win_outbreak[i])]
        for i, lam in enumerate(lambdas)
    ]
    _write_csv(out / "compare.csv",
               ["lambda", "tiedecay_value", "windowed_literal", "windowed_expanded",
                "tiedecay_mean_outbreak", "windowed_mean_outbreak"], rows)
    _write_csv(out / "windows.csv", ["window", "i", "j", "strength"], window_csv_rows(net))
    spread = {
        "tiedecay_spread": float(tie_grid.values.max() - tie_grid.values.min()),
        "windowed_literal_spread": float(win_literal.max() - win_literal.min()),
    }
    return _write_manifest(out, cfg, spread)


SCENARIOS = {
    "validation": _scenario_validation,
    "decay-sweep": _scenario_decay,
    "frequency-sweep": _scenario_frequency,
    "sparsity-sweep": _scenario_sparsity,
    "period-convergence": _scenario_period_convergence,
    "real-workplace": _scenario_real,
    "real-conference": _scenario_real,
    "windowed-compare": _scenario_windowed_compare,
}

SCENARIO_NAMES = tuple(SCENARIOS)

_SCENARIO_OVERRIDES: dict[str, dict] = {
    "validation": {},
    "decay-sweep": {"p": 0.05, "beta": 100.0},
    "frequency-sweep": {"p": 0.05, "alpha": 1e-2},
    "sparsity-sweep": {"alpha": 1e-2, "beta": 100.0},
    "period-convergence": {"p": 0.05, "alpha": 1e-1, "beta": 100.0},
    "real-workplace": {"alpha": 1e-2, "dt": 1000.0, "fixed_l": 100, "steps": 10**9},
    "real-conference": {"alpha": 1e-2, "dt": 200.0, "fixed_l": 100, "steps": 10**9},
    "windowed-compare": {"mus": (0.5,)},
}


def scenario_defaults(name: str) -> ExperimentConfig:
    """Canonical configuration for a registry scenario."""
    if name not in SCENARIOS:
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}"
        )
    return ExperimentConfig(scenario=name, **_SCENARIO_OVERRIDES[name])


def run_scenario(name: str, cfg: ExperimentConfig | None = None,
                 out_dir: str | Path | None = None) -> dict:
    """Run a registry scenario, writing CSVs and a JSON manifest to ``out_dir``."""
    if name not in SCENARIOS:
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}"
        )
    if cfg is None:
        cfg = scenario_defaults(name)
    if cfg.scenario != name:
        cfg = replace(cfg, scenario=name)
    out = Path(out_dir) if out_dir is not None else default_out_dir() / name
    out.mkdir(parents=True, exist_ok=True)
    return SCENARIOS[name](cfg, out)


# ---------------------------------------------------------------------------
# config files: one "key = value" pair per line, '#' comments

_CONFIG_FIELD_TYPES = {f.name: f.type for f in ExperimentConfig.__dataclass_fields__.values()}


def load_config_file(path: str | Path) -> dict:
    """Parse a key = value config file into ExperimentConfig kwargs."""
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_FIELD_TYPES:
            raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
        out[key] = _coerce_config_value(key, value)
    return out


def _coerce_config_value(key: str, value: str):
    if key in ("lambdas", "mus"):
        return tuple(float(v) for v in value.replace(",", " ").split())
    if key in ("scenario", "mode", "contact_file"):
        return value
    if key == "fixed_l":
        return None if value.lower() in ("none", "") else int(value)
    if key in ("n", "steps", "l_max", "replicates", "seed", "window",
               "max_per_bin", "series_window"):
        return int(value)
    return float(value)
