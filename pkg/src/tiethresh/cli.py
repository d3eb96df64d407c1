"""Command-line interface.

Exit codes: 0 success, 1 module error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from ._version import __version__
from .errors import TieThreshError, UnknownScenarioError
from .events import write_event_log
from .experiments import (
    SCENARIO_NAMES,
    ExperimentConfig,
    _write_csv,
    boundary,
    default_out_dir,
    derive_seed,
    load_config_file,
    run_scenario,
    scenario_defaults,
    sweep,
)
from .ingestion import DiscretizationPlan, choose_dt, discretize, parse_contact_file
from .sis import SISParams, run_ensemble, trajectory_csv_rows
from .synthetic import ErConfig, WaitingTimeConfig, generate_er, generate_event_times, initial_tie_matrix
from .threshold import classify, critical_value_series
from .tie_decay import DecayParams, SnapshotSequence


class _UsageError(Exception):
    pass


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", help="output directory (default $TIETHRESH_OUT)")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--lmax", type=int)
    p.add_argument("--lambda", dest="lambda_max", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--grid", help="lambda/mu grid as start:stop:step or a comma list")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--mode", choices=["literal", "expanded"])
    p.add_argument("--max-per-bin", dest="max_per_bin", type=int)
    p.add_argument("--init-strength", dest="init_strength", type=float)
    p.add_argument("--seed-fraction", dest="seed_fraction", type=float)
    p.add_argument("--contact-file", dest="contact_file")


def _parse_grid(spec: str) -> tuple:
    if ":" in spec:
        start, stop, step = (float(v) for v in spec.split(":"))
        k = int(round((stop - start) / step)) + 1
        return tuple(round(start + i * step, 10) for i in range(k))
    return tuple(float(v) for v in spec.split(","))


_FLAG_FIELDS = (
    "n", "p", "alpha", "beta", "dt", "steps", "replicates", "seed", "window",
    "mode", "max_per_bin", "init_strength", "seed_fraction", "contact_file",
)


def _config_from_args(args, base: ExperimentConfig | None = None) -> ExperimentConfig:
    kwargs = {}
    if getattr(args, "config", None):
        kwargs.update(load_config_file(args.config))
    for name in _FLAG_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            kwargs[name] = v
    if getattr(args, "lmax", None) is not None:
        kwargs["l_max"] = args.lmax
    if getattr(args, "grid", None):
        g = _parse_grid(args.grid)
        kwargs.setdefault("lambdas", g)
        kwargs.setdefault("mus", g)
    if getattr(args, "lambda_max", None) is not None:
        kwargs["lambdas"] = (args.lambda_max,)
    if getattr(args, "mu", None) is not None:
        kwargs["mus"] = (args.mu,)
    if base is not None:
        return replace(base, **kwargs)
    return ExperimentConfig(**kwargs)


def _out_dir(args) -> Path:
    out = Path(args.out) if getattr(args, "out", None) else default_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise _UsageError(f"missing required flag(s): {', '.join(missing)}")


def _load_events(args, cfg: ExperimentConfig):
    """Events + initial ties for simulate/threshold, from files or synthetic."""
    if getattr(args, "events", None):
        log = parse_contact_file(args.events, relabel=False, shift_times=False, n=args.n)
        if getattr(args, "edges", None):
            pairs = [tuple(int(v) for v in line.split(",")[:2])
                     for line in Path(args.edges).read_text().splitlines()[1:] if line.strip()]
            initial = initial_tie_matrix(log.n, pairs, cfg.init_strength)
        else:
            initial = initial_tie_matrix(log.n, [], cfg.init_strength)
    else:
        edges = generate_er(ErConfig(cfg.n, cfg.p, seed=derive_seed(cfg.seed, 0)))
        log = generate_event_times(
            edges, WaitingTimeConfig(cfg.beta, seed=derive_seed(cfg.seed, 1), dt=cfg.dt),
            horizon=cfg.steps * cfg.dt, n=cfg.n)
        initial = initial_tie_matrix(cfg.n, edges, cfg.init_strength)
    num_steps = args.steps if args.steps else max(1, math.ceil(log.max_time() / cfg.dt))
    plan = DiscretizationPlan(dt=cfg.dt, num_steps=num_steps)
    snapshots = SnapshotSequence(initial, discretize(log, plan), DecayParams(cfg.alpha, cfg.dt))
    return log, plan, snapshots


def cmd_generate(args) -> int:
    cfg = _config_from_args(args)
    edges = generate_er(ErConfig(cfg.n, cfg.p, seed=derive_seed(cfg.seed, 0)))
    log = generate_event_times(
        edges, WaitingTimeConfig(cfg.beta, seed=derive_seed(cfg.seed, 1), dt=cfg.dt),
        horizon=cfg.steps * cfg.dt, n=cfg.n)
    out = _out_dir(args)
    write_event_log(log, out / "events.txt")
    _write_csv(out / "edges.csv", ["i", "j"], edges)
    with open(out / "manifest.json", "w") as fh:
        json.dump({"command": "generate", "version": __version__,
                   "n": cfg.n, "p": cfg.p, "beta": cfg.beta, "dt": cfg.dt,
                   "steps": cfg.steps, "seed": cfg.seed,
                   "edges": len(edges), "events": len(log)}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(log)} events on {len(edges)} edges to {out}")
    return 0


def cmd_ingest(args) -> int:
    cfg = _config_from_args(args)
    log = parse_contact_file(args.input)
    plan = choose_dt(log, cfg.max_per_bin, forced_dt=args.dt)
    out = _out_dir(args)
    write_event_log(log, out / "events.txt")
    if log.labels is not None:
        _write_csv(out / "node_map.csv", ["dense_id", "original_id"],
                   ((k, lab) for k, lab in enumerate(log.labels)))
    with open(out / "plan.json", "w") as fh:
        json.dump({"nodes": log.n, "events": len(log), "dt": plan.dt,
                   "num_steps": plan.num_steps, "max_per_bin": plan.max_per_bin,
                   "forced": plan.forced, "satisfied": plan.satisfied},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"nodes={log.n} events={len(log)} dt={plan.dt:g} "
          f"num_steps={plan.num_steps} max_per_bin={plan.max_per_bin}")
    return 0


def cmd_simulate(args) -> int:
    _require(args, "lambda_max", "mu")
    cfg = _config_from_args(args)
    _, plan, snapshots = _load_events(args, cfg)
    params = SISParams(lambda_max=args.lambda_max, mu=args.mu,
                       seed_fraction=cfg.seed_fraction, rng_seed=cfg.seed)
    T = min(cfg.steps, plan.num_steps) if args.steps is None else args.steps
    result = run_ensemble(list(snapshots), params, T, cfg.replicates)
    out = _out_dir(args)
    _write_csv(out / "trajectories.csv", ["replicate", "step", "infected_count"],
               trajectory_csv_rows(result))
    print(f"mean final outbreak size over {cfg.replicates} replicates: "
          f"{result.mean_final_size:g} (of n={snapshots.n})")
    return 0


def cmd_threshold(args) -> int:
    _require(args, "lambda_max", "mu")
    cfg = _config_from_args(args)
    _, plan, snapshots = _load_events(args, cfg)
    l_max = min(cfg.l_max, plan.num_steps)
    series = critical_value_series(snapshots, args.lambda_max, args.mu, l_max,
                                   cfg.series_window, cfg.series_tol,
                                   power_tol=cfg.power_tol)
    out = _out_dir(args)
    _write_csv(out / "series.csv", ["l", "per_step_value", "converged"], series.rows())
    if series.converged_l is None:
        value = float(series.per_step_values[-1])
        print(f"no convergence by l={l_max}; last per-step value {value:.6g} "
              f"-> {classify(value)}")
    else:
        print(f"converged at l={series.converged_l}: per-step value "
              f"{series.converged_value:.6g} -> {classify(series.converged_value)}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    grid = sweep(cfg)
    out = _out_dir(args)
    rows = []
    for i, lam in enumerate(grid.lambdas):
        for j, mu in enumerate(grid.mus):
            rows.append([float(lam), float(mu), float(grid.critical_values[i, j]),
                         int(grid.converged_l[i, j]), float(grid.mean_outbreak[i, j])])
    _write_csv(out / "grid.csv",
               ["lambda", "mu", "critical_value", "converged_l", "mean_outbreak"], rows)
    _write_csv(out / "boundary.csv", ["lambda", "mu_star", "critical_value"], boundary(grid))
    print(f"swept {grid.cells} cells; {grid.outbreak_cell_count()} above threshold")
    return 0


def cmd_compare_windowed(args) -> int:
    base = scenario_defaults("windowed-compare")
    cfg = _config_from_args(args, base)
    manifest = run_scenario("windowed-compare", cfg, _out_dir(args))
    print(f"tie-decay spread {manifest['tiedecay_spread']:.3g}, "
          f"windowed literal spread {manifest['windowed_literal_spread']:.3g}")
    return 0


def cmd_run_scenario(args) -> int:
    base = scenario_defaults(args.name)
    cfg = _config_from_args(args, base)
    out = Path(args.out) if args.out else default_out_dir() / args.name
    out.mkdir(parents=True, exist_ok=True)
    run_scenario(args.name, cfg, out)
    print(f"scenario {args.name} written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiethresh",
        description="Tie-decay temporal networks: SIS epidemics and epidemic thresholds",
    )
    parser.add_argument("--version", action="version", version=f"tiethresh {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthetic ER backbone + event stream")
    _add_common_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="parse and normalize a contact file")
    p.add_argument("input", help="contact file, one 't i j' record per line")
    _add_common_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("simulate", help="SIS ensemble on a tie-decay network")
    p.add_argument("--events", help="event file (defaults to a synthetic stream)")
    p.add_argument("--edges", help="initial-tie edge list CSV")
    _add_common_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("threshold", help="critical-value series in the period length")
    p.add_argument("--events", help="event file (defaults to a synthetic stream)")
    p.add_argument("--edges", help="initial-tie edge list CSV")
    _add_common_flags(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("sweep", help="(lambda, mu) grid of outbreaks and critical values")
    _add_common_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-windowed", help="tie-decay vs fixed-window baseline")
    _add_common_flags(p)
    p.set_defaults(func=cmd_compare_windowed)

    p = sub.add_parser("run-scenario", help="run a named experiment scenario")
    p.add_argument("name", help=f"one of: {', '.join(SCENARIO_NAMES)}")
    _add_common_flags(p)
    p.set_defaults(func=cmd_run_scenario)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"tiethresh: {exc}", file=sys.stderr)
        return 2
    except UnknownScenarioError as exc:
        print(f"tiethresh: {exc}", file=sys.stderr)
        return 2
    except TieThreshError as exc:
        print(f"tiethresh: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"tiethresh: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
