"""Seeded experiment sweeps and CSV output."""

from __future__ import annotations

import csv
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import SolverConfig, SystemConfig, TaskCatalog
from .errors import InfeasibleRunError
from .orchestrator import RUNNERS, SCHEMES
from .scenario import build_scenario, scenario_streams
from .taskmodel import branch_feasibility, draw_tasks

KINDS = ("convergence", "sweep-users", "sweep-capacity")
ROW_COLUMNS = ("experiment", "scheme", "sweep_value", "bandwidth", "seed", "utility",
               "iterations", "feasible_fraction")
DEFAULT_USERS = (10, 20, 30, 40, 50)
DEFAULT_CAPACITIES = (50, 100, 150, 200, 250, 300, 350, 400)  # Gcycle/s
DEFAULT_BANDWIDTHS = (10e6, 50e6)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    values: tuple = ()
    num_seeds: int = 20
    schemes: tuple[str, ...] = SCHEMES
    bandwidths: tuple[float, ...] = DEFAULT_BANDWIDTHS
    base_seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.num_seeds < 1:
            raise ValueError("num_seeds must be >= 1")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ValueError(f"unknown schemes {bad}")
        vals = list(self.values)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")

    @property
    def sweep_values(self) -> tuple:
        if self.values:
            return tuple(self.values)
        if self.kind == "sweep-users":
            return DEFAULT_USERS
        if self.kind == "sweep-capacity":
            return DEFAULT_CAPACITIES
        return ()

    @property
    def seeds(self) -> range:
        return range(self.base_seed, self.base_seed + self.num_seeds)


def make_problem(cfg: SystemConfig, catalog: TaskCatalog, seed: int):
    """Scenario and tasks for one seed; independent of every other seed."""
    geo_rng, task_rng = scenario_streams(seed)
    scenario = build_scenario(cfg, seed=seed, rng=geo_rng)
    tasks = draw_tasks(cfg.num_users, cfg, catalog, task_rng)
    return scenario, tasks


def _run_cell(args):
    """One (config, seed) cell for all requested schemes -> list of (scheme, trace|None, frac)."""
    cfg, catalog, solver_cfg, seed, schemes, until_max = args
    scenario, tasks = make_problem(cfg, catalog, seed)
    local_ok, offload_ok = branch_feasibility(tasks, scenario, cfg)
    frac = float(np.mean(local_ok | offload_ok))
    out = []
    for scheme in schemes:
        try:
            trace = RUNNERS[scheme](scenario, tasks, cfg, solver_cfg, until_max=until_max)
            if not trace.report.feasible:
                raise AssertionError(f"{scheme} seed {seed}: infeasible decision {trace.report.violations()}")
            out.append((scheme, trace, 1.0))
        except InfeasibleRunError:
            out.append((scheme, None, frac))
    return out


def _map(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def run_experiment(spec: ExperimentSpec, cfg: SystemConfig | None = None,
                   catalog: TaskCatalog | None = None, solver_cfg: SolverConfig | None = None,
                   workers: int = 1) -> list[dict]:
    """Rows ``ROW_COLUMNS`` for every (sweep value, bandwidth, seed, scheme).

    ``convergence`` emits one row per outer iteration (``sweep_value`` is the
    iteration index, ``utility`` the objective after it) and runs every
    scheme for the full ``max_outer`` rounds.  Capacity sweep values are in
    Gcycle/s.  Infeasible seeds produce a row with ``utility = nan``.
    """
    cfg = cfg or SystemConfig()
    catalog = catalog or TaskCatalog()
    solver_cfg = solver_cfg or SolverConfig()

    cells = []  # (sweep_value, bandwidth, cfg)
    if spec.kind == "convergence":
        cells.append((None, cfg.bandwidth_total, cfg))
    else:
        for value in spec.sweep_values:
            for bw in spec.bandwidths:
                if spec.kind == "sweep-users":
                    c = replace(cfg, num_users=int(value), bandwidth_total=float(bw))
                else:
                    c = replace(cfg, mec_capacity=float(value) * 1e9, bandwidth_total=float(bw))
                cells.append((value, bw, c))

    until_max = spec.kind == "convergence"
    jobs = [(c, catalog, solver_cfg, seed, spec.schemes, until_max)
            for (_, _, c) in cells for seed in spec.seeds]
    results = _map(_run_cell, jobs, workers)

    rows = []
    it = iter(results)
    for value, bw, _ in cells:
        for seed in spec.seeds:
            for scheme, trace, frac in next(it):
                base = {"experiment": spec.kind, "scheme": scheme, "bandwidth": bw, "seed": seed}
                if trace is None:
                    rows.append({**base, "sweep_value": value if value is not None else 0,
                                 "utility": math.nan, "iterations": 0, "feasible_fraction": frac})
                elif spec.kind == "convergence":
                    for i, obj in enumerate(trace.outer_objectives):
                        rows.append({**base, "sweep_value": i, "utility": obj,
                                     "iterations": trace.iterations, "feasible_fraction": frac})
                else:
                    rows.append({**base, "sweep_value": value, "utility": trace.utility,
                                 "iterations": trace.iterations, "feasible_fraction": frac})
    return rows


def summarize(rows: list[dict]) -> list[dict]:
    """Seed-mean utility per (experiment, scheme, sweep_value, bandwidth), nan rows skipped."""
    groups: dict[tuple, list[float]] = {}
    counts: dict[tuple, int] = {}
    for r in rows:
        key = (r["experiment"], r["scheme"], r["sweep_value"], r["bandwidth"])
        counts[key] = counts.get(key, 0) + 1
        if not math.isnan(r["utility"]):
            groups.setdefault(key, []).append(r["utility"])
    out = []
    for key, n in counts.items():
        vals = groups.get(key, [])
        out.append({
            "experiment": key[0], "scheme": key[1], "sweep_value": key[2], "bandwidth": key[3],
            "mean_utility": float(np.mean(vals)) if vals else math.nan,
            "std_utility": float(np.std(vals)) if vals else math.nan,
            "feasible_seeds": len(vals), "seeds": n,
        })
    return out


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def emit_csv(rows, path, columns=None) -> Path:
    """Write a header and one line per row; replaces ``path`` atomically.

    Floats are written with 17 significant digits so they parse back exactly.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    columns = tuple(columns or rows[0].keys())
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(r.get(c)) for c in columns])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
