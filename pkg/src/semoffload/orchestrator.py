"""Alternating optimisation of capacities and offloading/compression.

``run_algorithm1`` alternates the KKT capacity allocation with the SCA
compression step.  ``run_ac`` replaces the capacity step by an even split;
``run_wcr`` pins every compression ratio to 1.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .capacity import capacity_instance, even_capacity, min_capacities, solve_capacity
from .compression import (
    compression_instance,
    eta_bounds,
    solve_compression,
    solve_without_compression,
)
from .config import SolverConfig, SystemConfig
from .errors import BudgetInfeasibleError, InfeasibleRunError, UserInfeasibleError
from .scenario import Scenario
from .taskmodel import (
    ConstraintReport,
    Decision,
    UserTasks,
    branch_feasibility,
    check_constraints,
    system_utility,
)

SCHEMES = ("proposed", "ac", "wcr")


@dataclass
class RunTrace:
    scheme: str
    outer_objectives: list[float]
    inner_traces: list[list[float]]
    decision: Decision
    report: ConstraintReport
    converged: bool
    wall_time: float
    seed: int | None = None
    forced_local: list[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.outer_objectives) - 1

    @property
    def utility(self) -> float:
        return self.outer_objectives[-1]

    def rows(self):
        return [
            {"iteration": i, "objective": obj, "scheme": self.scheme, "seed": self.seed}
            for i, obj in enumerate(self.outer_objectives)
        ]


def write_traces(traces, path) -> None:
    """CSV with columns iteration, objective, scheme, seed."""
    from .experiments import emit_csv

    rows = [r for tr in traces for r in tr.rows()]
    emit_csv(rows, path, columns=("iteration", "objective", "scheme", "seed"))


# ---------------------------------------------------------------------------

def _even_split(x, scenario, cfg):
    f = np.zeros(len(x))
    for k in range(scenario.num_sbs):
        members = scenario.users_of(k)
        off = members[x[members] > 0]
        if off.size:
            f[off] = cfg.mec_capacity / off.size
    return f


def initial_decision(scenario: Scenario, tasks: UserTasks, cfg: SystemConfig,
                     compress: bool = True, pinned_local=None) -> Decision:
    """Starting point: offload wherever feasible under an even capacity split.

    Offloaders start at the middle of their feasible eta interval (eta = 1
    without compression).  Users that can meet their deadline neither
    locally nor under the even split, but can with more capacity, start
    offloading at the accuracy floor and are rescued by the first capacity
    step.
    """
    n = len(tasks)
    pinned = np.zeros(n, dtype=bool) if pinned_local is None else np.asarray(pinned_local)
    candidate = (~pinned).astype(float)
    trial = Decision(candidate, np.ones(n), _even_split(candidate, scenario, cfg))
    inst = compression_instance(tasks, trial, scenario, cfg)
    lo, hi, ok = eta_bounds(inst)
    if compress:
        eta0 = np.where(ok, 0.5 * (lo + np.where(ok, hi, lo)), 1.0)
    else:
        ok = ok & (hi >= 1.0)
        eta0 = np.ones(n)
    x0 = np.where(ok & ~pinned, 1.0, 0.0)

    rescue = (x0 == 0) & ~pinned & ~inst.local_ok()
    x0 = np.where(rescue, 1.0, x0)
    eta0 = np.where(rescue, np.minimum(1.0, inst.eta_floor()) if compress else 1.0, eta0)
    eta0 = np.where(x0 > 0, eta0, 1.0)
    return Decision(x0, 1.0 / eta0, _even_split(x0, scenario, cfg))


def _capacity_step(decision, scenario, tasks, cfg, even):
    """New capacities for the current (x, eps); deadline-infeasible offloaders go local."""
    x = decision.offload.copy()
    f = np.zeros(len(x))
    forced = []
    for k in range(scenario.num_sbs):
        members = scenario.users_of(k)
        while True:
            inst = capacity_instance(members, tasks, Decision(x, decision.ratio, f), scenario, cfg)
            f_min, infeasible = min_capacities(inst)
            alloc = even_capacity(inst) if even else None
            if even:
                short = inst.offloaders & (alloc < f_min * (1 - 1e-12))
                infeasible = infeasible | short
            if infeasible.any():
                drop = members[infeasible]
                x[drop] = 0.0
                forced.extend(drop.tolist())
                continue
            if not even:
                alloc = solve_capacity(inst)
            f[members] = alloc
            break
    ratio = np.where(x > 0, decision.ratio, 1.0)
    return Decision(x, ratio, f), forced


def _compression_step(decision, scenario, tasks, cfg, solver_cfg, compress):
    inst = compression_instance(tasks, decision, scenario, cfg)
    x_prev = decision.offload
    eta_prev = decision.effective_fraction
    if compress:
        sol, state = solve_compression(inst, x_prev, eta_prev, tol=solver_cfg.inner_tol,
                                       max_iter=solver_cfg.max_inner)
        inner = state.trace
    else:
        sol = solve_without_compression(inst, incumbent=(x_prev, eta_prev))
        inner = [float(np.sum(sol.objective))]
    capacity = np.where(sol.offload > 0, decision.capacity, 0.0)
    return Decision(sol.offload, sol.ratio, capacity), inner


def _run(scheme, scenario, tasks, cfg, solver_cfg, init=None, until_max=False):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    solver_cfg = solver_cfg or SolverConfig()
    start = time.perf_counter()
    compress = scheme != "wcr"
    even = scheme == "ac"

    local_ok, offload_ok = branch_feasibility(tasks, scenario, cfg)
    if not compress:
        # offloading uncompressed: full volume must fit the deadline
        trial = Decision(np.ones(len(tasks)), np.ones(len(tasks)), np.full(len(tasks), cfg.mec_capacity))
        inst = compression_instance(tasks, trial, scenario, cfg)
        _, hi, ok = eta_bounds(inst)
        offload_ok = ok & (hi >= 1.0)
    dead = ~local_ok & ~offload_ok
    if dead.any():
        raise InfeasibleRunError(f"{scheme}: no feasible branch", np.flatnonzero(dead))
    pinned = ~offload_ok

    decision = init.copy() if init is not None else initial_decision(
        scenario, tasks, cfg, compress=compress, pinned_local=pinned)
    if not compress:
        decision.ratio = np.ones(len(tasks))
    objectives = [_safe_utility(tasks, decision, scenario, cfg)]
    inner_traces = []
    forced_all = []
    converged = False
    try:
        for _ in range(solver_cfg.max_outer):
            decision, forced = _capacity_step(decision, scenario, tasks, cfg, even)
            forced_all.extend(forced)
            decision, inner = _compression_step(decision, scenario, tasks, cfg, solver_cfg, compress)
            inner_traces.append(inner)
            objectives.append(system_utility(tasks, decision, scenario, cfg))
            if abs(objectives[-1] - objectives[-2]) <= solver_cfg.outer_tol:
                converged = True
                if not until_max:
                    break
    except (BudgetInfeasibleError, UserInfeasibleError) as exc:
        users = getattr(exc, "users", ())
        raise InfeasibleRunError(f"{scheme}: {exc}", users) from exc

    report = check_constraints(tasks, decision, scenario, cfg)
    return RunTrace(scheme, objectives, inner_traces, decision, report, converged,
                    time.perf_counter() - start, scenario.seed, sorted(set(forced_all)))


def _safe_utility(tasks, decision, scenario, cfg):
    """Utility of a possibly deadline-violating starting point (nan if undefined)."""
    try:
        return system_utility(tasks, decision, scenario, cfg)
    except ValueError:
        return float("nan")


def run_algorithm1(scenario: Scenario, tasks: UserTasks, cfg: SystemConfig,
                   solver_cfg: SolverConfig | None = None, init: Decision | None = None,
                   until_max: bool = False) -> RunTrace:
    """Proposed scheme: KKT capacities alternated with SCA compression/offloading.

    Stops when two consecutive utilities differ by at most ``outer_tol`` or
    after ``max_outer`` rounds; with ``until_max`` all rounds are executed.
    """
    return _run("proposed", scenario, tasks, cfg, solver_cfg, init, until_max)


def run_ac(scenario, tasks, cfg, solver_cfg=None, init=None, until_max=False) -> RunTrace:
    """Average-computing baseline: even capacity split among each SBS's offloaders."""
    return _run("ac", scenario, tasks, cfg, solver_cfg, init, until_max)


def run_wcr(scenario, tasks, cfg, solver_cfg=None, init=None, until_max=False) -> RunTrace:
    """Without-compression baseline: eps = 1, offload iff it beats local computing."""
    return _run("wcr", scenario, tasks, cfg, solver_cfg, init, until_max)


RUNNERS = {"proposed": run_algorithm1, "ac": run_ac, "wcr": run_wcr}
