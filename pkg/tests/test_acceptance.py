"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from semoffload.capacity import solve_capacity
from semoffload.compression import exact_user_oracle, solve_compression
from semoffload.config import FitParams, SolverConfig, SystemConfig, TaskCatalog
from semoffload.experiments import make_problem
from semoffload.orchestrator import RUNNERS
from semoffload.scenario import subcarrier_rate
from semoffload.taskmodel import branch_feasibility, check_constraints

from .conftest import record
from .instances import capacity_grid_oracle, random_capacity_instance, random_compression_instances

pytestmark = pytest.mark.acceptance

CFG = SystemConfig()
CATALOG = TaskCatalog()
SOLVER = SolverConfig()
SEEDS = range(50)
SWEEP_SEEDS = range(20)

# every (label, trace, problem, cfg) produced here, for the constraint audit
EMITTED = []


def _run(scheme, cfg, seed):
    scenario, tasks = make_problem(cfg, CATALOG, seed)
    trace = RUNNERS[scheme](scenario, tasks, cfg, SOLVER)
    EMITTED.append((f"{scheme}/seed{seed}", trace, scenario, tasks, cfg))
    return trace


@pytest.fixture(scope="module")
def default_runs():
    return {s: [_run(s, CFG, seed) for seed in SEEDS] for s in ("proposed", "ac", "wcr")}


def _sweep_means(scheme, cfgs):
    return [float(np.mean([_run(scheme, c, seed).utility for seed in SWEEP_SEEDS])) for c in cfgs]


def test_c1_compression_oracle():
    start = time.perf_counter()
    inst = random_compression_instances(np.random.default_rng(0), 1000)
    sol, _ = solve_compression(inst)
    oracle = exact_user_oracle(inst)
    elapsed = time.perf_counter() - start
    gap = oracle.objective - sol.objective
    close = float(np.mean(gap <= 0.01))
    excess = float(np.max(sol.objective - oracle.objective))
    ok = close >= 0.95 and excess <= 1e-6 and elapsed < 30
    record("1 compression oracle", ok,
           f"within 0.01: {close:.1%} (need >= 95%), max excess {excess:.2e}, {elapsed:.2f} s")
    assert ok


def test_c2_capacity_oracle():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for i in range(200):
        inst = random_capacity_instance(rng, 2 + i % 2)
        got = inst.objective(solve_capacity(inst))
        oracle = capacity_grid_oracle(inst, inst.budget / 200)
        worst = max(worst, (oracle - got) / abs(oracle))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed < 60
    record("2 capacity oracle", ok, f"worst relative shortfall {worst:.2e} (<= 1e-3), {elapsed:.2f} s")
    assert ok


def test_c3_convergence(default_runs):
    traces = default_runs["proposed"]
    converged = float(np.mean([t.converged and t.iterations <= 10 for t in traces]))
    drops = []
    for t in traces:
        obj = np.array([v for v in t.outer_objectives if math.isfinite(v)])
        drops.append(float(np.max(obj[:-1] - obj[1:], initial=0.0)))
    worst_drop = max(drops)
    ok = converged >= 0.9 and worst_drop <= 1e-6
    record("3 convergence", ok, f"converged {converged:.0%} of 50 seeds, worst step decrease {worst_drop:.2e}")
    assert ok


def test_c4_baseline_dominance(default_runs):
    prop = np.array([t.utility for t in default_runs["proposed"]])
    ac = np.array([t.utility for t in default_runs["ac"]])
    wcr = np.array([t.utility for t in default_runs["wcr"]])
    m_ac, m_wcr = float(np.min(prop - ac)), float(np.min(prop - wcr))
    ok = m_ac >= -1e-6 and m_wcr >= -1e-6
    record("4 baseline dominance", ok, f"min(proposed - AC) {m_ac:.4g}, min(proposed - WCR) {m_wcr:.4g}")
    assert ok


def test_c5_user_sweep():
    users = (10, 20, 30, 40)
    means = _sweep_means("proposed", [CFG.with_(num_users=u, bandwidth_total=10e6) for u in users])
    ok = all(b > a for a, b in zip(means, means[1:]))
    record("5 user sweep", ok, "means " + ", ".join(f"U={u}: {m:.2f}" for u, m in zip(users, means)))
    assert ok


def test_c6_capacity_sweep():
    caps = (50, 100, 200, 400)
    cfgs = [CFG.with_(mec_capacity=c * 1e9, bandwidth_total=10e6) for c in caps]
    prop = _sweep_means("proposed", cfgs)
    wcr = _sweep_means("wcr", cfgs)
    peak = caps[int(np.argmax(prop))]
    interior = peak not in (caps[0], caps[-1])
    wcr_ok = all(b >= a - 1e-9 for a, b in zip(wcr, wcr[1:]))
    ok = interior and wcr_ok
    record("6 capacity sweep", ok,
           f"proposed peak at {peak} Gc/s (need interior); means "
           + ", ".join(f"{c}: {m:.3f}" for c, m in zip(caps, prop))
           + f"; WCR non-decreasing: {wcr_ok}")
    assert ok


def test_c7_constraint_soundness(default_runs):
    # runs after criteria 3-6 (file order), so EMITTED holds their decisions too
    assert EMITTED
    bad = []
    for label, trace, scenario, tasks, cfg in EMITTED:
        report = check_constraints(tasks, trace.decision, scenario, cfg)
        if not report.feasible:
            bad.append((label, report.violations()))
    ok = not bad
    record("7 constraint soundness", ok, f"{len(EMITTED)} decisions audited, {len(bad)} with violations")
    assert ok, bad[:5]


def test_c8_formula_spot_checks():
    fit = FitParams()
    alpha = fit.min_volume(85.0)
    hand = (80 / 15) ** (1 / 0.6)
    r = subcarrier_rate(10e6, 50, 1.0, 1e-11, 0.0, 1e-13)
    hand_r = 200e3 * math.log2(1 + 1e-11 / 1e-13)
    ok = abs(alpha - hand) <= 1e-6 * hand and abs(alpha - 16.28) <= 5e-3 and abs(r - hand_r) <= 1e-9 * hand_r
    record("8 formula spot checks", ok, f"alpha(85%) = {alpha:.6f}, rate = {r:.6f} b/s")
    assert ok


def test_c9_calibration_gate():
    feasible = total = 0
    for seed in SEEDS:
        scenario, tasks = make_problem(CFG, CATALOG, seed)
        local_ok, offload_ok = branch_feasibility(tasks, scenario, CFG)
        feasible += int(np.sum(local_ok | offload_ok))
        total += len(tasks)
    frac = feasible / total
    ok = frac >= 0.95
    record("9 calibration gate", ok, f"{frac:.1%} of {total} users feasible for some branch")
    assert ok
