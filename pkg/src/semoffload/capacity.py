"""MEC capacity allocation for one SBS given offloading and compression.

Each user u contributes ``ln(L*A_u) - ln(T_u + C_u / f_u)`` where ``A_u`` is
its accuracy, ``T_u`` the delay that does not depend on ``f`` (local compute
or uplink transfer) and ``C_u`` the cycles executed on the server (zero for
local users).  The allocation maximises the sum subject to
``T_u + C_u/f_u <= t_limit_u`` and ``sum f <= budget``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import BudgetInfeasibleError
from .numeric import BracketedScalarProblem, bisect_root
from .scenario import Scenario
from .taskmodel import Decision, UserTasks, accuracy, comm_delay, local_delay, overhead_cycles


@dataclass
class CapacityInstance:
    accuracy_const: np.ndarray  # A^delta, percent
    fixed_delay: np.ndarray  # A^beta, s
    work: np.ndarray  # cycles on the server, 0 for local users
    delay_limit: np.ndarray  # s
    budget: float  # cycles/s
    weight: float = 1.0

    def __post_init__(self):
        self.accuracy_const = np.asarray(self.accuracy_const, dtype=float)
        self.fixed_delay = np.asarray(self.fixed_delay, dtype=float)
        self.work = np.asarray(self.work, dtype=float)
        self.delay_limit = np.asarray(self.delay_limit, dtype=float)

    @property
    def offloaders(self) -> np.ndarray:
        return self.work > 0

    def delays(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            comp = np.where(self.offloaders, self.work / np.where(f > 0, f, 0.0), 0.0)
        return self.fixed_delay + comp

    def objective(self, f) -> float:
        t = self.delays(f)
        if np.any(~np.isfinite(t)):
            return -math.inf
        return float(np.sum(np.log(self.weight * self.accuracy_const) - np.log(t)))


def min_capacities(inst: CapacityInstance) -> tuple[np.ndarray, np.ndarray]:
    """Smallest capacity meeting each offloader's deadline.

    Returns ``(f_min, infeasible)``; ``f_min`` is inf where the fixed delay
    alone already reaches the limit and 0 for local users.
    """
    slack = inst.delay_limit - inst.fixed_delay
    off = inst.offloaders
    infeasible = off & (slack <= 0)
    with np.errstate(divide="ignore"):
        f_min = np.where(off, inst.work / np.where(slack > 0, slack, 1.0), 0.0)
    f_min = np.where(infeasible, np.inf, f_min)
    return f_min, infeasible


def _stationary_capacity(lam, fixed, work):
    """Positive root of lam*T f^2 + lam*C f - C = 0 (T may be 0)."""
    return 2.0 * work / (lam * work + np.sqrt((lam * work) ** 2 + 4.0 * lam * fixed * work))


def _fill_budget(f, f_min, budget):
    """Move the leftover (or excess) budget onto the unclipped users, keeping f >= f_min."""
    total = f.sum()
    if total == budget:
        return f
    room = f - f_min
    spare = budget - f_min.sum()
    if room.sum() > 0:
        return f_min + spare * room / room.sum()
    return f_min + spare / len(f)


def solve_capacity(inst: CapacityInstance, tol: float = 1e-13) -> np.ndarray:
    """KKT allocation: bisection on the budget multiplier.

    Returns one entry per user; local users get 0.  The budget is used in
    full whenever there is at least one offloader, since every offloader's
    term strictly increases in its capacity.
    """
    f_out = np.zeros(len(inst.work))
    off = inst.offloaders
    if not off.any():
        return f_out
    f_min_all, infeasible = min_capacities(inst)
    if infeasible.any():
        raise BudgetInfeasibleError(f"users {np.flatnonzero(infeasible).tolist()} miss their deadline at any capacity")
    T = inst.fixed_delay[off]
    C = inst.work[off]
    f_min = f_min_all[off]
    F = float(inst.budget)
    if f_min.sum() > F * (1 + 1e-12):
        raise BudgetInfeasibleError(f"minimum capacities {f_min.sum():.6g} exceed budget {F:.6g}")
    if f_min.sum() >= F:
        f_out[off] = f_min * (F / f_min.sum())
        return f_out
    if off.sum() == 1:
        f_out[off] = F
        return f_out

    def alloc(log_lam):
        return np.maximum(f_min, _stationary_capacity(math.exp(log_lam), T, C))

    def excess(log_lam):
        return alloc(log_lam).sum() - F

    # multiplier at which each unclipped user would take the whole budget / a sliver
    lam_lo = float(np.min(C / (T * F**2 + C * F)))
    f_small = np.maximum(f_min, F * 1e-9)
    lam_hi = float(np.max(C / (T * f_small**2 + C * f_small)))
    lo, hi = math.log(lam_lo), math.log(lam_hi)
    while excess(hi) > 0:
        hi += 2.0
    while excess(lo) < 0:
        lo -= 2.0
    if lo >= hi:
        lo = hi - 1.0
    log_lam = bisect_root(BracketedScalarProblem(excess, lo, hi, tol=tol, max_iter=400))
    f_out[off] = _fill_budget(alloc(log_lam), f_min, F)
    return f_out


def even_capacity(inst: CapacityInstance) -> np.ndarray:
    """Equal split of the budget among offloaders (local users get 0)."""
    f = np.zeros(len(inst.work))
    off = inst.offloaders
    if off.any():
        f[off] = inst.budget / off.sum()
    return f


def capacity_instance(users: np.ndarray, tasks: UserTasks, decision: Decision,
                      scenario: Scenario, cfg: SystemConfig) -> CapacityInstance:
    """Constants of the allocation problem for the given users of one SBS."""
    a = tasks.raw_volume[users]
    x = decision.offload[users]
    b = a / decision.ratio[users]
    alpha = (1 - x) * a + x * b
    fixed = (1 - x) * local_delay(a, cfg) + x * comm_delay(b, scenario.rates[users], cfg)
    work = np.where(x > 0, overhead_cycles(b, cfg), 0.0)
    return CapacityInstance(
        accuracy_const=accuracy(alpha, cfg.fit),
        fixed_delay=fixed,
        work=work,
        delay_limit=tasks.delay_limit[users],
        budget=cfg.mec_capacity,
        weight=cfg.utility_weight,
    )
