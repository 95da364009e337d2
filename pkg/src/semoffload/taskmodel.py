"""Tasks, the delay chain, the accuracy law, system utility and constraint checks.

All functions operate elementwise on numpy arrays (one entry per user), so
scalars work too.  Volumes are in abstract data units; ``bits_per_unit``
converts them to bits for transmission.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import FitParams, SystemConfig, TaskCatalog
from .errors import ConstraintViolation, DomainError
from .scenario import Scenario

FEAS_TOL = 1e-9  # relative tolerance for constraint checks


@dataclass(frozen=True)
class UserTasks:
    """Per-user task assignment: catalog index and raw data volume."""

    task_index: np.ndarray  # (U,) int
    raw_volume: np.ndarray  # (U,) data units
    catalog: TaskCatalog = field(default_factory=TaskCatalog)

    def __post_init__(self):
        if np.any(np.asarray(self.raw_volume) <= 0):
            raise DomainError("raw volumes must be > 0")
        idx = np.asarray(self.task_index)
        if np.any(idx < 0) or np.any(idx >= len(self.catalog)):
            raise DomainError("task index outside catalog")

    @property
    def delay_limit(self) -> np.ndarray:
        return np.array([t.delay_limit for t in self.catalog.types])[self.task_index]

    @property
    def accuracy_limit(self) -> np.ndarray:
        return np.array([t.accuracy_limit for t in self.catalog.types])[self.task_index]

    def __len__(self):
        return len(self.task_index)


def draw_tasks(num_users: int, cfg: SystemConfig, catalog: TaskCatalog,
               rng: np.random.Generator) -> UserTasks:
    """Uniform task type and uniform raw volume over ``cfg.volume_range``."""
    idx = rng.integers(0, len(catalog), size=num_users)
    lo, hi = cfg.volume_range
    volume = rng.uniform(lo, hi, size=num_users)
    return UserTasks(idx, volume, catalog)


@dataclass
class Decision:
    """Offload flag x, compression ratio eps >= 1 and MEC capacity per user."""

    offload: np.ndarray
    ratio: np.ndarray
    capacity: np.ndarray

    def __post_init__(self):
        self.offload = np.asarray(self.offload, dtype=float)
        self.ratio = np.asarray(self.ratio, dtype=float)
        self.capacity = np.asarray(self.capacity, dtype=float)

    @property
    def effective_fraction(self) -> np.ndarray:
        """eta = 1 - x + x / eps."""
        return 1.0 - self.offload + self.offload / self.ratio

    @classmethod
    def all_local(cls, num_users: int) -> "Decision":
        return cls(np.zeros(num_users), np.ones(num_users), np.zeros(num_users))

    def copy(self) -> "Decision":
        return Decision(self.offload.copy(), self.ratio.copy(), self.capacity.copy())


# ---------------------------------------------------------------------------
# delay chain

def overhead_cycles(volume, cfg: SystemConfig):
    """CPU cycles needed to process ``volume`` data units: beta * a + gamma."""
    return cfg.overhead_slope * np.asarray(volume, dtype=float) + cfg.overhead_intercept


def local_delay(volume, cfg: SystemConfig):
    return overhead_cycles(volume, cfg) / cfg.local_capacity


def compressed_volume(volume, ratio):
    ratio = np.asarray(ratio, dtype=float)
    if np.any(ratio < 1.0):
        raise ConstraintViolation("compression ratio must be >= 1")
    return np.asarray(volume, dtype=float) / ratio


def comm_delay(compressed, rate, cfg: SystemConfig):
    return np.asarray(compressed, dtype=float) * cfg.bits_per_unit / np.asarray(rate, dtype=float)


def offload_comp_delay(compressed, capacity, cfg: SystemConfig):
    capacity = np.asarray(capacity, dtype=float)
    if np.any(capacity <= 0):
        raise DomainError("offloaded work needs capacity > 0")
    return overhead_cycles(compressed, cfg) / capacity


def accuracy(alpha, fit: FitParams):
    """Accuracy in percent for processed volume ``alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise DomainError("processed volume must be > 0")
    return fit.p - fit.q * alpha ** (-fit.r)


def processed_volume(tasks: UserTasks, decision: Decision):
    """alpha = (1 - x) a + x b."""
    a = tasks.raw_volume
    return (1.0 - decision.offload) * a + decision.offload * a / decision.ratio


def total_delay(tasks: UserTasks, decision: Decision, scenario: Scenario, cfg: SystemConfig):
    """(1 - x) T^L + x (t_comm + t_comp); offloaders without capacity get inf."""
    x = decision.offload
    a = tasks.raw_volume
    t_local = local_delay(a, cfg)
    b = compressed_volume(a, decision.ratio)
    t_comm = comm_delay(b, scenario.rates, cfg)
    with np.errstate(divide="ignore"):
        t_comp = np.where(decision.capacity > 0,
                          overhead_cycles(b, cfg) / np.where(decision.capacity > 0, decision.capacity, 1.0),
                          np.inf)
    t_off = np.where(x > 0, t_comm + t_comp, 0.0)
    return (1.0 - x) * t_local + x * t_off


def user_utilities(tasks: UserTasks, decision: Decision, scenario: Scenario, cfg: SystemConfig):
    y = accuracy(processed_volume(tasks, decision), cfg.fit)
    t = total_delay(tasks, decision, scenario, cfg)
    if np.any(y <= 0):
        raise DomainError("utility needs accuracy > 0")
    if np.any(t <= 0) or np.any(~np.isfinite(t)):
        raise DomainError("utility needs a finite positive delay")
    return np.log(cfg.utility_weight * y / t)


def system_utility(tasks: UserTasks, decision: Decision, scenario: Scenario, cfg: SystemConfig) -> float:
    """Sum over users of ln(L * y / t), y in percent and t in seconds."""
    return float(np.sum(user_utilities(tasks, decision, scenario, cfg)))


# ---------------------------------------------------------------------------
# constraint report

@dataclass
class ConstraintReport:
    c1: np.ndarray  # x binary
    c2: np.ndarray  # at most one offload target (always one serving SBS here)
    c3: np.ndarray  # eps >= 1
    c4_residual: np.ndarray  # t - t_limit (<= tol * t_limit)
    c5_residual: np.ndarray  # y_limit - y (<= tol * y_limit)
    c6_residual: np.ndarray  # per SBS: sum f - F_k (<= tol * F_k)
    delay_limit: np.ndarray
    accuracy_limit: np.ndarray
    budget: float
    tol: float = FEAS_TOL

    @property
    def c4(self) -> np.ndarray:
        return self.c4_residual <= self.tol * self.delay_limit

    @property
    def c5(self) -> np.ndarray:
        return self.c5_residual <= self.tol * self.accuracy_limit

    @property
    def c6(self) -> np.ndarray:
        return self.c6_residual <= self.tol * self.budget

    @property
    def user_ok(self) -> np.ndarray:
        return self.c1 & self.c2 & self.c3 & self.c4 & self.c5

    @property
    def feasible(self) -> bool:
        return bool(np.all(self.user_ok) and np.all(self.c6))

    def violations(self) -> dict[str, list[int]]:
        out = {}
        for name in ("c1", "c2", "c3", "c4", "c5", "c6"):
            bad = np.flatnonzero(~getattr(self, name))
            if bad.size:
                out[name] = bad.tolist()
        return out

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scope", "index", "c1", "c2", "c3", "c4_residual", "c5_residual",
                        "c6_residual", "ok"])
            for u in range(len(self.c1)):
                w.writerow(["user", u, int(self.c1[u]), int(self.c2[u]), int(self.c3[u]),
                            repr(float(self.c4_residual[u])), repr(float(self.c5_residual[u])),
                            "", int(self.user_ok[u])])
            for k in range(len(self.c6_residual)):
                w.writerow(["sbs", k, "", "", "", "", "", repr(float(self.c6_residual[k])),
                            int(self.c6[k])])


def check_constraints(tasks: UserTasks, decision: Decision, scenario: Scenario,
                      cfg: SystemConfig, tol: float = FEAS_TOL) -> ConstraintReport:
    """Evaluate C1-C6; never raises on infeasible decisions."""
    x = decision.offload
    eps = decision.ratio
    c1 = (x == 0) | (x == 1)
    c2 = np.ones(len(x), dtype=bool)
    c3 = eps >= 1.0 - tol

    t_lim = tasks.delay_limit
    y_lim = tasks.accuracy_limit
    xb = np.where(c1, x, np.clip(np.round(x), 0, 1))
    safe_eps = np.where(eps > 0, eps, 1.0)
    a = tasks.raw_volume
    alpha = (1 - xb) * a + xb * a / safe_eps
    y = cfg.fit.p - cfg.fit.q * alpha ** (-cfg.fit.r)
    fixed = Decision(xb, np.maximum(safe_eps, 1.0), decision.capacity)
    t = total_delay(tasks, fixed, scenario, cfg)
    with np.errstate(invalid="ignore"):
        c4_res = np.where(np.isfinite(t), t - t_lim, np.inf)
    c5_res = y_lim - y

    cap = np.where(np.isfinite(decision.capacity), decision.capacity, np.inf)
    c6 = np.array([np.sum(cap[scenario.association == k]) - cfg.mec_capacity
                   for k in range(scenario.num_sbs)])
    return ConstraintReport(c1, c2, c3 & (eps > 0), c4_res, c5_res, c6, t_lim, y_lim,
                            cfg.mec_capacity, tol)


def branch_feasibility(tasks: UserTasks, scenario: Scenario, cfg: SystemConfig,
                       capacity=None) -> tuple[np.ndarray, np.ndarray]:
    """(local_ok, offload_ok) per user.

    Offloading is judged with ``capacity`` per user (default: the whole MEC
    budget) at the most delay-friendly compression that still meets the
    accuracy limit.
    """
    a = tasks.raw_volume
    t_lim = tasks.delay_limit
    y_lim = tasks.accuracy_limit
    tol = FEAS_TOL
    local_ok = (local_delay(a, cfg) <= t_lim * (1 + tol)) & (accuracy(a, cfg.fit) >= y_lim * (1 - tol))
    if capacity is None:
        capacity = np.full(len(a), cfg.mec_capacity)
    alpha_min = np.array([cfg.fit.min_volume(y) for y in y_lim])
    alpha = np.minimum(alpha_min, a)
    reachable = alpha_min <= a * (1 + tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_best = comm_delay(alpha, scenario.rates, cfg) + overhead_cycles(alpha, cfg) / capacity
    offload_ok = reachable & (np.asarray(capacity) > 0) & (t_best <= t_lim * (1 + tol))
    return local_ok, offload_ok
