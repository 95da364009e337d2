"""Offloading / compression-ratio subproblem for fixed MEC capacities.

Works in the substituted variable ``eta = 1 - x + x/eps`` (fraction of the
raw volume that is actually processed).  For user u with raw volume ``a``

    delay(x, eta) = (1 - x) (Bd - Bb) + Bb * eta + x * Bg
    value(x, eta) = ln(L * (p - q (a eta)^-r)) - ln delay(x, eta)

with ``Bd`` the local delay, ``Bb`` the offload delay per unit of eta
(uplink transfer plus proportional server work) and ``Bg`` the server time
of the fixed per-task overhead.  At x in {0, 1} ``delay`` equals the true
task delay.

The binary x is relaxed to [0, 1] and the concave ``ln delay`` is replaced
by its tangent plane at the current anchor (successive convex
approximation).  Each surrogate is concave, separable per user, and solved
exactly by a golden-section search in eta; the relaxed point is then rounded
by comparing the true objective of the local and the offload branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import FitParams, SystemConfig
from .errors import AnchorError, UserInfeasibleError
from .numeric import maximize_concave_1d
from .scenario import Scenario
from .taskmodel import FEAS_TOL, Decision, UserTasks, local_delay

GOLDEN_TOL = 1e-10


@dataclass
class CompressionInstance:
    """Per-user constants (arrays of equal length).

    ``offload_delay`` is inf for users that have no server capacity and
    therefore cannot offload.
    """

    local_delay: np.ndarray  # Bd, s
    offload_delay: np.ndarray  # Bb, s per unit eta
    offload_fixed: np.ndarray  # Bg, s
    raw_volume: np.ndarray
    delay_limit: np.ndarray
    accuracy_limit: np.ndarray
    fit: FitParams = field(default_factory=FitParams)
    weight: float = 1.0

    def __post_init__(self):
        for name in ("local_delay", "offload_delay", "offload_fixed", "raw_volume",
                     "delay_limit", "accuracy_limit"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    def __len__(self):
        return len(self.raw_volume)

    def subset(self, idx) -> "CompressionInstance":
        return CompressionInstance(
            self.local_delay[idx], self.offload_delay[idx], self.offload_fixed[idx],
            self.raw_volume[idx], self.delay_limit[idx], self.accuracy_limit[idx],
            self.fit, self.weight,
        )

    @property
    def can_offload(self) -> np.ndarray:
        return np.isfinite(self.offload_delay)

    def eta_floor(self) -> np.ndarray:
        """Smallest eta meeting the accuracy limit (inf if unreachable)."""
        gap = self.fit.p - self.accuracy_limit
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha_min = np.where(gap > 0, (self.fit.q / np.where(gap > 0, gap, 1.0)) ** (1.0 / self.fit.r), np.inf)
        return alpha_min / self.raw_volume

    def local_ok(self) -> np.ndarray:
        return (self.local_delay <= self.delay_limit * (1 + FEAS_TOL)) & (self.eta_floor() <= 1.0)

    def denominator(self, x, eta):
        Bd, Bb, Bg = self.local_delay, self.offload_delay, self.offload_fixed
        Bb = np.where(np.isfinite(Bb), Bb, 0.0)  # users without capacity only ever sit at x = 0
        return (1.0 - x) * (Bd - Bb) + Bb * eta + x * Bg

    def log_accuracy(self, eta):
        """ln(L * y(a * eta)); -inf where accuracy is not positive."""
        y = self.fit.p - self.fit.q * (self.raw_volume * eta) ** (-self.fit.r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(y > 0, np.log(self.weight * np.where(y > 0, y, 1.0)), -np.inf)

    def objective(self, x, eta):
        """True per-user value ln(L y / delay)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.log_accuracy(eta) - np.log(self.denominator(x, eta))


def compression_instance(tasks: UserTasks, decision: Decision, scenario: Scenario,
                         cfg: SystemConfig) -> CompressionInstance:
    """Constants for all users given the capacities in ``decision``."""
    a = tasks.raw_volume
    f = decision.capacity
    has_cap = f > 0
    safe_f = np.where(has_cap, f, 1.0)
    transfer = a * cfg.bits_per_unit / scenario.rates
    Bb = np.where(has_cap, transfer + cfg.overhead_slope * a / safe_f, np.inf)
    Bg = np.where(has_cap, cfg.overhead_intercept / safe_f, 0.0)
    return CompressionInstance(local_delay(a, cfg), Bb, Bg, a, tasks.delay_limit,
                               tasks.accuracy_limit, cfg.fit, cfg.utility_weight)


# ---------------------------------------------------------------------------
# feasible sets

def eta_bounds(inst: CompressionInstance) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Feasible eta interval of the offload branch (x = 1).

    Returns ``(eta_min, eta_max, nonempty)`` with eta_min the accuracy floor
    and eta_max = min(1, (t_limit - Bg) / Bb).
    """
    eta_min = inst.eta_floor()
    with np.errstate(divide="ignore", invalid="ignore"):
        eta_max = np.minimum(1.0, (inst.delay_limit - inst.offload_fixed) / inst.offload_delay)
    eta_max = np.where(inst.can_offload, eta_max, -np.inf)
    nonempty = eta_min <= eta_max
    return eta_min, eta_max, nonempty


def _restrict(lo, hi, coef, rhs):
    """Intersect [lo, hi] with {eta : coef * eta <= rhs}, elementwise."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = rhs / coef
    hi = np.where(coef > 0, np.minimum(hi, ratio), hi)
    lo = np.where(coef < 0, np.maximum(lo, ratio), lo)
    hi = np.where((coef == 0) & (rhs < 0), -np.inf, hi)
    return lo, hi


def relaxed_eta_interval(inst: CompressionInstance) -> tuple[np.ndarray, np.ndarray]:
    """Projection onto eta of the relaxed feasible polygon.

    Constraints: 0 <= x <= 1, accuracy floor <= eta <= 1, x >= 1 - eta and
    the delay limit ``k x + Bb eta <= h`` with ``k = Bb - Bd + Bg`` and
    ``h = t_limit - Bd + Bb``.
    """
    Bd, Bb, Bg, t = inst.local_delay, inst.offload_delay, inst.offload_fixed, inst.delay_limit
    k = Bb - Bd + Bg
    lo = inst.eta_floor()
    hi = np.ones_like(lo)
    # k <= 0: x = 1 is always available, delay limit reads Bb eta <= t - Bg
    lo_n, hi_n = _restrict(lo, hi, Bb, t - Bg)
    # k > 0: need both x >= 0 and x >= 1 - eta under x <= (h - Bb eta) / k
    lo_p, hi_p = _restrict(lo, hi, Bb, t - Bd + Bb)
    lo_p, hi_p = _restrict(lo_p, hi_p, Bd - Bg, t - Bg)
    pos = k > 0
    return np.where(pos, lo_p, lo_n), np.where(pos, hi_p, hi_n)


def _best_x(inst: CompressionInstance, eta):
    """Maximiser in x of the surrogate for fixed eta (it is linear in x)."""
    k = inst.offload_delay - inst.local_delay + inst.offload_fixed
    return np.where(k > 0, np.maximum(0.0, 1.0 - eta), 1.0)


def relaxed_feasible(inst: CompressionInstance, x, eta, tol=FEAS_TOL) -> np.ndarray:
    ok = (x >= -tol) & (x <= 1 + tol) & (eta <= 1 + tol) & (eta >= (1 - x) - tol)
    ok &= eta >= inst.eta_floor() * (1 - tol)
    ok &= inst.denominator(x, eta) <= inst.delay_limit * (1 + tol)
    return ok


# ---------------------------------------------------------------------------
# SCA

@dataclass
class Surrogate:
    """Tangent-plane bound ``v >= log_anchor + (slope_x (x - x_j) + slope_eta (eta - eta_j)) / D_j``."""

    x_anchor: np.ndarray
    eta_anchor: np.ndarray
    anchor_denominator: np.ndarray
    slope_x: np.ndarray
    slope_eta: np.ndarray

    def bound(self, x, eta):
        return np.log(self.anchor_denominator) + (
            self.slope_x * (x - self.x_anchor) + self.slope_eta * (eta - self.eta_anchor)
        ) / self.anchor_denominator


def sca_linearize(inst: CompressionInstance, x_anchor, eta_anchor) -> Surrogate:
    """First-order expansion of ln delay(x, eta) at the anchor.

    ln of an affine function is concave, so the plane lies above it
    everywhere the delay is positive.
    """
    x_anchor = np.asarray(x_anchor, dtype=float)
    eta_anchor = np.asarray(eta_anchor, dtype=float)
    D = inst.denominator(x_anchor, eta_anchor)
    if np.any(D <= 0):
        raise AnchorError(f"non-positive delay at anchor for users {np.flatnonzero(D <= 0).tolist()}")
    Bb = np.where(inst.can_offload, inst.offload_delay, 0.0)
    slope_x = Bb - inst.local_delay + inst.offload_fixed
    return Surrogate(x_anchor, eta_anchor, D, slope_x, Bb)


def surrogate_value(inst: CompressionInstance, sur: Surrogate, x, eta):
    return inst.log_accuracy(eta) - sur.bound(x, eta)


@dataclass
class InnerSolution:
    x: np.ndarray
    eta: np.ndarray
    v: np.ndarray
    feasible: np.ndarray


def solve_inner_convex(inst: CompressionInstance, sur: Surrogate) -> InnerSolution:
    """Maximise the concave surrogate per user over the relaxed feasible set.

    The surrogate is linear in x, so for each eta the best x sits on the
    boundary of the x-range; the remaining function of eta is concave and
    found by golden-section search.  If the result is worse than the anchor
    (which can only happen through search tolerance) the anchor is kept.
    Users that cannot offload stay at (0, 1); users with an empty relaxed
    set fall back to (0, 1) and are flagged when that is infeasible too.
    """
    n = len(inst)
    x = np.zeros(n)
    eta = np.ones(n)
    feasible = inst.local_ok().copy()

    act = np.flatnonzero(inst.can_offload)
    if act.size:
        sub = inst.subset(act)
        ssur = Surrogate(sur.x_anchor[act], sur.eta_anchor[act], sur.anchor_denominator[act],
                         sur.slope_x[act], sur.slope_eta[act])
        lo, hi = relaxed_eta_interval(sub)
        ok = lo <= hi
        lo_s = np.where(ok, lo, 1.0)
        hi_s = np.where(ok, hi, 1.0)

        def psi(e):
            return surrogate_value(sub, ssur, _best_x(sub, e), e)

        e_best, v_best = maximize_concave_1d(psi, lo_s, hi_s, tol=GOLDEN_TOL)
        x_best = _best_x(sub, e_best)

        anchor_ok = relaxed_feasible(sub, ssur.x_anchor, ssur.eta_anchor)
        v_anchor = np.where(anchor_ok, surrogate_value(sub, ssur, ssur.x_anchor, ssur.eta_anchor), -np.inf)
        keep = anchor_ok & (v_anchor >= v_best)
        x_best = np.where(keep, ssur.x_anchor, x_best)
        e_best = np.where(keep, ssur.eta_anchor, e_best)

        x[act] = np.where(ok, x_best, 0.0)
        eta[act] = np.where(ok, e_best, 1.0)
        feasible[act] = ok | feasible[act]

    v = np.where(inst.can_offload, sur.bound(x, eta), np.log(inst.denominator(x, eta)))
    return InnerSolution(x, eta, v, feasible)


@dataclass
class ScaState:
    x: np.ndarray
    eta: np.ndarray
    v: np.ndarray
    trace: list[float]
    iterations: int
    converged: bool


def relaxed_objective(inst: CompressionInstance, x, eta) -> float:
    return float(np.sum(inst.objective(x, eta)))


def initial_anchor(inst: CompressionInstance) -> tuple[np.ndarray, np.ndarray]:
    """x = 1 at the middle of the offload interval; (0, 1) where offloading is infeasible."""
    lo, hi, ok = eta_bounds(inst)
    x0 = np.where(ok, 1.0, 0.0)
    eta0 = np.where(ok, 0.5 * (lo + np.where(ok, hi, lo)), 1.0)
    return x0, eta0


def sca_iterate(inst: CompressionInstance, x0, eta0, tol: float = 1e-4,
                max_iter: int = 20) -> ScaState:
    """Repeat linearise + inner solve until the true relaxed objective settles."""
    x = np.asarray(x0, dtype=float).copy()
    eta = np.asarray(eta0, dtype=float).copy()
    trace = [relaxed_objective(inst, x, eta)]
    v = np.log(inst.denominator(x, eta))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        sur = sca_linearize(inst, x, eta)
        sol = solve_inner_convex(inst, sur)
        x, eta, v = sol.x, sol.eta, sol.v
        trace.append(relaxed_objective(inst, x, eta))
        if abs(trace[-1] - trace[-2]) <= tol:
            converged = True
            break
    return ScaState(x, eta, v, trace, it, converged)


# ---------------------------------------------------------------------------
# rounding and the exact per-user oracle

@dataclass
class BinarySolution:
    offload: np.ndarray
    eta: np.ndarray
    objective: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return np.where(self.offload > 0, 1.0 / self.eta, 1.0)


def _pick(candidates, n):
    """Best feasible (x, eta, value) per user among candidate triples."""
    best_x = np.zeros(n)
    best_eta = np.ones(n)
    best_val = np.full(n, -np.inf)
    for cx, ceta, cval in candidates:
        better = cval > best_val
        best_x = np.where(better, cx, best_x)
        best_eta = np.where(better, ceta, best_eta)
        best_val = np.where(better, cval, best_val)
    return best_x, best_eta, best_val


def _local_candidate(inst):
    n = len(inst)
    val = np.where(inst.local_ok(), inst.objective(np.zeros(n), np.ones(n)), -np.inf)
    return np.zeros(n), np.ones(n), val


def _offload_value(inst, eta, ok):
    with np.errstate(invalid="ignore"):
        val = inst.objective(np.ones(len(inst)), eta)
    return np.where(ok, val, -np.inf)


def _incumbent_candidate(inst, incumbent):
    x_inc, eta_inc = (np.asarray(v, dtype=float) for v in incumbent)
    lo, hi, ok = eta_bounds(inst)
    off = x_inc > 0
    in_range = ok & (eta_inc >= lo * (1 - FEAS_TOL)) & (eta_inc <= hi * (1 + FEAS_TOL))
    val_off = _offload_value(inst, eta_inc, in_range)
    _, _, val_loc = _local_candidate(inst)
    return np.where(off, 1.0, 0.0), np.where(off, eta_inc, 1.0), np.where(off, val_off, val_loc)


def _raise_if_infeasible(values, what):
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise UserInfeasibleError(f"{what}: neither local nor offload branch is feasible", bad)


def round_and_recover(inst: CompressionInstance, x_relaxed, eta_relaxed,
                      incumbent=None) -> BinarySolution:
    """Binary decision from a relaxed point.

    Compares the true objective at x = 0 (eta = 1) and at x = 1 with the
    relaxed eta clamped into the offload interval; ``incumbent`` (x, eta),
    when given, is a third candidate so the result is never worse than it.
    """
    lo, hi, ok = eta_bounds(inst)
    eta_off = np.clip(np.asarray(eta_relaxed, dtype=float), lo, np.where(ok, hi, lo))
    cands = [_local_candidate(inst), (np.ones(len(inst)), eta_off, _offload_value(inst, eta_off, ok))]
    if incumbent is not None:
        cands.append(_incumbent_candidate(inst, incumbent))
    x, eta, val = _pick(cands, len(inst))
    _raise_if_infeasible(val, "rounding")
    return BinarySolution(x, eta, val)


def exact_user_oracle(inst: CompressionInstance) -> BinarySolution:
    """Per-user optimum by enumerating x and a 1-D search over eta at x = 1.

    At x = 1 the value is ln of (concave accuracy) / (affine delay), which is
    unimodal in eta, so golden-section search finds the global maximum.
    """
    lo, hi, ok = eta_bounds(inst)
    lo_s = np.where(ok, lo, 1.0)
    hi_s = np.where(ok, hi, 1.0)
    n = len(inst)
    with np.errstate(invalid="ignore", divide="ignore"):
        eta_star, _ = maximize_concave_1d(lambda e: inst.objective(np.ones(n), e), lo_s, hi_s,
                                          tol=GOLDEN_TOL)
    off = (np.ones(n), eta_star, _offload_value(inst, eta_star, ok))
    x, eta, val = _pick([_local_candidate(inst), off], n)
    _raise_if_infeasible(val, "oracle")
    return BinarySolution(x, eta, val)


def solve_compression(inst: CompressionInstance, x_anchor=None, eta_anchor=None,
                      tol: float = 1e-4, max_iter: int = 20) -> tuple[BinarySolution, ScaState]:
    """SCA from the anchor (default: :func:`initial_anchor`), then rounding.

    The anchor also serves as the rounding incumbent.
    """
    if x_anchor is None or eta_anchor is None:
        x_anchor, eta_anchor = initial_anchor(inst)
    state = sca_iterate(inst, x_anchor, eta_anchor, tol=tol, max_iter=max_iter)
    incumbent = (x_anchor, eta_anchor)
    sol = round_and_recover(inst, state.x, state.eta, incumbent=incumbent)
    return sol, state


def solve_without_compression(inst: CompressionInstance, incumbent=None) -> BinarySolution:
    """Branch choice with eps pinned to 1 (eta = 1 for both branches)."""
    n = len(inst)
    lo, hi, ok = eta_bounds(inst)
    ok_full = ok & (hi >= 1.0 * (1 - FEAS_TOL)) & (lo <= 1.0)
    ones = np.ones(n)
    cands = [_local_candidate(inst), (ones, ones, _offload_value(inst, ones, ok_full))]
    if incumbent is not None:
        x_inc = np.asarray(incumbent[0], dtype=float)
        cands.append(_incumbent_candidate(inst, (x_inc, ones)))
    x, eta, val = _pick(cands, n)
    _raise_if_infeasible(val, "rounding")
    return BinarySolution(x, eta, val)
