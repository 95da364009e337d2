"""Random problem generators shared by the test modules."""

import numpy as np

from semoffload.capacity import CapacityInstance
from semoffload.compression import CompressionInstance, eta_bounds
from semoffload.config import SystemConfig, TaskCatalog


def _draw_compression(rng, m, cfg, catalog):
    t_lim = np.array([t.delay_limit for t in catalog.types])
    y_lim = np.array([t.accuracy_limit for t in catalog.types])
    a = rng.uniform(*cfg.volume_range, m)
    kind = rng.integers(0, len(catalog), m)
    rate = 10 ** rng.uniform(4.5, 6.7, m)
    f = 10 ** rng.uniform(9.0, 11.0, m)
    # local capacity around the default so some users miss the deadline locally
    f_loc = 10 ** rng.uniform(np.log10(0.5e9), np.log10(3e9), m)
    Bd = (cfg.overhead_slope * a + cfg.overhead_intercept) / f_loc
    Bb = a * cfg.bits_per_unit / rate + cfg.overhead_slope * a / f
    # per-task server overhead spread wide so that some optima leave the accuracy floor
    Bg = 10 ** rng.uniform(-5.0, -1.7, m)
    return CompressionInstance(Bd, Bb, Bg, a, t_lim[kind], y_lim[kind], cfg.fit, cfg.utility_weight)


def random_compression_instances(rng, n, cfg=None, catalog=None):
    """``n`` per-user instances, each feasible for at least one branch."""
    cfg = cfg or SystemConfig()
    catalog = catalog or TaskCatalog()
    inst = _draw_compression(rng, 4 * n, cfg, catalog)
    _, _, off_ok = eta_bounds(inst)
    keep = np.flatnonzero(off_ok | inst.local_ok())[:n]
    assert keep.size == n
    return inst.subset(keep)


def random_capacity_instance(rng, n_off, budget=None, n_local=0):
    """Instance with ``n_off`` offloaders whose deadlines leave room in the budget."""
    budget = budget if budget is not None else 10 ** rng.uniform(9.5, 11.5)
    T = rng.uniform(0.0, 0.03, n_off)
    C = 10 ** rng.uniform(6.0, 8.0, n_off)
    # deadline so that sum f_min uses at most 60 % of the budget
    share = rng.dirichlet(np.ones(n_off)) * 0.6 * budget
    t_lim = T + C / share
    acc = rng.uniform(85, 99, n_off)
    if n_local:
        T = np.concatenate([T, rng.uniform(0.005, 0.02, n_local)])
        C = np.concatenate([C, np.zeros(n_local)])
        t_lim = np.concatenate([t_lim, np.full(n_local, 0.06)])
        acc = np.concatenate([acc, rng.uniform(90, 99, n_local)])
    return CapacityInstance(acc, T, C, t_lim, budget)


def toy_scenario(rates, association=None, num_sbs=1):
    """Scenario with given per-user rates; geometry is a placeholder."""
    from semoffload.scenario import Scenario, sbs_grid

    rates = np.asarray(rates, dtype=float)
    n = len(rates)
    association = np.zeros(n, dtype=int) if association is None else np.asarray(association)
    sc = np.zeros(n, dtype=int)
    for k in range(num_sbs):
        members = np.flatnonzero(association == k)
        sc[members] = np.arange(members.size)
    return Scenario(
        sbs_positions=sbs_grid(num_sbs, 200.0),
        user_positions=np.zeros((n, 2)),
        association=association,
        subcarrier_map=sc,
        los=np.ones((n, num_sbs), dtype=bool),
        cross_gains=np.full((n, num_sbs), 1e-10),
        interference=np.zeros(n),
        rates=rates,
    )


def capacity_grid_oracle(inst, step):
    """Best objective over a grid on the simplex sum f = budget (2 or 3 offloaders)."""
    off = np.flatnonzero(inst.offloaders)
    F = inst.budget
    ticks = np.arange(step, F, step)
    if off.size == 2:
        pts = np.stack([ticks, F - ticks], axis=1)
    elif off.size == 3:
        f1, f2 = np.meshgrid(ticks, ticks, indexing="ij")
        f1, f2 = f1.ravel(), f2.ravel()
        keep = F - f1 - f2 > step / 2
        pts = np.stack([f1[keep], f2[keep], F - f1[keep] - f2[keep]], axis=1)
    else:
        raise ValueError("grid oracle handles 2 or 3 offloaders")
    T = inst.fixed_delay[off]
    C = inst.work[off]
    with np.errstate(divide="ignore"):
        t = T + C / pts
    ok = np.all(t <= inst.delay_limit[off] * (1 + 1e-12), axis=1)
    vals = np.sum(np.log(inst.weight * inst.accuracy_const[off]) - np.log(t), axis=1)
    vals = np.where(ok, vals, -np.inf)
    local = ~inst.offloaders
    base = np.sum(np.log(inst.weight * inst.accuracy_const[local]) - np.log(inst.fixed_delay[local]))
    return float(vals.max() + base)
