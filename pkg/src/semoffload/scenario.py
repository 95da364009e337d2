"""Small-cell topology, UMi channel gains, subcarrier map and uplink rates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SystemConfig
from .errors import ScenarioInfeasibleError


def pathloss_db(distance, carrier, los):
    """3GPP TR 36.814 UMi pathloss in dB; ``carrier`` in Hz.

    Distances below 1 m are clamped to 1 m.  No shadowing.
    """
    d = np.maximum(np.asarray(distance, dtype=float), 1.0)
    f_ghz = carrier / 1e9
    los_db = 22.0 * np.log10(d) + 28.0 + 20.0 * np.log10(f_ghz)
    nlos_db = 36.7 * np.log10(d) + 22.7 + 26.0 * np.log10(f_ghz)
    out = np.where(los, los_db, nlos_db)
    return float(out) if out.ndim == 0 else out


def los_probability(distance):
    d = np.asarray(distance, dtype=float)
    decay = np.exp(-d / 36.0)
    with np.errstate(divide="ignore"):
        near = np.minimum(18.0 / d, 1.0)
    out = near * (1.0 - decay) + decay
    return float(out) if out.ndim == 0 else out


def subcarrier_rate(bandwidth, num_subcarriers, tx_power, gain, interference, noise_power):
    """Shannon rate on one subcarrier, bits/s."""
    sinr = tx_power * np.asarray(gain) / (np.asarray(interference) + noise_power)
    return (bandwidth / num_subcarriers) * np.log2(1.0 + sinr)


def sbs_grid(num_sbs: int, area_side: float) -> np.ndarray:
    """SBS sites at the centres of an n x n grid over the square (n = ceil(sqrt(K)))."""
    n = math.ceil(math.sqrt(num_sbs))
    cell = area_side / n
    centres = (np.arange(n) + 0.5) * cell
    sites = [(x, y) for x in centres for y in centres]
    return np.array(sites[:num_sbs], dtype=float)


@dataclass(frozen=True)
class Topology:
    sbs_positions: np.ndarray  # (K, 2)
    user_positions: np.ndarray  # (U, 2)
    association: np.ndarray  # (U,) SBS index

    @property
    def distances(self) -> np.ndarray:
        """User-to-SBS distances, shape (U, K)."""
        diff = self.user_positions[:, None, :] - self.sbs_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


def associate_nearest(user_positions, sbs_positions) -> np.ndarray:
    diff = np.asarray(user_positions)[:, None, :] - np.asarray(sbs_positions)[None, :, :]
    return np.argmin(np.hypot(diff[..., 0], diff[..., 1]), axis=1)


def generate_topology(cfg: SystemConfig, rng: np.random.Generator) -> Topology:
    sbs = sbs_grid(cfg.num_sbs, cfg.area_side)
    users = rng.uniform(0.0, cfg.area_side, size=(cfg.num_users, 2))
    return Topology(sbs, users, associate_nearest(users, sbs))


def assign_subcarriers(association, num_sbs: int, num_subcarriers: int) -> np.ndarray:
    """Round-robin within each SBS: its i-th user (by index) gets subcarrier i."""
    association = np.asarray(association)
    out = np.empty(association.shape, dtype=int)
    for k in range(num_sbs):
        members = np.flatnonzero(association == k)
        if members.size > num_subcarriers:
            raise ScenarioInfeasibleError(
                f"SBS {k} has {members.size} users but only {num_subcarriers} subcarriers"
            )
        out[members] = np.arange(members.size)
    return out


def co_channel_interference(association, subcarrier_map, cross_gains, tx_power) -> np.ndarray:
    """Interference at each user's serving SBS from co-channel users of other SBSs.

    ``cross_gains[v, k]`` is the gain from user ``v`` to SBS ``k``.
    """
    association = np.asarray(association)
    subcarrier_map = np.asarray(subcarrier_map)
    same_sc = subcarrier_map[:, None] == subcarrier_map[None, :]
    other_cell = association[:, None] != association[None, :]
    # gain from interferer v into victim u's SBS
    g_into = cross_gains[:, association].T  # (victim u, interferer v)
    return np.sum(np.where(same_sc & other_cell, g_into * tx_power, 0.0), axis=1)


@dataclass(frozen=True)
class Scenario:
    sbs_positions: np.ndarray
    user_positions: np.ndarray
    association: np.ndarray  # (U,)
    subcarrier_map: np.ndarray  # (U,)
    los: np.ndarray  # (U, K) link state
    cross_gains: np.ndarray  # (U, K) linear gain user -> SBS
    interference: np.ndarray  # (U,) W
    rates: np.ndarray  # (U,) bits/s
    seed: int | None = None

    @property
    def num_users(self) -> int:
        return len(self.association)

    @property
    def num_sbs(self) -> int:
        return len(self.sbs_positions)

    @property
    def gains(self) -> np.ndarray:
        """Serving-link gain of each user (flat over subcarriers)."""
        return self.cross_gains[np.arange(self.num_users), self.association]

    def users_of(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.association == k)

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["user", "x", "y", "sbs", "subcarrier", "gain", "interference", "rate"])
            for u in range(self.num_users):
                w.writerow([
                    u, repr(float(self.user_positions[u, 0])), repr(float(self.user_positions[u, 1])),
                    int(self.association[u]), int(self.subcarrier_map[u]),
                    repr(float(self.gains[u])), repr(float(self.interference[u])),
                    repr(float(self.rates[u])),
                ])


def uplink_rates(association, subcarrier_map, cross_gains, cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-user uplink rate and interference; each user holds one subcarrier."""
    interference = co_channel_interference(association, subcarrier_map, cross_gains, cfg.tx_power)
    own = cross_gains[np.arange(len(association)), association]
    rates = subcarrier_rate(cfg.bandwidth_total, cfg.num_subcarriers, cfg.tx_power,
                            own, interference, cfg.noise_power)
    return rates, interference


def scenario_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for geometry/channel and for task draws."""
    geo, tasks = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(geo), np.random.default_rng(tasks)


def build_scenario(cfg: SystemConfig, seed: int | None = None,
                   rng: np.random.Generator | None = None) -> Scenario:
    """Full scenario for ``cfg``; a pure function of (cfg, seed)."""
    if seed is None:
        seed = cfg.rng_seed
    if rng is None:
        rng = scenario_streams(seed)[0]
    topo = generate_topology(cfg, rng)
    dist = topo.distances
    los = rng.random(dist.shape) < los_probability(dist)
    cross_gains = 10.0 ** (-pathloss_db(dist, cfg.carrier_freq, los) / 10.0)
    sc_map = assign_subcarriers(topo.association, cfg.num_sbs, cfg.num_subcarriers)
    rates, interference = uplink_rates(topo.association, sc_map, cross_gains, cfg)
    return Scenario(
        sbs_positions=topo.sbs_positions,
        user_positions=topo.user_positions,
        association=topo.association,
        subcarrier_map=sc_map,
        los=los,
        cross_gains=cross_gains,
        interference=interference,
        rates=rates,
        seed=seed,
    )

