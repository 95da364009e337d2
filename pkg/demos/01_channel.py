"""
Small-cell geometry and uplink rates
====================================

Four SBSs on a 200 m square, thirty users dropped uniformly.  Each user
talks to its nearest SBS on one subcarrier; users of other cells on the
same subcarrier interfere.
"""

import numpy as np

from semoffload import SystemConfig, build_scenario
from semoffload.scenario import los_probability, pathloss_db

cfg = SystemConfig()
sc = build_scenario(cfg, seed=0)

print("SBS sites:\n", sc.sbs_positions)
print("users per SBS:", np.bincount(sc.association, minlength=cfg.num_sbs))

# pathloss at 100 m, LoS vs NLoS
print("PL(100 m) LoS  %.2f dB" % pathloss_db(100, cfg.carrier_freq, True))
print("PL(100 m) NLoS %.2f dB" % pathloss_db(100, cfg.carrier_freq, False))
for d in (10, 50, 100, 200):
    print(f"P_LoS({d:3d} m) = {los_probability(d):.3f}")

# rates spread over several orders of magnitude because of the LoS draw
r = np.sort(sc.rates)
print("rate quantiles (Mb/s):", np.round(np.quantile(r, [0, 0.25, 0.5, 0.75, 1]) / 1e6, 3))
print("users with co-channel interference:", int(np.sum(sc.interference > 0)))
