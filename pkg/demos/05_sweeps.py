"""
Utility versus number of users and MEC capacity
===============================================

Seed-averaged sweeps; the same runs are available from the command line as
``semoffload sweep-users`` and ``semoffload sweep-capacity``.
"""

from semoffload.experiments import ExperimentSpec, run_experiment, summarize

users = run_experiment(ExperimentSpec("sweep-users", values=(10, 20, 30, 40), num_seeds=5,
                                      bandwidths=(10e6,)))
for row in summarize(users):
    print(f"U={row['sweep_value']:3d} {row['scheme']:8s} mean {row['mean_utility']:8.2f}")

caps = run_experiment(ExperimentSpec("sweep-capacity", values=(50, 100, 200, 400), num_seeds=5,
                                     schemes=("proposed", "wcr"), bandwidths=(10e6,)))
for row in summarize(caps):
    print(f"F={row['sweep_value']:3d} Gc/s {row['scheme']:8s} mean {row['mean_utility']:8.3f}")
