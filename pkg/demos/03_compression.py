"""
Compression ratio and offloading choice
=======================================

For fixed server capacities every user picks local computing or offloading
with some compression.  The relaxed problem is solved by successive
linearisation of the log-delay, then rounded.  An exhaustive per-user
search gives the reference answer.
"""

import numpy as np

from semoffload import SystemConfig, TaskCatalog
from semoffload.compression import compression_instance, exact_user_oracle, solve_compression
from semoffload.experiments import make_problem
from semoffload.orchestrator import initial_decision

cfg = SystemConfig()
scenario, tasks = make_problem(cfg, TaskCatalog(), seed=0)
dec = initial_decision(scenario, tasks, cfg)
inst = compression_instance(tasks, dec, scenario, cfg)

sol, state = solve_compression(inst)
print("SCA trace:", np.round(state.trace, 4))
print("offloaders:", int(sol.offload.sum()), "of", len(tasks))
print("compression ratios of offloaders:", np.round(sol.ratio[sol.offload > 0], 1))

oracle = exact_user_oracle(inst)
gap = oracle.objective - sol.objective
print("largest per-user gap to exhaustive search: %.2e" % gap.max())

# lower accuracy target -> more compression
inst.accuracy_limit = np.full(len(tasks), 80.0)
loose, _ = solve_compression(inst)
print("median ratio at 80%% accuracy: %.1f" % np.median(loose.ratio[loose.offload > 0]))
