"""
One full run and the two baselines
==================================

Alternate capacity allocation and compression until the utility settles,
then compare with an even capacity split (AC) and with no compression (WCR).
"""

from semoffload import SystemConfig, TaskCatalog, run_ac, run_algorithm1, run_wcr
from semoffload.experiments import make_problem

cfg = SystemConfig()
scenario, tasks = make_problem(cfg, TaskCatalog(), seed=3)

for name, runner in (("proposed", run_algorithm1), ("AC", run_ac), ("WCR", run_wcr)):
    tr = runner(scenario, tasks, cfg)
    print(f"{name:8s} utility {tr.utility:9.4f}  rounds {tr.iterations}  "
          f"offloaders {int(tr.decision.offload.sum()):2d}  feasible {tr.report.feasible}")
    print("         trace", [round(v, 3) for v in tr.outer_objectives])
