"""Joint computing offloading, semantic compression and MEC capacity allocation.

Typical use::

    from semoffload import SystemConfig, TaskCatalog, make_problem, run_algorithm1

    cfg = SystemConfig()
    scenario, tasks = make_problem(cfg, TaskCatalog(), seed=0)
    trace = run_algorithm1(scenario, tasks, cfg)
    print(trace.utility, trace.report.feasible)
"""

from .config import FitParams, SolverConfig, SystemConfig, TaskCatalog, TaskType, parse_config
from .experiments import ExperimentSpec, emit_csv, make_problem, run_experiment, summarize
from .orchestrator import RunTrace, run_ac, run_algorithm1, run_wcr
from .scenario import Scenario, build_scenario
from .taskmodel import Decision, UserTasks, check_constraints, system_utility

__all__ = [
    "Decision", "ExperimentSpec", "FitParams", "RunTrace", "Scenario", "SolverConfig",
    "SystemConfig", "TaskCatalog", "TaskType", "UserTasks", "build_scenario",
    "check_constraints", "emit_csv", "make_problem", "parse_config", "run_ac",
    "run_algorithm1", "run_experiment", "run_wcr", "summarize", "system_utility",
]

__version__ = "0.1.0"
