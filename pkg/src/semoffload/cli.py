"""Command line front end: ``semoffload {run,convergence,sweep-users,sweep-capacity}``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .config import SolverConfig, SystemConfig, TaskCatalog, parse_config
from .errors import ConfigError, InfeasibleRunError
from .experiments import ROW_COLUMNS, ExperimentSpec, emit_csv, make_problem, run_experiment, summarize
from .orchestrator import RUNNERS, SCHEMES, write_traces


def _schemes(text):
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in names if s not in SCHEMES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"schemes must be a subset of {','.join(SCHEMES)}")
    return names


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semoffload", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seeds=True):
        sp.add_argument("--config", type=Path, help="key = value config file")
        sp.add_argument("--seed", type=int, default=0, help="first seed")
        if seeds:
            sp.add_argument("--seeds", type=int, default=20, help="number of seeds per cell")
            sp.add_argument("--workers", type=int, default=1, help="worker processes")
        sp.add_argument("--out", type=Path, required=True, help="output CSV")
        sp.add_argument("--schemes", type=_schemes, default=SCHEMES)

    common(sub.add_parser("run", help="single run, writes per-iteration trace"), seeds=False)
    common(sub.add_parser("convergence", help="per-iteration utility of every scheme"))
    for name, what in (("sweep-users", "number of users"), ("sweep-capacity", "MEC capacity in Gcycle/s")):
        sp = sub.add_parser(name, help=f"utility versus {what}")
        common(sp)
        sp.add_argument("--values", type=_floats, default=(), help=f"comma separated {what}")
        sp.add_argument("--bandwidths", type=_floats, default=(10e6, 50e6), help="Hz, comma separated")
    return p


def _load(path):
    if path is None:
        return SystemConfig(), TaskCatalog(), SolverConfig()
    return parse_config(path)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, catalog, solver_cfg = _load(args.config)
    except (ConfigError, OSError) as exc:
        print(f"semoffload: {exc}", file=sys.stderr)
        return 2

    if args.command == "run":
        scenario, tasks = make_problem(cfg, catalog, args.seed)
        traces = []
        for scheme in args.schemes:
            try:
                tr = RUNNERS[scheme](scenario, tasks, cfg, solver_cfg)
            except InfeasibleRunError as exc:
                print(f"{scheme}: infeasible ({exc})", file=sys.stderr)
                continue
            traces.append(tr)
            print(f"{scheme:9s} utility={tr.utility:.6f} iterations={tr.iterations} "
                  f"offloaders={int(tr.decision.offload.sum())}/{len(tasks)} feasible={tr.report.feasible}")
        if not traces:
            return 1
        write_traces(traces, args.out)
        return 0

    values = tuple(int(v) for v in args.values) if args.command == "sweep-users" else getattr(args, "values", ())
    try:
        spec = ExperimentSpec(kind=args.command, values=values, num_seeds=args.seeds,
                              schemes=args.schemes, base_seed=args.seed, out=str(args.out),
                              **({"bandwidths": args.bandwidths} if hasattr(args, "bandwidths") else {}))
    except ValueError as exc:
        print(f"semoffload: {exc}", file=sys.stderr)
        return 2
    rows = run_experiment(spec, cfg, catalog, solver_cfg, workers=args.workers)
    emit_csv(rows, args.out, columns=ROW_COLUMNS)
    summary = summarize(rows)
    emit_csv(summary, args.out.with_name(args.out.stem + "_mean.csv"))
    for s in summary:
        print(f"{s['scheme']:9s} value={s['sweep_value']} bw={s['bandwidth']:.3g} "
              f"mean={s['mean_utility']:.4f} feasible={s['feasible_seeds']}/{s['seeds']}")
    if all(math.isnan(r["utility"]) for r in rows):
        return 1
    return 0
