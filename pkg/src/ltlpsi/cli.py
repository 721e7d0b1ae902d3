"""Command line: ``ltlpsi {synth,simulate,verify,optimize,bench,translate}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import yaml

from . import bench
from .buchi import DEFAULT_STATE_CAP, AutomatonSizeError
from .buchi import to_dot as buchi_dot
from .executor import check_sync_protocol
from .formula import TaskSyntaxError, UnknownSymbolError, rewrite_atomic, to_text
from .optimize import OBJECTIVES, InfeasibleSelection, select_subteam
from .pipeline import (
    PlanMismatchError,
    dump_json,
    lasso_from_trace_json,
    optimize_plan,
    plan_from_json,
    plan_json,
    restrict_plan,
    simulate,
    synthesize,
    trace_json,
    trace_log,
)
from .product import to_dot as product_dot
from .scenario import ScenarioError, read_document, load_candidates, load_scenario
from .semantics import satisfies
from .team import NoTeamError


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_dots(syn, directory: str) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "automaton.dot").write_text(buchi_dot(syn.buchi))
    for name, g in syn.products.items():
        (d / f"product_{name}.dot").write_text(product_dot(g, name=f"product_{name}"))


def _synth(args):
    scenario = load_scenario(args.scenario)
    return scenario, synthesize(scenario, args.state_cap, args.visited)


def cmd_synth(args) -> int:
    _, syn = _synth(args)
    _emit(dump_json(plan_json(syn, args.seed)), args.out)
    if args.dot:
        _write_dots(syn, args.dot)
    return 0


def cmd_simulate(args) -> int:
    _, syn = _synth(args)
    plan = syn.plan
    if args.plan:
        plan = plan_from_json(json.loads(Path(args.plan).read_text()), syn)
    trace = simulate(syn, plan, args.policy, args.threads)
    _emit(dump_json(trace_json(trace)), args.out)
    if args.log:
        Path(args.log).write_text(trace_log(trace))
    problems = check_sync_protocol(trace, plan)
    for p in problems:
        print(f"sync violation: {p}", file=sys.stderr)
    return 1 if problems else 0


def cmd_verify(args) -> int:
    scenario = load_scenario(args.scenario)
    lasso, assignment = lasso_from_trace_json(json.loads(Path(args.trace).read_text()))
    ok = satisfies(lasso, assignment, scenario.task, scenario.bindings)
    print("satisfied" if ok else "violated")
    return 0 if ok else 1


def cmd_optimize(args) -> int:
    data, _ = read_document(args.scenario)
    if isinstance(data, dict) and "candidates" in data:
        bindings, cands = load_candidates(args.scenario)
        sel = select_subteam(
            {c.agent: c.bindings for c in cands},
            {c.agent: c.cost for c in cands},
            args.objective,
            args.redundancy,
            bindings,
        )
        result = {"team": list(sel.agents), "assignment": {n: sorted(r) for n, r in sel.assignment.items()},
                  "cost": sel.cost, "objective": sel.objective, "redundancy": args.redundancy}
        _emit(dump_json(result), args.out)
        return 0
    _, syn = _synth(args)
    sel = optimize_plan(syn, args.objective, args.redundancy)
    sub = restrict_plan(syn.plan, sel.assignment)
    trace = simulate(syn, sub)
    ok = satisfies(trace.to_lasso(), trace.assignment, syn.scenario.task, syn.scenario.bindings)
    result = {
        "team": list(sel.agents),
        "assignment": {n: sorted(r) for n, r in sel.assignment.items()},
        "cost": sel.cost,
        "objective": sel.objective,
        "redundancy": args.redundancy,
        "sub_team_trace_satisfies_task": ok,
    }
    _emit(dump_json(result), args.out)
    return 0 if ok else 1


def cmd_translate(args) -> int:
    scenario = load_scenario(args.scenario)
    from .buchi import translate

    b = translate(scenario.task, args.state_cap)
    print(to_text(rewrite_atomic(scenario.task)), file=sys.stderr)
    _emit(buchi_dot(b), args.out)
    return 0


def cmd_bench(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    seeds = range(args.seed, args.seed + args.seeds)
    kinds = ["agents", "bindings"] if args.sweep == "both" else [args.sweep]
    for kind in kinds:
        sizes = range(args.min_agents, args.max_agents + 1) if kind == "agents" else range(args.min_bindings, args.max_bindings + 1)
        rows = bench.sweep(kind, sizes, seeds)
        path = out / f"bench_{kind}.csv"
        bench.write_csv(path, kind, rows)
        med = bench.medians(rows)
        print(f"{kind}: wrote {path}")
        for size, work in med.items():
            print(f"  {size:>3}  median work {work:>12.0f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ltlpsi", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help: str):
        sp.add_argument("--scenario", default="builtin:agriculture",
                        help="scenario YAML file, or builtin:<name> (default: builtin:agriculture)")
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP, help="automaton state limit")
        sp.add_argument("--seed", type=int, default=0, help="recorded in outputs; seeds random scenarios")
        sp.add_argument("--visited", choices=["edge", "edge+team"], default="edge",
                        help="search revisits an edge only with a new team state under edge+team")

    sp = sub.add_parser("synth", help="synthesize a team plan")
    common(sp, "plan JSON path (default: stdout)")
    sp.add_argument("--dot", metavar="DIR", help="write automaton and product DOT files here")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("simulate", help="synthesize (or load) a plan and simulate the team")
    common(sp, "trace JSON path (default: stdout)")
    sp.add_argument("--plan", help="plan JSON written by synth")
    sp.add_argument("--log", help="line-oriented trace log path")
    sp.add_argument("--policy", choices=["barrier", "label"], default="barrier")
    sp.add_argument("--threads", action="store_true", help="run each agent on its own thread")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="check a stored trace against the task")
    sp.add_argument("--scenario", default="builtin:agriculture")
    sp.add_argument("--trace", required=True)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("optimize", help="choose a sub-team")
    common(sp, "result JSON path (default: stdout)")
    sp.add_argument("--objective", choices=OBJECTIVES, default="min_cost")
    sp.add_argument("--redundancy", type=int, default=1)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("translate", help="print the task automaton as DOT")
    common(sp, "DOT path (default: stdout)")
    sp.set_defaults(func=cmd_translate)

    sp = sub.add_parser("bench", help="scaling sweeps over random scenarios")
    sp.add_argument("--out", metavar="DIR", help="directory for bench_*.csv (default: .)")
    sp.add_argument("--sweep", choices=["agents", "bindings", "both"], default="both")
    sp.add_argument("--seed", type=int, default=0, help="first seed")
    sp.add_argument("--seeds", type=int, default=3, help="seeds per size")
    sp.add_argument("--min-agents", type=int, default=3)
    sp.add_argument("--max-agents", type=int, default=20)
    sp.add_argument("--min-bindings", type=int, default=3)
    sp.add_argument("--max-bindings", type=int, default=10)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, TaskSyntaxError, UnknownSymbolError, AutomatonSizeError,
            NoTeamError, InfeasibleSelection, PlanMismatchError, yaml.YAMLError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
