"""End-to-end synthesis and the JSON forms of plans and traces."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .buchi import DEFAULT_STATE_CAP, BuchiAutomaton, EdgeLabel, key_text, translate
from .executor import AgentBehavior, SyncPolicy, TeamTrace, run_team, synthesize_behavior
from .feasibility import BindingFamily, WorkCounter, feasible_binding_sets, prune_buchi
from .optimize import Objective, Selection, select_subteam
from .product import ProductAutomaton, build_products
from .scenario import Scenario
from .semantics import LassoTrace
from .team import PathShapeError, TeamPlan, VisitedMode, find_team_trace, path_segments


@dataclass(eq=False)
class Synthesis:
    scenario: Scenario
    buchi: BuchiAutomaton
    products: dict[str, ProductAutomaton]
    families: dict[str, BindingFamily]
    pruned: dict[str, BuchiAutomaton]
    plan: TeamPlan
    behaviors: dict[str, AgentBehavior]
    counter: WorkCounter = field(default_factory=WorkCounter)


def synthesize(scenario: Scenario, state_cap: int = DEFAULT_STATE_CAP,
               visited_mode: VisitedMode = "edge", workers: int = 1,
               counter: WorkCounter | None = None) -> Synthesis:
    """Automaton, per-agent families, team plan and behaviors for a scenario."""
    counter = counter or WorkCounter()
    b = translate(scenario.task, state_cap)
    products = dict(zip(
        (a.name for a in scenario.agents),
        build_products(scenario.agents, b, scenario.bindings, workers),
    ))
    families = {n: feasible_binding_sets(g, scenario.bindings, counter) for n, g in products.items()}
    pruned = {n: prune_buchi(b, families[n], products[n]) for n in products}
    plan = find_team_trace(scenario.agents, families, b, pruned, scenario.bindings,
                           visited_mode, counter)
    behaviors = {n: synthesize_behavior(products[n], plan, plan.assignment[n]) for n in plan.team}
    return Synthesis(scenario, b, products, families, pruned, plan, behaviors, counter)


def restrict_plan(plan: TeamPlan, assignment: Mapping[str, frozenset[int]]) -> TeamPlan:
    """The same path carried out by a sub-team with the given binding sets."""
    for n, r in assignment.items():
        if n not in plan.families or r not in plan.families[n]:
            raise ValueError(f"{n} cannot hold bindings {sorted(r)} on this path")
    team = tuple(sorted(assignment))
    covered = frozenset().union(*assignment.values())
    if not plan.ap_psi <= covered:
        raise ValueError(f"sub-team leaves bindings {sorted(plan.ap_psi - covered)} unassigned")
    return TeamPlan(
        plan.buchi,
        plan.path,
        team,
        {n: frozenset(assignment[n]) for n in team},
        {n: plan.families[n] for n in team},
        plan.ap_psi,
        plan.segments,
    )


def optimize_plan(syn: Synthesis, objective: Objective = "min_cost", redundancy: int = 1) -> Selection:
    """Sub-team of the synthesized team; each agent offers its largest surviving binding set."""
    offers = {}
    costs = {}
    for n in syn.plan.team:
        r = syn.plan.families[n].maximal[0]
        offers[n] = r
        costs[n] = synthesize_behavior(syn.products[n], syn.plan, r).cost
    return select_subteam(offers, costs, objective, redundancy, syn.plan.ap_psi)


# ------------------------------------------------------------ JSON


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dump_json(obj))


def label_json(label: EdgeLabel) -> dict[str, list[str]]:
    return {
        "true": sorted(key_text(k) for k in label.true),
        "false": sorted(key_text(k) for k in label.false),
    }


def automaton_json(b: BuchiAutomaton) -> dict[str, Any]:
    return {
        "states": len(b.states),
        "initial": b.initial,
        "accepting": sorted(b.accepting),
        "edges": [{"src": e.src, "dst": e.dst, **label_json(e.label)} for e in b.edges],
    }


def behavior_json(bh: AgentBehavior, names: tuple[str, ...]) -> dict[str, Any]:
    return {
        "bindings": sorted(bh.bindings),
        "cost": round(bh.cost, 9),
        "segments": [
            {
                "index": s.index,
                "start": names[s.start],
                "moves": [names[x] for x in s.moves],
                "cross_to": None if s.cross_to is None else names[s.cross_to],
                "cost": round(s.cost, 9),
            }
            for s in bh.segments
        ],
    }


def plan_json(syn: Synthesis, seed: int | None = None) -> dict[str, Any]:
    plan = syn.plan
    return {
        "scenario": syn.scenario.name,
        "task": syn.scenario.task_text,
        "bindings": sorted(syn.scenario.bindings),
        "seed": seed,
        "automaton": automaton_json(syn.buchi),
        "path": list(plan.path),
        "progress": list(plan.progress),
        "self_edges": [{"state": z, "edge": e} for z, e in plan.self_edges],
        "team": list(plan.team),
        "assignment": {n: sorted(r) for n, r in plan.assignment.items()},
        "families": {n: f.to_json() for n, f in syn.families.items()},
        "team_families": {n: f.to_json() for n, f in plan.families.items()},
        "behaviors": {
            n: behavior_json(bh, syn.products[n].agent.state_names) for n, bh in syn.behaviors.items()
        },
    }


class PlanMismatchError(ValueError):
    pass


def plan_from_json(data: Mapping[str, Any], syn_base: Synthesis) -> TeamPlan:
    """Rebuild a stored plan against a freshly translated automaton of the same task."""
    if automaton_json(syn_base.buchi) != data["automaton"]:
        raise PlanMismatchError("stored automaton differs from the scenario's task automaton")
    b = syn_base.buchi
    path = tuple(data["path"])
    assignment = {n: frozenset(r) for n, r in data["assignment"].items()}
    families = {n: BindingFamily.from_sets(map(frozenset, v)) for n, v in data["team_families"].items()}
    try:
        segments = path_segments(b, path)
    except (PathShapeError, IndexError) as exc:
        raise PlanMismatchError(f"stored path is not a plan path: {exc}") from exc
    return TeamPlan(b, path, tuple(data["team"]), assignment, families,
                    frozenset(data["bindings"]), segments)


def trace_json(trace: TeamTrace) -> dict[str, Any]:
    ticks = []
    for t, row in enumerate(trace.states):
        ticks.append({
            "tick": t,
            "automaton": list(trace.buchi[t]),
            "agents": {
                n: {
                    "state": trace.state_names[n][s],
                    "labels": sorted(trace.labels[n][s]),
                }
                for n, s in zip(trace.agents, row)
            },
        })
    return {
        "agents": list(trace.agents),
        "assignment": {n: sorted(r) for n, r in trace.assignment.items()},
        "policy": trace.policy,
        "loop": len(trace.states) - 1,
        "ticks": ticks,
        "crossings": {n: list(v) for n, v in trace.crossings.items()},
        "ready": {n: list(v) for n, v in trace.ready.items()},
        "messages": [
            {"tick": m.tick, "agent": m.agent, "segment": m.segment, "target": m.target, "ready": m.ready}
            for m in trace.messages
        ],
    }


def lasso_from_trace_json(data: Mapping[str, Any]) -> tuple[LassoTrace, dict[str, frozenset[int]]]:
    """Oracle view of a stored trace: ticks after the first, looping on the last."""
    agents = tuple(data["agents"])
    ticks = data["ticks"][1:]
    if not ticks:
        raise ValueError("trace has no ticks after the initial one")
    labels = tuple(tuple(frozenset(t["agents"][a]["labels"]) for t in ticks) for a in agents)
    loop = data["loop"] - 1
    assignment = {n: frozenset(r) for n, r in data["assignment"].items()}
    return LassoTrace(agents, labels, loop), assignment


def trace_log(trace: TeamTrace) -> str:
    """Line-oriented log: one line per tick plus one per message."""
    by_tick: dict[int, list[str]] = {}
    for m in trace.messages:
        by_tick.setdefault(m.tick, []).append(
            f"  msg {m.agent} -> all: ready={m.ready} segment={m.segment} target={m.target}"
        )
    lines = []
    for t, row in enumerate(trace.states):
        parts = [
            f"{n}={trace.state_names[n][s]}{{{','.join(sorted(trace.labels[n][s]))}}}"
            for n, s in zip(trace.agents, row)
        ]
        z = sorted(set(trace.buchi[t]))
        lines.append(f"tick {t} z={','.join(map(str, z))} " + " ".join(parts))
        lines.extend(by_tick.get(t, []))
    lines.append(f"loop at tick {len(trace.states) - 1}")
    return "\n".join(lines) + "\n"


def simulate(syn: Synthesis, plan: TeamPlan | None = None, policy: SyncPolicy = "barrier",
             threads: bool = False) -> TeamTrace:
    plan = plan or syn.plan
    return run_team(plan, syn.products, policy, "threads" if threads else "round-robin")
