"""Choosing a sub-team that still covers every binding.

The synthesized team may be larger than needed. Any sub-team whose binding
sets still cover every binding (``redundancy`` times, if asked) can run the
task on its own. The search here is an exact branch and bound over agents.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Sequence

Objective = Literal["min_cost", "min_agents", "min_bindings"]
OBJECTIVES: tuple[str, ...] = ("min_agents", "min_cost", "min_bindings")


class InfeasibleSelection(ValueError):
    pass


@dataclass(frozen=True)
class Selection:
    agents: tuple[str, ...]
    assignment: Mapping[str, frozenset[int]]
    cost: float
    objective: str
    score: tuple


def _options(sets: Iterable[int] | Iterable[Iterable[int]]) -> list[frozenset[int]]:
    """Normalize one binding set or a list of alternative sets."""
    items = list(sets)
    if items and all(isinstance(x, int) for x in items):
        return [frozenset(items)]
    return [frozenset(x) for x in items if x]


def select_subteam(assignments: Mapping[str, Iterable[int] | Sequence[Iterable[int]]],
                   costs: Mapping[str, float] | None = None, objective: Objective = "min_cost",
                   redundancy: int = 1, bindings: Iterable[int] | None = None) -> Selection:
    """Exact optimum over sub-teams covering each binding ``redundancy`` times.

    ``assignments`` maps an agent to its binding set, or to a list of
    alternative sets of which it may take one. Objectives compare:

    * ``min_cost``: total cost, then team size;
    * ``min_agents``: team size, then total cost;
    * ``min_bindings``: the largest set any agent holds, then the total number
      of held bindings, then team size, then cost; agents may hold any subset
      of their set.

    Remaining ties go to the team whose agents come first in ``assignments``.
    """
    if redundancy < 1:
        raise ValueError("redundancy must be positive")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    names = list(assignments)
    costs = {n: float((costs or {}).get(n, 0.0)) for n in names}
    if any(c < 0 for c in costs.values()):
        raise ValueError("costs must be nonnegative")
    opts = {n: _options(assignments[n]) for n in names}
    need_set = frozenset(bindings) if bindings is not None else frozenset().union(*(o for v in opts.values() for o in v))
    for rho in sorted(need_set):
        holders = sum(1 for n in names if any(rho in o for o in opts[n]))
        if holders < redundancy:
            raise InfeasibleSelection(
                f"binding {rho} can be held by {holders} agent(s), {redundancy} required"
            )
    if objective == "min_bindings":
        for cap in range(1, len(need_set) + 1):
            sub = {
                n: sorted(
                    {frozenset(c) for o in opts[n] for k in range(1, cap + 1)
                     for c in itertools.combinations(sorted(o & need_set), k)},
                    key=lambda s: (len(s), sorted(s)),
                )
                for n in names
            }
            found = _branch_and_bound(names, sub, costs, need_set, redundancy, objective)
            if found is not None:
                return found
        raise InfeasibleSelection("no covering sub-team")
    found = _branch_and_bound(names, opts, costs, need_set, redundancy, objective)
    if found is None:
        raise InfeasibleSelection("no covering sub-team")
    return found


def _score(objective: str, picks: list[tuple[int, frozenset[int]]], costs: list[float]) -> tuple:
    cost = round(sum(costs[i] for i, _ in picks), 9)
    count = len(picks)
    if objective == "min_cost":
        return (cost, count)
    if objective == "min_agents":
        return (count, cost)
    return (max((len(o) for _, o in picks), default=0), sum(len(o) for _, o in picks), count, cost)


def _branch_and_bound(names: list[str], opts: Mapping[str, list[frozenset[int]]],
                      costs: Mapping[str, float], need: frozenset[int], k: int,
                      objective: str) -> Selection | None:
    n = len(names)
    cost_list = [costs[x] for x in names]
    # how many later agents could still hold each binding
    capacity = [{rho: 0 for rho in need} for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for rho in need:
            capacity[i][rho] = capacity[i + 1][rho] + any(rho in o for o in opts[names[i]])
    best: list = [None, None]  # (key, picks)
    picks: list[tuple[int, frozenset[int]]] = []
    remaining = {rho: k for rho in need}

    def go(i: int) -> None:
        partial = _score(objective, picks, cost_list)
        if best[0] is not None and partial > best[0][0]:
            return
        if all(v <= 0 for v in remaining.values()):
            key = (partial, tuple(j for j, _ in picks))
            if best[0] is None or key < best[0]:
                best[0], best[1] = key, list(picks)
            return
        if i == n:
            return
        if any(v > capacity[i][rho] for rho, v in remaining.items()):
            return
        for o in opts[names[i]]:
            useful = [rho for rho in o if remaining.get(rho, 0) > 0]
            if not useful:
                continue
            if objective == "min_bindings" and len(useful) < len(o & need):
                continue
            picks.append((i, o))
            for rho in o & need:
                remaining[rho] -= 1
            go(i + 1)
            for rho in o & need:
                remaining[rho] += 1
            picks.pop()
        go(i + 1)

    go(0)
    if best[1] is None:
        return None
    chosen = best[1]
    agents = tuple(names[i] for i, _ in chosen)
    return Selection(
        agents,
        {names[i]: o for i, o in chosen},
        round(sum(cost_list[i] for i, _ in chosen), 9),
        objective,
        best[0][0],
    )


def brute_force_subteam(assignments: Mapping[str, Iterable[int] | Sequence[Iterable[int]]],
                        costs: Mapping[str, float] | None = None, objective: Objective = "min_cost",
                        redundancy: int = 1, bindings: Iterable[int] | None = None) -> Selection:
    """Reference enumeration of every (agent, option) combination; small inputs only."""
    names = list(assignments)
    costs = {n: float((costs or {}).get(n, 0.0)) for n in names}
    opts = {n: _options(assignments[n]) for n in names}
    need = frozenset(bindings) if bindings is not None else frozenset().union(*(o for v in opts.values() for o in v))
    if objective == "min_bindings":
        opts = {
            n: sorted({frozenset(c) for o in v for k in range(1, len(o) + 1)
                       for c in itertools.combinations(sorted(o), k)}, key=sorted)
            for n, v in opts.items()
        }
    cost_list = [costs[x] for x in names]
    best = None
    for choice in itertools.product(*([None] + opts[x] for x in names)):
        picks = [(i, o) for i, o in enumerate(choice) if o is not None]
        if any(sum(rho in o for _, o in picks) < redundancy for rho in need):
            continue
        key = (_score(objective, picks, cost_list), tuple(i for i, _ in picks))
        if best is None or key < best[0]:
            best = (key, picks)
    if best is None:
        raise InfeasibleSelection("no covering sub-team")
    (score, _), picks = best
    return Selection(
        tuple(names[i] for i, _ in picks),
        {names[i]: o for i, o in picks},
        round(sum(cost_list[i] for i, _ in picks), 9),
        objective,
        score,
    )
