"""Exact plan-existence oracle: fixed assignments, search over (edge, reach sets)."""
from __future__ import annotations

import itertools

from ltlpsi.product import binding_feasible


def _ok(agent, label, r):
    return frozenset(s for s in agent.states if all(binding_feasible(rho, label, agent.labels[s]) for rho in r))


def _advance(agent, states, edge, r):
    ok = _ok(agent, edge.label, r)
    moved = {d for s in states for d, _ in agent.edges[s] if d in ok}
    if not edge.is_self:
        return frozenset(moved)
    seen = set(states & ok) | moved
    frontier = list(seen)
    while frontier:
        s = frontier.pop()
        for d, _ in agent.edges[s]:
            if d in ok and d not in seen:
                seen.add(d)
                frontier.append(d)
    return frozenset(s for s in seen if agent.has_transition(s, s))


def follows(agents, b, assignment) -> bool:
    """Whether the agents in ``assignment`` can follow some accepting path together."""
    chosen = [(a, assignment[a.name]) for a in agents if a.name in assignment]
    start = tuple(frozenset((a.initial,)) for a, _ in chosen)
    stack = [(i, start) for i in b.out_edges(b.initial)]
    seen = set()
    while stack:
        i, reach = stack.pop()
        if (i, reach) in seen:
            continue
        seen.add((i, reach))
        e = b.edges[i]
        nxt = tuple(_advance(a, s, e, r) for (a, r), s in zip(chosen, reach))
        if not all(nxt):
            continue
        if e.is_self and e.dst in b.accepting:
            return True
        stack.extend((j, nxt) for j in b.out_edges(e.dst) if b.edges[j].is_self != e.is_self)
    return False


def plan_exists(agents, families, b, need) -> bool:
    options = [[None, *families[a.name].members()] for a in agents]
    for picks in itertools.product(*options):
        assignment = {a.name: r for a, r in zip(agents, picks) if r is not None}
        if frozenset().union(*assignment.values()) >= need and assignment and follows(agents, b, assignment):
            return True
    return False
