"""Depth-first search for an accepting automaton path a team can follow together.

The search alternates progress edges (which change the automaton state) with
self edges (which the team uses while its members move into position). For
every agent and every binding set ``r`` it might still take, a frame keeps
the set of agent states reachable along the path so far using only moves
admissible for ``r``. An agent leaves the team when none of its sets has a
reachable state; a frame is dropped when the remaining agents can no longer
jointly cover every binding.

Waiting on a self edge ends in a state where the agent can stay: the state
itself satisfies the self label for ``r`` and has a self-transition.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

from .agent import AgentModel
from .buchi import BuchiAutomaton, Edge, binding_fn
from .feasibility import BindingFamily, WorkCounter
from .product import binding_feasible

VisitedMode = Literal["edge", "edge+team"]

Reach = dict[frozenset[int], frozenset[int]]  # binding set -> reachable agent states


class NoTeamError(RuntimeError):
    pass


class PathShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    """Stay at ``state`` on ``self_edge`` (if any), then cross ``progress`` (if any)."""

    state: int
    self_edge: int | None
    progress: int | None


@dataclass(frozen=True, eq=False)
class TeamPlan:
    buchi: BuchiAutomaton
    path: tuple[int, ...]
    team: tuple[str, ...]
    assignment: Mapping[str, frozenset[int]]
    families: Mapping[str, BindingFamily]
    ap_psi: frozenset[int]
    segments: tuple[Segment, ...] = field(default=())

    @property
    def progress(self) -> tuple[int, ...]:
        return tuple(s.progress for s in self.segments if s.progress is not None)

    @property
    def self_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((s.state, s.self_edge) for s in self.segments if s.self_edge is not None)

    @property
    def states(self) -> tuple[int, ...]:
        return tuple(s.state for s in self.segments)


def parse_path(b: BuchiAutomaton, path: Sequence[int]) -> tuple[tuple[int, ...], tuple[tuple[int, int], ...]]:
    """Split an alternating path into progress edges and per-visit self edges."""
    segs = path_segments(b, path)
    return (
        tuple(s.progress for s in segs if s.progress is not None),
        tuple((s.state, s.self_edge) for s in segs if s.self_edge is not None),
    )


def path_segments(b: BuchiAutomaton, path: Sequence[int]) -> tuple[Segment, ...]:
    if not path:
        raise PathShapeError("empty path")
    edges = [b.edges[i] for i in path]
    if edges[0].src != b.initial:
        raise PathShapeError("path must start at the initial state")
    if not edges[-1].is_self:
        raise PathShapeError("path must end on a self edge")
    if edges[-1].dst not in b.accepting:
        raise PathShapeError("path must end at an accepting state")
    for k, (a, c) in enumerate(zip(edges, edges[1:])):
        if a.dst != c.src:
            raise PathShapeError(f"edges {k} and {k + 1} are not connected")
        if a.is_self == c.is_self:
            raise PathShapeError(f"edges {k} and {k + 1} do not alternate between self and progress")
    segs = []
    k = 0
    while k < len(path):
        e = edges[k]
        if e.is_self:
            nxt = path[k + 1] if k + 1 < len(path) else None
            segs.append(Segment(e.src, path[k], nxt))
            k += 2
        else:
            segs.append(Segment(e.src, None, path[k]))
            k += 1
    return tuple(segs)


# ------------------------------------------------------------ per-agent reachability


class _AgentView:
    """Cached admissibility queries for one agent against one automaton."""

    def __init__(self, agent: AgentModel, b: BuchiAutomaton):
        self.agent = agent
        self.b = b
        self._single: dict[tuple[int, int], frozenset[int]] = {}
        self._ok: dict[tuple[int, frozenset[int]], frozenset[int]] = {}

    def ok(self, edge: int, r: frozenset[int]) -> frozenset[int]:
        """Agent states whose label satisfies the edge for every binding in ``r``."""
        key = (edge, r)
        if key not in self._ok:
            label = self.b.edges[edge].label
            sets = []
            for rho in sorted(r):
                k1 = (edge, rho)
                if k1 not in self._single:
                    a = self.agent
                    self._single[k1] = frozenset(
                        s for s in a.states if binding_feasible(rho, label, a.labels[s])
                    )
                sets.append(self._single[k1])
            self._ok[key] = frozenset.intersection(*sets) if sets else frozenset(self.agent.states)
        return self._ok[key]

    def step(self, reach: frozenset[int], edge: int, r: frozenset[int]) -> frozenset[int]:
        ok = self.ok(edge, r)
        return frozenset(d for s in reach for d, _ in self.agent.edges[s] if d in ok)

    def settle(self, reach: frozenset[int], edge: int, r: frozenset[int]) -> frozenset[int]:
        """States the agent can move to and then wait in while the team sits on ``edge``."""
        ok = self.ok(edge, r)
        seen = set(reach & ok)
        seen |= self.step(reach, edge, r)
        queue = deque(seen)
        while queue:
            s = queue.popleft()
            for d, _ in self.agent.edges[s]:
                if d in ok and d not in seen:
                    seen.add(d)
                    queue.append(d)
        return frozenset(s for s in seen if self.agent.has_transition(s, s))


def update_team(edge: Edge | int, pruned: Mapping[str, BuchiAutomaton | Iterable[Edge]],
                agents: Iterable[str] | None = None, b: BuchiAutomaton | None = None) -> set[str]:
    """Agents whose pruned automaton still contains ``edge``."""
    if isinstance(edge, int):
        if b is None:
            raise ValueError("edge index needs the automaton")
        edge = b.edges[edge]
    names = agents if agents is not None else pruned.keys()
    out = set()
    for name in names:
        bj = pruned[name]
        edges = bj.edges if isinstance(bj, BuchiAutomaton) else bj
        if edge in set(edges):
            out.add(name)
    return out


def update_bindings(view: _AgentView, reach: Reach, edge: int) -> Reach:
    """Binding sets still usable after following ``edge``, with their new reach sets."""
    is_self = view.b.edges[edge].is_self
    out: Reach = {}
    for r, states in reach.items():
        nxt = view.settle(states, edge, r) if is_self else view.step(states, edge, r)
        if nxt:
            out[r] = nxt
    return out


def family_of(reach: Reach) -> BindingFamily:
    return BindingFamily.from_sets(reach)


# ------------------------------------------------------------ coverage


def _maximal(sets: Iterable[frozenset[int]]) -> list[frozenset[int]]:
    sets = set(sets)
    return sorted((s for s in sets if not any(s < t for t in sets)), key=lambda s: (-len(s), sorted(s)))


def _cover_selection(options: Sequence[Sequence[frozenset[int]]],
                     need: frozenset[int]) -> list[frozenset[int]] | None:
    """At most one maximal set per agent covering ``need`` (empty set = none), or None."""
    options = [_maximal(o) for o in options]
    suffix = [frozenset()] * (len(options) + 1)
    for i in range(len(options) - 1, -1, -1):
        suffix[i] = suffix[i + 1].union(*options[i]) if options[i] else suffix[i + 1]
    chosen: list[frozenset[int]] = []

    def go(i: int, left: frozenset[int]) -> bool:
        if i == len(options):
            return not left
        if not left <= suffix[i]:
            return False
        for o in options[i]:
            if o & left:
                chosen.append(o)
                if go(i + 1, left - o):
                    return True
                chosen.pop()
        chosen.append(frozenset())
        if go(i + 1, left):
            return True
        chosen.pop()
        return False

    return chosen if go(0, frozenset(need)) else None


def covers(options: Sequence[Sequence[frozenset[int]]], need: frozenset[int]) -> bool:
    """Whether picking at most one set per agent can cover ``need``."""
    return _cover_selection(options, need) is not None


def choose_assignment(options: Mapping[str, Iterable[frozenset[int]]],
                      need: frozenset[int]) -> dict[str, frozenset[int]]:
    """One nonempty binding set per agent, jointly covering ``need``.

    Each binding goes to the least loaded agent able to hold it alongside
    its other bindings (ties by agent name); agents left without a binding
    get the smallest binding they can hold. Families are downward closed,
    so every chosen set is a member.
    """
    names = sorted(options)
    sel = _cover_selection([list(options[n]) for n in names], frozenset(need))
    if sel is None:
        raise NoTeamError("no assignment covers every binding")
    # agents the cover left idle still compete with their largest member
    sel = [m or min(_maximal(list(options[n])), key=lambda s: (-len(s), sorted(s)))
           for n, m in zip(names, sel)]
    given: dict[str, set[int]] = {n: set() for n in names}
    for rho in sorted(need):
        holders = [n for n, m in zip(names, sel) if rho in m]
        best = min(holders, key=lambda n: (len(given[n]), names.index(n)))
        given[best].add(rho)
    out = {}
    for n, m in zip(names, sel):
        out[n] = frozenset(given[n] or {min(m)})
    return out


# ------------------------------------------------------------ search


@dataclass(frozen=True)
class _Frame:
    edge: int
    reach: Mapping[str, Reach]
    path: tuple[int, ...]


def _edge_order(b: BuchiAutomaton, edges: Iterable[int]) -> list[int]:
    return sorted(edges, key=lambda i: (b.edges[i].dst, b.edges[i].label.text(), i))


def _freeze(reach: Mapping[str, Reach]) -> tuple:
    return tuple(
        (name, tuple(sorted((tuple(sorted(r)), tuple(sorted(s))) for r, s in rs.items())))
        for name, rs in sorted(reach.items())
    )


def find_team_trace(agents: Sequence[AgentModel], families: Mapping[str, BindingFamily],
                    b: BuchiAutomaton, pruned: Mapping[str, BuchiAutomaton] | None = None,
                    ap_psi: Iterable[int] | None = None, visited_mode: VisitedMode = "edge",
                    counter: WorkCounter | None = None, frame_cap: int = 1_000_000) -> TeamPlan:
    """Accepting path plus a team whose binding sets cover every binding.

    ``visited_mode="edge"`` never expands an automaton edge twice; with
    ``"edge+team"`` an edge is re-expanded when reached with a different team
    state, which makes the search complete at a higher cost.
    """
    need = frozenset(ap_psi) if ap_psi is not None else frozenset().union(
        *(binding_fn(e.label) for e in b.edges))
    views = {a.name: _AgentView(a, b) for a in agents}
    edge_sets = {name: set(p.edges) for name, p in (pruned or {}).items()}
    init_reach = {
        a.name: {r: frozenset((a.initial,)) for r in families[a.name].members()}
        for a in agents
        if families.get(a.name)
    }
    stack = [
        _Frame(i, init_reach, ())
        for i in reversed(_edge_order(b, b.out_edges(b.initial)))
    ]
    visited: set = set()
    frames = 0
    while stack:
        fr = stack.pop()
        frames += 1
        if counter:
            counter.add()
        if frames > frame_cap:
            raise NoTeamError(f"search exceeded {frame_cap} frames")
        key = fr.edge if visited_mode == "edge" else (fr.edge, _freeze(fr.reach))
        if key in visited:
            continue
        visited.add(key)
        edge = b.edges[fr.edge]
        reach: dict[str, Reach] = {}
        for name, rs in fr.reach.items():
            if pruned is not None and edge not in edge_sets.get(name, ()):
                continue
            nxt = update_bindings(views[name], rs, fr.edge)
            if nxt:
                reach[name] = nxt
        if not covers([list(rs) for rs in reach.values()], need):
            continue
        path = fr.path + (fr.edge,)
        if edge.is_self and edge.dst in b.accepting:
            return _make_plan(b, path, reach, need)
        z = edge.dst
        succ = [i for i in b.out_edges(z) if b.edges[i].is_self != edge.is_self]
        for i in reversed(_edge_order(b, succ)):
            stack.append(_Frame(i, reach, path))
    raise NoTeamError("no team can follow an accepting path of the task automaton")


def _make_plan(b: BuchiAutomaton, path: tuple[int, ...], reach: Mapping[str, Reach],
               need: frozenset[int]) -> TeamPlan:
    options = {name: list(rs) for name, rs in reach.items()}
    assignment = choose_assignment(options, need)
    team = tuple(sorted(assignment))
    families = {name: family_of(reach[name]) for name in team}
    return TeamPlan(b, path, team, assignment, families, need, path_segments(b, path))
