"""Per-agent behaviors along a team plan and a lockstep simulation of their execution.

Each plan segment is: stay on the automaton state while moving under its
self label, stop in a state where waiting is possible, then cross the
progress edge together with the other members of the sync group. An agent
announces readiness by broadcasting ``(agent, target, 1)`` every tick it
sits at its waiting state; it crosses once it has seen ready messages from
all other group members. Messages sent during a tick are delivered at its
end, so all members cross on the same tick.

With ``policy="barrier"`` the sync group of every progress edge is the whole
team. With ``policy="label"`` it is only the agents whose bindings appear on
that edge, and the others advance on their own; this can let an agent run
ahead into a later segment while the team is still bound by an earlier
self label (see the tests for a concrete case).
"""
from __future__ import annotations

import heapq
import threading
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Sequence

from .agent import AgentModel
from .buchi import BuchiAutomaton, binding_fn
from .product import ProductAutomaton, binding_feasible
from .semantics import LassoTrace
from .team import Segment, TeamPlan

SyncPolicy = Literal["barrier", "label"]
RunMode = Literal["round-robin", "threads"]


class BehaviorError(RuntimeError):
    pass


class SyncDeadlockError(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class SyncMessage:
    tick: int
    agent: str
    segment: int
    target: int
    ready: int = 1


@dataclass(frozen=True)
class SegmentBehavior:
    """Moves made while staying on the automaton state, then the crossing move."""

    index: int
    start: int
    moves: tuple[int, ...]
    cross_to: int | None
    cost: float

    @property
    def wait_state(self) -> int:
        return self.moves[-1] if self.moves else self.start


@dataclass(frozen=True)
class AgentBehavior:
    agent: str
    bindings: frozenset[int]
    segments: tuple[SegmentBehavior, ...]

    @property
    def cost(self) -> float:
        return sum(s.cost for s in self.segments)


# ------------------------------------------------------------ admissibility helpers


def _ok(a: AgentModel, b: BuchiAutomaton, edge: int, r: frozenset[int]) -> frozenset[int]:
    label = b.edges[edge].label
    return frozenset(
        s for s in a.states if all(binding_feasible(rho, label, a.labels[s]) for rho in r)
    )


def _waitable(a: AgentModel, ok: frozenset[int]) -> frozenset[int]:
    return frozenset(s for s in ok if a.has_transition(s, s))


def _backward_good(a: AgentModel, ok: frozenset[int], goal: frozenset[int]) -> frozenset[int]:
    """States from which the agent can reach ``goal`` moving only into ``ok`` states."""
    pred: dict[int, list[int]] = {}
    for s in a.states:
        for d, _ in a.edges[s]:
            pred.setdefault(d, []).append(s)
    core = set(goal)
    queue = deque(core)
    while queue:
        x = queue.popleft()
        for p in pred.get(x, ()):
            if p in ok and p not in core:
                core.add(p)
                queue.append(p)
    entry = set(core)
    for x in core:
        entry.update(pred.get(x, ()))
    return frozenset(entry)


def viable_entries(a: AgentModel, plan: TeamPlan, r: frozenset[int]) -> list[frozenset[int]]:
    """For each segment, agent states from which the rest of the plan can be completed."""
    b = plan.buchi
    segs = plan.segments
    good: list[frozenset[int]] = [frozenset()] * (len(segs) + 1)
    good[len(segs)] = frozenset(a.states)
    for k in range(len(segs) - 1, -1, -1):
        seg = segs[k]
        if seg.progress is None:
            wait = _waitable(a, _ok(a, b, seg.self_edge, r))
            good[k] = _backward_good(a, _ok(a, b, seg.self_edge, r), wait)
            continue
        land = _ok(a, b, seg.progress, r) & good[k + 1]
        if seg.self_edge is None:
            good[k] = frozenset(s for s in a.states if any(d in land for d, _ in a.edges[s]))
            continue
        ok = _ok(a, b, seg.self_edge, r)
        cross = frozenset(w for w in _waitable(a, ok) if any(d in land for d, _ in a.edges[w]))
        good[k] = _backward_good(a, ok, cross)
    return good[: len(segs)]


# ------------------------------------------------------------ shortest paths


def find_behavior(g: ProductAutomaton, r: Iterable[int], start: int, segment: Segment,
                  targets: Iterable[int] | None = None, index: int = 0) -> SegmentBehavior:
    """Cheapest way through one segment in the agent's product.

    Moves use product edges of the segment's self edge admitting ``r`` and
    end in a state with an admissible self move; the progress edge is then
    taken into one of ``targets`` (any state when omitted). For the last
    segment the path ends at the first reachable waiting state. Ties go to
    fewer steps, then lower state ids along the path.
    """
    r = frozenset(r)
    target_set = None if targets is None else frozenset(targets)
    z = segment.state

    def moves_from(s: int, edge: int | None) -> list[tuple[int, float]]:
        if edge is None:
            return []
        out = []
        for i in g.out_edges((s, z)):
            e = g.edges[i]
            if e.buchi_edge == edge and r <= e.feasible:
                out.append((e.dst[0], e.weight))
        return sorted(out)

    def can_wait(s: int) -> bool:
        return segment.self_edge is not None and any(d == s for d, _ in moves_from(s, segment.self_edge))

    dist: dict[int, tuple[float, int, tuple[int, ...]]] = {}
    heap: list[tuple[float, int, tuple[int, ...], int]] = [(0.0, 0, (), start)]
    while heap:
        cost, steps, path, s = heapq.heappop(heap)
        if s in dist:
            continue
        dist[s] = (cost, steps, path)
        for d, w in moves_from(s, segment.self_edge):
            if d not in dist and d != s:
                heapq.heappush(heap, (cost + w, steps + 1, path + (d,), d))

    best = None
    for s, (cost, steps, path) in sorted(dist.items()):
        if segment.self_edge is None:
            if s != start:
                continue
        elif not can_wait(s):
            continue
        if segment.progress is None:
            cand = (cost, steps, path, None)
            if best is None or cand[:3] < best[:3]:
                best = cand
            continue
        for d, w in _progress_moves(g, r, s, segment):
            if target_set is not None and d not in target_set:
                continue
            cand = (cost + w, steps + 1, path + (d,), d)
            if best is None or cand[:3] < best[:3]:
                best = cand
    if best is None:
        raise BehaviorError(
            f"{g.agent.name}: no admissible way through segment {index} from state "
            f"{g.agent.state_names[start]!r}"
        )
    cost, _, path, cross = best
    moves = path if cross is None else path[:-1]
    return SegmentBehavior(index, start, tuple(moves), cross, cost)


def _progress_moves(g: ProductAutomaton, r: frozenset[int], s: int, segment: Segment):
    out = []
    for i in g.out_edges((s, segment.state)):
        e = g.edges[i]
        if e.buchi_edge == segment.progress and r <= e.feasible:
            out.append((e.dst[0], e.weight))
    return sorted(out)


def synthesize_behavior(g: ProductAutomaton, plan: TeamPlan, r: Iterable[int]) -> AgentBehavior:
    """Segment-by-segment cheapest behavior that never strands the agent."""
    r = frozenset(r)
    a = g.agent
    good = viable_entries(a, plan, r)
    if a.initial not in good[0]:
        raise BehaviorError(f"{a.name}: plan is not executable with bindings {sorted(r)}")
    segs = []
    s = a.initial
    for k, seg in enumerate(plan.segments):
        targets = good[k + 1] if k + 1 < len(good) else None
        sb = find_behavior(g, r, s, seg, targets, k)
        segs.append(sb)
        if sb.cross_to is not None:
            s = sb.cross_to
    return AgentBehavior(a.name, r, tuple(segs))


# ------------------------------------------------------------ sync groups


def sync_groups(plan: TeamPlan, policy: SyncPolicy = "barrier") -> list[frozenset[str]]:
    """Agents that must cross each segment's progress edge together."""
    out = []
    for seg in plan.segments:
        if seg.progress is None:
            out.append(frozenset())
            continue
        if policy == "barrier":
            group = frozenset(plan.team)
        else:
            used = binding_fn(plan.buchi.edges[seg.progress].label)
            group = frozenset(n for n in plan.team if plan.assignment[n] & used)
        out.append(group if len(group) > 1 else frozenset())
    return out


# ------------------------------------------------------------ simulation


@dataclass(frozen=True, eq=False)
class TeamTrace:
    """Joint agent states for ticks ``0..T``; tick ``T`` repeats forever."""

    agents: tuple[str, ...]
    state_names: Mapping[str, tuple[str, ...]]
    labels: Mapping[str, tuple[frozenset[str], ...]]
    states: tuple[tuple[int, ...], ...]
    buchi: tuple[tuple[int, ...], ...]
    crossings: Mapping[str, tuple[int, ...]]
    ready: Mapping[str, tuple[int | None, ...]]
    messages: tuple[SyncMessage, ...]
    assignment: Mapping[str, frozenset[int]]
    policy: str

    @property
    def ticks(self) -> int:
        return len(self.states) - 1

    def to_lasso(self) -> LassoTrace:
        """Positions are ticks ``1..T``; the initial states are never read."""
        seqs = tuple(
            tuple(self.labels[a][joint[j]] for joint in self.states[1:])
            for j, a in enumerate(self.agents)
        )
        return LassoTrace(self.agents, seqs, len(self.states) - 2)


class _Controller:
    def __init__(self, name: str, behavior: AgentBehavior, groups: Sequence[frozenset[str]],
                 targets: Sequence[int | None]):
        self.name = name
        self.behavior = behavior
        self.others = [g - {name} if name in g else frozenset() for g in groups]
        self.targets = targets
        self.seg = 0
        self.pos = 0
        self.state = behavior.segments[0].start

    @property
    def current(self) -> SegmentBehavior:
        return self.behavior.segments[self.seg]

    @property
    def at_wait(self) -> bool:
        return self.pos == len(self.current.moves)

    @property
    def done(self) -> bool:
        return self.current.cross_to is None and self.at_wait

    def announce(self, tick: int) -> list[SyncMessage]:
        if self.at_wait and self.current.cross_to is not None and self.others[self.seg]:
            return [SyncMessage(tick, self.name, self.seg, self.targets[self.seg])]
        return []

    def step(self, tick: int, seen: Mapping[int, frozenset[str]]) -> tuple[int, bool]:
        """Advance one tick given who is known ready per segment; returns (state, crossed)."""
        seg = self.current
        if not self.at_wait:
            self.state = seg.moves[self.pos]
            self.pos += 1
            return self.state, False
        if seg.cross_to is None:
            return self.state, False
        if self.others[self.seg] <= seen.get(self.seg, frozenset()):
            self.state = seg.cross_to
            self.seg += 1
            self.pos = 0
            return self.state, True
        return self.state, False


def run_team(plan: TeamPlan, products: Mapping[str, ProductAutomaton],
             policy: SyncPolicy = "barrier", mode: RunMode = "round-robin",
             behaviors: Mapping[str, AgentBehavior] | None = None) -> TeamTrace:
    """Synthesize every team member's behavior and simulate it tick by tick.

    ``mode="threads"`` runs each agent's controller on its own thread, with a
    barrier per tick; the result is identical to the round-robin reference.
    """
    names = tuple(plan.team)
    if behaviors is None:
        behaviors = {n: synthesize_behavior(products[n], plan, plan.assignment[n]) for n in names}
    groups = sync_groups(plan, policy)
    targets = [
        plan.buchi.edges[s.progress].dst if s.progress is not None else None for s in plan.segments
    ]
    ctrls = [_Controller(n, behaviors[n], groups, targets) for n in names]
    budget = sum(len(s.moves) + 1 for bh in behaviors.values() for s in bh.segments) + 2

    log: list[SyncMessage] = []
    crossings: dict[str, list[int]] = {n: [] for n in names}
    ready: dict[str, list[int | None]] = {n: [None] * len(plan.segments) for n in names}
    seen: dict[int, set[str]] = {}

    def post(batch: list[SyncMessage]) -> None:
        # delivered at the end of the tick that produced them
        for m in sorted(batch):
            log.append(m)
            seen.setdefault(m.segment, set()).add(m.agent)
            if ready[m.agent][m.segment] is None:
                ready[m.agent][m.segment] = m.tick

    post([m for c in ctrls for m in c.announce(0)])
    states = [tuple(c.state for c in ctrls)]
    local = [tuple(c.seg for c in ctrls)]
    runner = _ThreadedRunner(ctrls) if mode == "threads" else None
    try:
        tick = 0
        while not all(c.done for c in ctrls):
            tick += 1
            if tick > budget:
                waiting = [c.name for c in ctrls if not c.done]
                raise SyncDeadlockError(f"no progress by tick {tick}; still waiting: {waiting}")
            snapshot = {k: frozenset(v) for k, v in seen.items()}
            if runner is not None:
                results = runner.step(tick, snapshot)
            else:
                results = [c.step(tick, snapshot) for c in ctrls]
            for c, (_, crossed) in zip(ctrls, results):
                if crossed:
                    crossings[c.name].append(tick)
            post([m for c in ctrls for m in c.announce(tick)])
            states.append(tuple(c.state for c in ctrls))
            local.append(tuple(c.seg for c in ctrls))
    finally:
        if runner is not None:
            runner.close()
    # one extra tick with everyone waiting closes the loop
    states.append(states[-1])
    local.append(local[-1])
    agents = {n: products[n].agent for n in names}
    return TeamTrace(
        names,
        {n: agents[n].state_names for n in names},
        {n: agents[n].labels for n in names},
        tuple(states),
        tuple(tuple(plan.segments[k].state for k in row) for row in local),
        {n: tuple(v) for n, v in crossings.items()},
        {n: tuple(v) for n, v in ready.items()},
        tuple(log),
        {n: frozenset(plan.assignment[n]) for n in names},
        policy,
    )


class _ThreadedRunner:
    """One worker thread per controller; each tick is bracketed by two barriers."""

    def __init__(self, ctrls: Sequence[_Controller]):
        self.ctrls = ctrls
        self.start = threading.Barrier(len(ctrls) + 1)
        self.finish = threading.Barrier(len(ctrls) + 1)
        self.tick = 0
        self.seen: Mapping[int, frozenset[str]] = {}
        self.results: list[tuple[int, bool] | None] = [None] * len(ctrls)
        self.stopping = False
        self.threads = [
            threading.Thread(target=self._work, args=(i,), daemon=True) for i in range(len(ctrls))
        ]
        for t in self.threads:
            t.start()

    def _work(self, i: int) -> None:
        while True:
            self.start.wait()
            if self.stopping:
                return
            self.results[i] = self.ctrls[i].step(self.tick, self.seen)
            self.finish.wait()

    def step(self, tick: int, seen: Mapping[int, frozenset[str]]) -> list[tuple[int, bool]]:
        self.tick, self.seen = tick, seen
        self.start.wait()
        self.finish.wait()
        return list(self.results)  # type: ignore[arg-type]

    def close(self) -> None:
        self.stopping = True
        self.start.wait()
        for t in self.threads:
            t.join()


# ------------------------------------------------------------ checks


def check_sync_protocol(trace: TeamTrace, plan: TeamPlan, policy: SyncPolicy | None = None) -> list[str]:
    """Violations of the crossing contract: group members cross together, never before all are ready."""
    out = []
    groups = sync_groups(plan, policy or trace.policy)  # type: ignore[arg-type]
    for k, group in enumerate(groups):
        if not group:
            continue
        ticks = {n: trace.crossings[n][k] if len(trace.crossings[n]) > k else None for n in group}
        if None in ticks.values():
            out.append(f"segment {k}: {sorted(n for n, t in ticks.items() if t is None)} never crossed")
            continue
        if len(set(ticks.values())) > 1:
            out.append(f"segment {k}: members crossed at different ticks {dict(sorted(ticks.items()))}")
        for n in group:
            r = trace.ready[n][k]
            if r is None:
                out.append(f"segment {k}: {n} crossed without announcing readiness")
                continue
            for m in group:
                if ticks[m] is not None and ticks[m] <= r:
                    out.append(f"segment {k}: {m} crossed at tick {ticks[m]} before {n} was ready")
    return out


def check_admissible(trace: TeamTrace, agents: Mapping[str, AgentModel]) -> list[str]:
    """Consecutive states of every agent must be transitions of its model."""
    out = []
    for j, n in enumerate(trace.agents):
        a = agents[n]
        for t in range(1, len(trace.states)):
            s, d = trace.states[t - 1][j], trace.states[t][j]
            if not a.has_transition(s, d):
                out.append(f"{n}: tick {t}: no transition {a.state_names[s]!r} -> {a.state_names[d]!r}")
    return out
