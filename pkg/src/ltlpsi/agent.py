"""Capabilities as weighted transition systems and their composition into agents."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping, Sequence


class AgentModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Capability:
    """One faculty of an agent: motion, a sensor, an arm.

    ``transitions`` maps ``(s, s')`` to a nonnegative cost.
    """

    name: str
    states: tuple[str, ...]
    initial: str
    ap: frozenset[str]
    transitions: Mapping[tuple[str, str], float]
    labels: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def label(self, s: str) -> frozenset[str]:
        return self.labels.get(s, frozenset())

    def successors(self, s: str) -> list[tuple[str, float]]:
        return [(d, w) for (src, d), w in self.transitions.items() if src == s]


def make_capability(name: str, states: Sequence[str], initial: str, ap: Iterable[str],
                    transitions: Mapping[tuple[str, str], float] | Iterable,
                    labels: Mapping[str, Iterable[str]] | None = None,
                    wait_cost: float | None = None) -> Capability:
    """Build and validate a capability.

    ``transitions`` may be a mapping or an iterable of ``(s, s', w)`` triples.
    With ``wait_cost`` set, a self-loop of that cost is added to every state
    lacking one.
    """
    if isinstance(transitions, Mapping):
        trans = {tuple(k): float(v) for k, v in transitions.items()}
    else:
        trans = {(s, d): float(w) for s, d, w in transitions}
    if wait_cost is not None:
        for s in states:
            trans.setdefault((s, s), float(wait_cost))
    cap = Capability(
        name,
        tuple(states),
        initial,
        frozenset(ap),
        trans,
        {s: frozenset(v) for s, v in (labels or {}).items()},
    )
    validate_capability(cap)
    return cap


def validate_capability(cap: Capability) -> None:
    sset = set(cap.states)
    if len(sset) != len(cap.states):
        raise AgentModelError(f"capability {cap.name!r}: duplicate state names")
    if cap.initial not in sset:
        raise AgentModelError(f"capability {cap.name!r}: initial state {cap.initial!r} unknown")
    for (s, d), w in cap.transitions.items():
        if s not in sset or d not in sset:
            raise AgentModelError(f"capability {cap.name!r}: transition {s!r}->{d!r} uses unknown state")
        if w < 0:
            raise AgentModelError(f"capability {cap.name!r}: negative weight on {s!r}->{d!r}")
    for s, props in cap.labels.items():
        if s not in sset:
            raise AgentModelError(f"capability {cap.name!r}: label on unknown state {s!r}")
        if extra := props - cap.ap:
            raise AgentModelError(
                f"capability {cap.name!r}: state {s!r} labeled with undeclared {sorted(extra)}"
            )
    sources = {s for s, _ in cap.transitions}
    if missing := [s for s in cap.states if s not in sources]:
        raise AgentModelError(f"capability {cap.name!r}: no outgoing transition from {missing}")


@dataclass(frozen=True, eq=False)
class AgentModel:
    """Composite transition system of one agent; states are indices ``0..n-1``.

    State 0 is the initial state. ``edges[s]`` lists ``(s', w)`` in a fixed order.
    """

    name: str
    state_names: tuple[str, ...]
    labels: tuple[frozenset[str], ...]
    edges: tuple[tuple[tuple[int, float], ...], ...]
    ap: frozenset[str]
    initial: int = 0

    @property
    def states(self) -> range:
        return range(len(self.state_names))

    @cached_property
    def _weights(self) -> dict[tuple[int, int], float]:
        return {(s, d): w for s in self.states for d, w in self.edges[s]}

    def weight(self, s: int, d: int) -> float:
        return self._weights[(s, d)]

    def has_transition(self, s: int, d: int) -> bool:
        return (s, d) in self._weights

    def successors(self, s: int) -> tuple[tuple[int, float], ...]:
        return self.edges[s]

    def index_of(self, name: str) -> int:
        return self.state_names.index(name)

    def with_name(self, name: str) -> "AgentModel":
        return AgentModel(name, self.state_names, self.labels, self.edges, self.ap, self.initial)


def compose_capabilities(caps: Sequence[Capability], name: str = "agent") -> AgentModel:
    """Reachable synchronous product of capabilities with additive costs.

    A composite move exists iff every component has the corresponding move
    (including self-loops); the composite label is the union of the parts.
    """
    if not caps:
        raise AgentModelError("cannot compose an empty capability list")
    for c in caps:
        validate_capability(c)
    succ = [
        {s: sorted(c.successors(s), key=lambda t: c.states.index(t[0])) for s in c.states}
        for c in caps
    ]
    start = tuple(c.initial for c in caps)
    index = {start: 0}
    order = [start]
    edges: list[list[tuple[int, float]]] = []
    queue = deque([start])
    while queue:
        comp = queue.popleft()
        out = []
        for moves in product(*(succ[i][s] for i, s in enumerate(comp))):
            dst = tuple(d for d, _ in moves)
            if dst not in index:
                index[dst] = len(order)
                order.append(dst)
                queue.append(dst)
            out.append((index[dst], sum(w for _, w in moves)))
        edges.append(out)
    labels = tuple(
        frozenset().union(*(c.label(s) for c, s in zip(caps, comp))) for comp in order
    )
    names = tuple("|".join(comp) for comp in order)
    return AgentModel(
        name,
        names,
        labels,
        tuple(tuple(e) for e in edges),
        frozenset().union(*(c.ap for c in caps)),
    )


def validate_agent(a: AgentModel) -> list[str]:
    """Human-readable problems with an agent model; empty when it is usable."""
    out = []
    for s in a.states:
        if not a.has_transition(s, s):
            out.append(f"{a.name}: state {a.state_names[s]!r} has no self-transition (agent cannot wait)")
    seen = {a.initial}
    queue = deque([a.initial])
    while queue:
        s = queue.popleft()
        for d, _ in a.edges[s]:
            if d not in seen:
                seen.add(d)
                queue.append(d)
    for s in a.states:
        if s not in seen:
            out.append(f"{a.name}: state {a.state_names[s]!r} is unreachable")
        if extra := a.labels[s] - a.ap:
            out.append(f"{a.name}: state {a.state_names[s]!r} has labels outside its propositions: {sorted(extra)}")
    return out
