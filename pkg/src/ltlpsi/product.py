"""Agent x automaton product with per-edge binding feasibility.

A binding ``rho`` is feasible on a product move ``(s, z) -> (s', z')`` taken
along automaton edge ``sigma`` when the agent's next label ``L(s')`` contains
every action ``sigma`` requires true under ``rho`` and none it requires false.
The agent may take any nonempty subset of the feasible bindings, so only the
feasible set is stored.
"""
from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .agent import AgentModel
from .buchi import BuchiAutomaton, EdgeLabel, binding_fn, capability_fn

DEFAULT_PRODUCT_CAP = 1_000_000

State = tuple[int, int]  # (agent state, automaton state)


class ProductSizeError(RuntimeError):
    pass


def binding_feasible(rho: int, label: EdgeLabel, next_label: Iterable[str],
                     agent_ap: Iterable[str] | None = None) -> bool:
    """Whether an agent arriving in a state labeled ``next_label`` can play ``rho``.

    Actions outside ``agent_ap`` are never true for the agent, so requiring
    them false is always met.
    """
    c_true, c_false = capability_fn(label, rho)
    nxt = frozenset(next_label)
    if agent_ap is not None:
        nxt &= frozenset(agent_ap)
    return c_true <= nxt and not (c_false & nxt)


def feasible_bindings(label: EdgeLabel, next_label: Iterable[str],
                      ap_psi: Iterable[int], agent_ap: Iterable[str] | None = None) -> frozenset[int]:
    """Generator of the assignment family: the family is its nonempty subsets."""
    nxt = frozenset(next_label)
    return frozenset(rho for rho in ap_psi if binding_feasible(rho, label, nxt, agent_ap))


def assignment_family(feasible: Iterable[int]) -> frozenset[frozenset[int]]:
    """All nonempty subsets of a feasible set (for inspection and tests only)."""
    items = sorted(feasible)
    out = set()
    for mask in range(1, 1 << len(items)):
        out.add(frozenset(x for i, x in enumerate(items) if mask >> i & 1))
    return frozenset(out)


@dataclass(frozen=True)
class ProductEdge:
    src: State
    dst: State
    buchi_edge: int
    feasible: frozenset[int]
    weight: float

    @property
    def is_self(self) -> bool:
        """Whether the automaton component stays put."""
        return self.src[1] == self.dst[1]


@dataclass(frozen=True, eq=False)
class ProductAutomaton:
    agent: AgentModel
    buchi: BuchiAutomaton
    ap_psi: frozenset[int]
    states: tuple[State, ...]
    edges: tuple[ProductEdge, ...]

    @property
    def initial(self) -> State:
        return (self.agent.initial, self.buchi.initial)

    def is_accepting(self, q: State) -> bool:
        return q[1] in self.buchi.accepting

    @cached_property
    def _out(self) -> dict[State, tuple[int, ...]]:
        out: dict[State, list[int]] = {q: [] for q in self.states}
        for i, e in enumerate(self.edges):
            out[e.src].append(i)
        return {q: tuple(v) for q, v in out.items()}

    def out_edges(self, q: State) -> tuple[int, ...]:
        return self._out.get(q, ())

    def label(self, q: State) -> frozenset[str]:
        return self.agent.labels[q[0]]


def build_product(a: AgentModel, b: BuchiAutomaton, ap_psi: Iterable[int] | None = None,
                  cap: int = DEFAULT_PRODUCT_CAP) -> ProductAutomaton:
    """Reachable product; a move exists when some automaton edge leaves a feasible binding."""
    if ap_psi is None:
        ap_psi = frozenset().union(*(binding_fn(e.label) for e in b.edges))
    ap_psi = frozenset(ap_psi)
    start = (a.initial, b.initial)
    index = {start}
    order = [start]
    edges: list[ProductEdge] = []
    queue = deque([start])
    feas_cache: dict[tuple[int, int], frozenset[int]] = {}
    while queue:
        s, z = q = queue.popleft()
        for i in b.out_edges(z):
            be = b.edges[i]
            for d, w in a.successors(s):
                key = (i, d)
                if key not in feas_cache:
                    feas_cache[key] = feasible_bindings(be.label, a.labels[d], ap_psi)
                feas = feas_cache[key]
                if not feas:
                    continue
                dst = (d, be.dst)
                edges.append(ProductEdge(q, dst, i, feas, w))
                if dst not in index:
                    if len(index) >= cap:
                        raise ProductSizeError(f"product for {a.name!r} exceeds {cap} states")
                    index.add(dst)
                    order.append(dst)
                    queue.append(dst)
    return ProductAutomaton(a, b, ap_psi, tuple(order), tuple(edges))


def build_products(agents: Sequence[AgentModel], b: BuchiAutomaton,
                   ap_psi: Iterable[int] | None = None, workers: int = 1,
                   cap: int = DEFAULT_PRODUCT_CAP) -> list[ProductAutomaton]:
    """One product per agent, optionally built on a thread pool; order follows ``agents``."""
    ap = None if ap_psi is None else frozenset(ap_psi)
    if workers <= 1:
        return [build_product(a, b, ap, cap) for a in agents]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda a: build_product(a, b, ap, cap), agents))


def to_dot(g: ProductAutomaton, buchi_states: Iterable[int] | None = None,
           name: str = "product") -> str:
    """DOT rendering; with ``buchi_states`` only moves between those automaton states."""
    keep = None if buchi_states is None else set(buchi_states)

    def shown(q: State) -> bool:
        return keep is None or q[1] in keep

    def node(q: State) -> str:
        return f'"{g.agent.state_names[q[0]]},{q[1]}"'

    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for q in g.states:
        if shown(q):
            shape = "doublecircle" if g.is_accepting(q) else "ellipse"
            props = ", ".join(sorted(g.label(q)))
            lines.append(f'  {node(q)} [shape={shape}, xlabel="{{{props}}}"];')
    for e in g.edges:
        if shown(e.src) and shown(e.dst):
            lab = g.buchi.edges[e.buchi_edge].label.text()
            rhos = ",".join(str(r) for r in sorted(e.feasible))
            lines.append(f'  {node(e.src)} -> {node(e.dst)} [label="{lab}\\nrho: {{{rhos}}}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
