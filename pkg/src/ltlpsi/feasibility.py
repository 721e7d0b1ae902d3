"""Which binding sets can each agent take on its own, and which edges can it use.

An agent can take ``r`` when its product has an accepting lasso that only
uses moves on which every binding in ``r`` is feasible. Feasibility is
downward closed in ``r``, so the search walks the subset lattice from the
full set down and skips anything below a set already found feasible.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

from .buchi import BuchiAutomaton
from .product import ProductAutomaton, State


@dataclass
class WorkCounter:
    """Counts explored edges; used by the benchmarks as a hardware-free size measure."""

    edges: int = 0

    def add(self, n: int = 1) -> None:
        self.edges += n


@dataclass(frozen=True)
class BindingFamily:
    """Downward-closed family of nonempty binding sets, kept as its maximal members."""

    maximal: tuple[frozenset[int], ...] = ()

    def __post_init__(self):
        if any(not m for m in self.maximal):
            raise ValueError("family members must be nonempty")

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[int]]) -> "BindingFamily":
        sets = {frozenset(s) for s in sets if s}
        maxi = [s for s in sets if not any(s < t for t in sets)]
        return cls(tuple(sorted(maxi, key=lambda s: (-len(s), sorted(s)))))

    def __contains__(self, r: Iterable[int]) -> bool:
        r = frozenset(r)
        return bool(r) and any(r <= m for m in self.maximal)

    def __bool__(self) -> bool:
        return bool(self.maximal)

    def members(self) -> Iterator[frozenset[int]]:
        """Every member, largest first, each once."""
        seen: set[frozenset[int]] = set()
        for size in range(max((len(m) for m in self.maximal), default=0), 0, -1):
            level = set()
            for m in self.maximal:
                for c in itertools.combinations(sorted(m), size):
                    level.add(frozenset(c))
            for s in sorted(level - seen, key=sorted):
                seen.add(s)
                yield s

    def support(self) -> frozenset[int]:
        return frozenset().union(*self.maximal) if self.maximal else frozenset()

    def to_json(self) -> list[list[int]]:
        return [sorted(m) for m in self.maximal]


def _admissible(g: ProductAutomaton, r: frozenset[int], q: State) -> Iterator[State]:
    for i in g.out_edges(q):
        e = g.edges[i]
        if r <= e.feasible:
            yield e.dst


def accepting_trace_exists(g: ProductAutomaton, r: Iterable[int],
                           counter: WorkCounter | None = None) -> bool:
    """Nested depth-first emptiness check over moves admitting every binding in ``r``."""
    r = frozenset(r)
    if not r:
        raise ValueError("binding set must be nonempty")
    count = counter.add if counter else (lambda n=1: None)
    visited: set[State] = set()
    flagged: set[State] = set()

    def inner(seed: State) -> bool:
        stack = [iter(_admissible(g, r, seed))]
        while stack:
            for q in stack[-1]:
                count()
                if q == seed:
                    return True
                if q not in flagged:
                    flagged.add(q)
                    stack.append(iter(_admissible(g, r, q)))
                break
            else:
                stack.pop()
        return False

    start = g.initial
    visited.add(start)
    stack: list[tuple[State, Iterator[State]]] = [(start, iter(_admissible(g, r, start)))]
    while stack:
        q, it = stack[-1]
        for nxt in it:
            count()
            if nxt not in visited:
                visited.add(nxt)
                stack.append((nxt, iter(_admissible(g, r, nxt))))
            break
        else:
            stack.pop()
            # postorder: launch the inner search from accepting states
            if g.is_accepting(q) and inner(q):
                return True
    return False


def feasible_binding_sets(g: ProductAutomaton, ap_psi: Iterable[int] | None = None,
                          counter: WorkCounter | None = None) -> BindingFamily:
    """Exact family of binding sets with an admissible accepting lasso."""
    ap = sorted(frozenset(ap_psi) if ap_psi is not None else g.ap_psi)
    found: list[frozenset[int]] = []
    for size in range(len(ap), 0, -1):
        for combo in itertools.combinations(ap, size):
            r = frozenset(combo)
            if any(r <= f for f in found):
                continue
            if accepting_trace_exists(g, r, counter):
                found.append(r)
    return BindingFamily.from_sets(found)


def retained_edges(b: BuchiAutomaton, fam: BindingFamily, g: ProductAutomaton) -> frozenset[int]:
    """Indices of automaton edges some member of ``fam`` can take on a reachable move."""
    keep = set()
    for e in g.edges:
        if e.buchi_edge in keep:
            continue
        if any(m & e.feasible for m in fam.maximal):
            keep.add(e.buchi_edge)
    return frozenset(keep)


def prune_buchi(b: BuchiAutomaton, fam: BindingFamily, g: ProductAutomaton) -> BuchiAutomaton:
    """The automaton restricted to edges the agent can take under its family."""
    return b.with_edges(retained_edges(b, fam, g))
