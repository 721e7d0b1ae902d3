"""LTL to Büchi translation over bound propositions ``pi^rho``.

The translation is an on-the-fly tableau: a state is the set of obligations
left for the next position, every expansion ("cover") of a state yields a
conjunction of literals and a successor obligation set. Eventualities give a
generalized acceptance condition which is degeneralized with a counter.
Covers are first grouped per (source, target) as disjunctive labels and then
split by :func:`normalize_edges`, so each final edge carries one conjunction
``(sigma_T, sigma_F)``.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Mapping

from .formula import (
    TRUE,
    Always,
    And,
    Bound,
    BVar,
    Const,
    Eventually,
    Formula,
    Next,
    Not,
    Or,
    OuterNot,
    Prop,
    Release,
    Until,
    conj,
    disj,
    has_binding,
    is_atomic,
    nnf,
    rewrite_atomic,
    walk,
)

DEFAULT_STATE_CAP = 100_000

Key = Hashable  # an action name for plain LTL, a (pi, rho) pair for bound atoms


class AutomatonSizeError(RuntimeError):
    pass


def key_text(key: Key) -> str:
    if isinstance(key, tuple):
        return f"{key[0]}^{key[1]}"
    return str(key)


def _sorted_keys(keys: Iterable[Key]) -> list[Key]:
    return sorted(keys, key=lambda k: (isinstance(k, tuple), repr(k)))


@dataclass(frozen=True)
class EdgeLabel:
    """Conjunctive edge label: ``true`` must hold, ``false`` must not."""

    true: frozenset = frozenset()
    false: frozenset = frozenset()

    def __post_init__(self):
        if self.true & self.false:
            raise ValueError(f"contradictory label: {sorted(map(key_text, self.true & self.false))}")

    def satisfied_by(self, letter: Iterable[Key]) -> bool:
        letter = set(letter)
        return self.true <= letter and not (self.false & letter)

    @property
    def is_true(self) -> bool:
        return not self.true and not self.false

    def text(self) -> str:
        parts = [key_text(k) for k in _sorted_keys(self.true)]
        parts += ["!" + key_text(k) for k in _sorted_keys(self.false)]
        return " & ".join(parts) if parts else "true"

    def sort_key(self) -> tuple:
        return (
            [repr(k) for k in _sorted_keys(self.true)],
            [repr(k) for k in _sorted_keys(self.false)],
        )

    def __str__(self) -> str:
        return self.text()


@dataclass(frozen=True)
class Edge:
    src: int
    label: EdgeLabel
    dst: int

    @property
    def is_self(self) -> bool:
        return self.src == self.dst


@dataclass(frozen=True)
class BuchiAutomaton:
    states: tuple[int, ...]
    initial: int
    edges: tuple[Edge, ...]
    accepting: frozenset[int]
    names: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        sset = set(self.states)
        if self.initial not in sset:
            raise ValueError("initial state not in states")
        for e in self.edges:
            if e.src not in sset or e.dst not in sset:
                raise ValueError(f"edge endpoint outside states: {e}")
        if not self.accepting <= sset:
            raise ValueError("accepting states outside states")

    @cached_property
    def _out(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {z: [] for z in self.states}
        for i, e in enumerate(self.edges):
            out[e.src].append(i)
        return {z: tuple(v) for z, v in out.items()}

    def out_edges(self, z: int) -> tuple[int, ...]:
        """Indices into ``edges`` leaving ``z``."""
        return self._out[z]

    def self_edges(self, z: int) -> tuple[int, ...]:
        return tuple(i for i in self._out[z] if self.edges[i].dst == z)

    def edge_index(self, edge: Edge) -> int:
        return self.edges.index(edge)

    def propositions(self) -> frozenset:
        out: set = set()
        for e in self.edges:
            out |= e.label.true | e.label.false
        return frozenset(out)

    def with_edges(self, keep: Iterable[int]) -> "BuchiAutomaton":
        keep = set(keep)
        return BuchiAutomaton(
            self.states,
            self.initial,
            tuple(e for i, e in enumerate(self.edges) if i in keep),
            self.accepting,
            self.names,
        )


# ------------------------------------------------------------ binding functions


def binding_fn(label: EdgeLabel) -> frozenset[int]:
    """Bindings that appear in the label."""
    return frozenset(k[1] for k in label.true | label.false if isinstance(k, tuple))


def capability_fn(label: EdgeLabel, rho: int) -> tuple[frozenset[str], frozenset[str]]:
    """Actions required true / false under binding ``rho``."""
    c_true = frozenset(k[0] for k in label.true if isinstance(k, tuple) and k[1] == rho)
    c_false = frozenset(k[0] for k in label.false if isinstance(k, tuple) and k[1] == rho)
    return c_true, c_false


# ------------------------------------------------------------ literal NNF


@dataclass(frozen=True)
class Lit(Formula):
    key: Key
    positive: bool = True


def to_ltl(f: Formula) -> Formula:
    """Plain NNF LTL whose leaves are :class:`Lit` (keys ``name`` or ``(pi, rho)``).

    Task formulas are rewritten to atomic form first; an outer negation on a
    bound atom becomes the same literal as an inner one.
    """
    if has_binding(f):
        if not is_atomic(f) or any(isinstance(n, OuterNot) for n in walk(f)):
            f = rewrite_atomic(f)
        return _literalize(f)
    return _literalize(nnf(f))


def _literalize(f: Formula) -> Formula:
    match f:
        case Const():
            return f
        case Prop(name):
            return Lit(name, True)
        case Not(Prop(name)):
            return Lit(name, False)
        case Bound(Prop(pi), BVar(rho)):
            return Lit((pi, rho), True)
        case Bound(Not(Prop(pi)), BVar(rho)):
            return Lit((pi, rho), False)
        case OuterNot(Bound(Prop(pi), BVar(rho))):
            return Lit((pi, rho), False)
        case OuterNot(Bound(Not(Prop(pi)), BVar(rho))):
            return Lit((pi, rho), True)
        case And(args):
            return conj(*(_literalize(a) for a in args))
        case Or(args):
            return disj(*(_literalize(a) for a in args))
        case Next(a):
            return Next(_literalize(a))
        case Always(a):
            return Always(_literalize(a))
        case Eventually(a):
            return Eventually(_literalize(a))
        case Until(l, r):
            return Until(_literalize(l), _literalize(r))
        case Release(l, r):
            return Release(_literalize(l), _literalize(r))
    raise TypeError(f"cannot translate node {f!r}")


def _eventualities(f: Formula) -> list[Formula]:
    found: dict[str, Formula] = {}

    def visit(g: Formula) -> None:
        if isinstance(g, (Until, Eventually)):
            found.setdefault(repr(g), g)
        match g:
            case And(args) | Or(args):
                for a in args:
                    visit(a)
            case Next(a) | Always(a) | Eventually(a):
                visit(a)
            case Until(l, r) | Release(l, r):
                visit(l)
                visit(r)

    visit(f)
    return [found[k] for k in sorted(found)]


# ------------------------------------------------------------ tableau


def _conjuncts(f: Formula) -> frozenset:
    if isinstance(f, And):
        return frozenset(x for a in f.args for x in _conjuncts(a))
    if f == TRUE:
        return frozenset()
    return frozenset((f,))


@dataclass(frozen=True)
class _Cover:
    pos: frozenset
    neg: frozenset
    nxt: frozenset
    carried: frozenset


def _covers(obligations: Iterable[Formula]) -> list[_Cover]:
    """All consistent one-step expansions of a set of NNF obligations."""
    out: dict[tuple, _Cover] = {}
    start = tuple(sorted(obligations, key=repr))

    def expand(todo: tuple, done: frozenset, pos: frozenset, neg: frozenset,
               nxt: frozenset, carried: frozenset) -> None:
        if not todo:
            c = _Cover(pos, neg, nxt, carried)
            out[(tuple(sorted(map(repr, pos))), tuple(sorted(map(repr, neg))),
                 tuple(sorted(map(repr, nxt))), tuple(sorted(map(repr, carried))))] = c
            return
        f, rest = todo[0], todo[1:]
        if f in done:
            expand(rest, done, pos, neg, nxt, carried)
            return
        done = done | {f}
        match f:
            case Const(True):
                expand(rest, done, pos, neg, nxt, carried)
            case Const(False):
                return
            case Lit(key, True):
                if key not in neg:
                    expand(rest, done, pos | {key}, neg, nxt, carried)
            case Lit(key, False):
                if key not in pos:
                    expand(rest, done, pos, neg | {key}, nxt, carried)
            case And(args):
                expand(args + rest, done, pos, neg, nxt, carried)
            case Or(args):
                for a in args:
                    expand((a,) + rest, done, pos, neg, nxt, carried)
            case Next(a):
                expand(rest, done, pos, neg, nxt | _conjuncts(a), carried)
            case Always(a):
                expand((a,) + rest, done, pos, neg, nxt | {f}, carried)
            case Eventually(a):
                expand((a,) + rest, done, pos, neg, nxt, carried)
                expand(rest, done, pos, neg, nxt | {f}, carried | {f})
            case Until(l, r):
                expand((r,) + rest, done, pos, neg, nxt, carried)
                expand((l,) + rest, done, pos, neg, nxt | {f}, carried | {f})
            case Release(l, r):
                expand((l, r) + rest, done, pos, neg, nxt, carried)
                expand((r,) + rest, done, pos, neg, nxt | {f}, carried)
            case _:
                raise TypeError(f"unexpected node {f!r}")

    expand(start, frozenset(), frozenset(), frozenset(), frozenset(), frozenset())
    return [out[k] for k in sorted(out)]


@dataclass(frozen=True)
class FormulaEdge:
    """Edge whose label is an arbitrary Boolean formula over literals."""

    src: int
    label: Formula
    dst: int


@dataclass(frozen=True)
class LabelledBuchi:
    states: tuple[int, ...]
    initial: int
    edges: tuple[FormulaEdge, ...]
    accepting: frozenset[int]
    names: tuple[str, ...] = field(default=(), compare=False)


def _state_text(obligations: frozenset, level: int, k: int) -> str:
    body = ", ".join(sorted(_fmt(f) for f in obligations)) or "true"
    return f"{{{body}}}" + (f"#{level}" if k else "")


def _fmt(f: Formula) -> str:
    match f:
        case Lit(key, pos):
            return ("" if pos else "!") + key_text(key)
        case Const(v):
            return "true" if v else "false"
        case And(args):
            return "(" + " & ".join(_fmt(a) for a in args) + ")"
        case Or(args):
            return "(" + " | ".join(_fmt(a) for a in args) + ")"
        case Next(a):
            return f"X({_fmt(a)})"
        case Always(a):
            return f"G({_fmt(a)})"
        case Eventually(a):
            return f"F({_fmt(a)})"
        case Until(l, r):
            return f"({_fmt(l)} U {_fmt(r)})"
        case Release(l, r):
            return f"({_fmt(l)} R {_fmt(r)})"
    raise TypeError(f)


def tableau(f: Formula, state_cap: int = DEFAULT_STATE_CAP) -> LabelledBuchi:
    """Degeneralized tableau automaton with disjunctive (formula) edge labels.

    Each cover is accepting for an eventuality it does not postpone. Levels
    ``0..k`` track how many eventualities have been fulfilled in order; level
    ``k`` is accepting and restarts the count on its next transition.
    """
    g = to_ltl(f)
    evs = _eventualities(g)
    k = len(evs)
    cover_cache: dict[frozenset, list[_Cover]] = {}

    def covers(obl: frozenset) -> list[_Cover]:
        if obl not in cover_cache:
            cover_cache[obl] = _covers(obl)
        return cover_cache[obl]

    def next_level(level: int, carried: frozenset) -> int:
        j = 0 if level == k else level
        while j < k and evs[j] not in carried:
            j += 1
        return j

    init = (_conjuncts(g), 0)
    index: dict[tuple, int] = {init: 0}
    order: list[tuple] = [init]
    grouped: dict[tuple[int, int], list[Formula]] = {}
    queue = deque([init])
    while queue:
        state = queue.popleft()
        obl, level = state
        src = index[state]
        for c in covers(obl):
            dst_state = (c.nxt, next_level(level, c.carried))
            if dst_state not in index:
                if len(index) >= state_cap:
                    raise AutomatonSizeError(f"automaton exceeds state cap of {state_cap}")
                index[dst_state] = len(order)
                order.append(dst_state)
                queue.append(dst_state)
            lits = [Lit(p, True) for p in _sorted_keys(c.pos)]
            lits += [Lit(p, False) for p in _sorted_keys(c.neg)]
            grouped.setdefault((src, index[dst_state]), []).append(conj(*lits))

    accepting = frozenset(i for i, (_, level) in enumerate(order) if level == k)
    edges = tuple(
        FormulaEdge(s, disj(*labels), d) for (s, d), labels in sorted(grouped.items())
    )
    names = tuple(_state_text(obl, level, k) for obl, level in order)
    return LabelledBuchi(tuple(range(len(order))), 0, edges, accepting, names)


# ------------------------------------------------------------ edge normalization


def _dnf(f: Formula) -> list[tuple[frozenset, frozenset]] | None:
    """Clauses of a Boolean formula over literals; contradictory clauses dropped."""
    match f:
        case Const(True):
            return [(frozenset(), frozenset())]
        case Const(False):
            return []
        case Lit(key, True) | Prop(key):
            return [(frozenset((key,)), frozenset())]
        case Lit(key, False) | Not(Prop(key)):
            return [(frozenset(), frozenset((key,)))]
        case Bound(Prop(pi), BVar(rho)):
            return [(frozenset(((pi, rho),)), frozenset())]
        case Bound(Not(Prop(pi)), BVar(rho)) | OuterNot(Bound(Prop(pi), BVar(rho))):
            return [(frozenset(), frozenset(((pi, rho),)))]
        case Or(args):
            return [c for a in args for c in _dnf(a)]
        case And(args):
            clauses = [(frozenset(), frozenset())]
            for a in args:
                clauses = [
                    (t1 | t2, f1 | f2)
                    for (t1, f1), (t2, f2) in itertools.product(clauses, _dnf(a))
                    if not ((t1 | t2) & (f1 | f2))
                ]
            return clauses
        case Not(a):
            return _dnf(_push_not(a))
    raise TypeError(f"edge labels must be Boolean formulas, got {f!r}")


def _push_not(f: Formula) -> Formula:
    match f:
        case Const(v):
            return Const(not v)
        case Lit(key, pos):
            return Lit(key, not pos)
        case Prop(name):
            return Lit(name, False)
        case Not(a):
            return a
        case And(args):
            return disj(*(Not(a) for a in args))
        case Or(args):
            return conj(*(Not(a) for a in args))
    raise TypeError(f"edge labels must be Boolean formulas, got {f!r}")


def normalize_edges(b: LabelledBuchi) -> BuchiAutomaton:
    """Split every DNF clause of every edge label into its own parallel edge."""
    edges: dict[tuple, Edge] = {}
    for e in b.edges:
        for t, fl in _dnf(e.label):
            if t & fl:
                continue
            edge = Edge(e.src, EdgeLabel(t, fl), e.dst)
            edges.setdefault((e.src, e.dst, edge.label.sort_key().__repr__()), edge)
    ordered = sorted(edges.values(), key=lambda e: (e.src, e.dst, e.label.sort_key()))
    return BuchiAutomaton(b.states, b.initial, tuple(ordered), b.accepting, b.names)


# ------------------------------------------------------------ trimming


def trim(b: BuchiAutomaton) -> BuchiAutomaton:
    """Keep states reachable from the initial state that can reach an accepting cycle.

    States are renumbered in breadth-first order (edges in stored order), which
    keeps numbering reproducible.
    """
    succ: dict[int, set[int]] = {z: set() for z in b.states}
    pred: dict[int, set[int]] = {z: set() for z in b.states}
    for e in b.edges:
        succ[e.src].add(e.dst)
        pred[e.dst].add(e.src)
    reach = _closure([b.initial], succ)
    # accepting states lying on a cycle
    live_acc = {f for f in b.accepting if f in reach and f in _closure(succ[f], succ)}
    useful = _closure(live_acc, pred) & reach
    if b.initial not in useful:
        # empty language: a lone initial state without edges
        return BuchiAutomaton((0,), 0, (), frozenset(), b.names[b.initial:b.initial + 1])
    order: list[int] = []
    seen = {b.initial}
    queue = deque([b.initial])
    while queue:
        z = queue.popleft()
        order.append(z)
        for i in b.out_edges(z):
            d = b.edges[i].dst
            if d in useful and d not in seen:
                seen.add(d)
                queue.append(d)
    renum = {z: n for n, z in enumerate(order)}
    edges = tuple(
        Edge(renum[e.src], e.label, renum[e.dst])
        for e in b.edges
        if e.src in renum and e.dst in renum and e.src in useful and e.dst in useful
    )
    edges = tuple(sorted(edges, key=lambda e: (e.src, e.dst, e.label.sort_key())))
    names = tuple(b.names[z] for z in order) if b.names else ()
    return BuchiAutomaton(
        tuple(range(len(order))),
        0,
        edges,
        frozenset(renum[z] for z in b.accepting if z in renum and z in useful),
        names,
    )


def _closure(start: Iterable[int], succ: Mapping[int, Iterable[int]]) -> set[int]:
    seen = set(start)
    stack = list(seen)
    while stack:
        z = stack.pop()
        for n in succ[z]:
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return seen


def translate(f: Formula, state_cap: int = DEFAULT_STATE_CAP, prune: bool = True) -> BuchiAutomaton:
    """Büchi automaton with conjunctive ``(sigma_T, sigma_F)`` edge labels for ``f``."""
    b = normalize_edges(tableau(f, state_cap))
    return trim(b) if prune else b


# ------------------------------------------------------------ lasso membership


def accepts_lasso(b: BuchiAutomaton | LabelledBuchi, prefix: list, cycle: list) -> bool:
    """Whether ``prefix . cycle^omega`` (letters are sets of keys) is accepted."""
    if not cycle:
        raise ValueError("cycle must be nonempty")
    letters = [frozenset(x) for x in list(prefix) + list(cycle)]
    n = len(letters)
    loop = len(prefix)

    def nxt(i: int) -> int:
        return i + 1 if i + 1 < n else loop

    if isinstance(b, LabelledBuchi):
        b = normalize_edges(b)
    out: dict[int, list[Edge]] = {z: [] for z in b.states}
    for e in b.edges:
        out[e.src].append(e)

    def successors(node: tuple[int, int]) -> Iterator[tuple[int, int]]:
        z, i = node
        for e in out[z]:
            if e.label.satisfied_by(letters[i]):
                yield (e.dst, nxt(i))

    start = (b.initial, 0)
    reach = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for m in successors(node):
            if m not in reach:
                reach.add(m)
                stack.append(m)
    for node in sorted(reach):
        if node[0] in b.accepting and node[1] >= loop:
            seen: set = set()
            stack = list(successors(node))
            while stack:
                m = stack.pop()
                if m == node:
                    return True
                if m not in seen:
                    seen.add(m)
                    stack.extend(successors(m))
    return False


# ------------------------------------------------------------ DOT


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', r"\"") + '"'


def to_dot(b: BuchiAutomaton, name: str = "buchi") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __init [shape=point, label=""];']
    for z in b.states:
        shape = "doublecircle" if z in b.accepting else "circle"
        lines.append(f"  {z} [shape={shape}, label={_dot_quote(str(z))}];")
    lines.append(f"  __init -> {b.initial};")
    for e in b.edges:
        t = ", ".join(key_text(k) for k in _sorted_keys(e.label.true))
        f = ", ".join(key_text(k) for k in _sorted_keys(e.label.false))
        label = f"T: {{{t}}}\\nF: {{{f}}}"
        lines.append(f'  {e.src} -> {e.dst} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
