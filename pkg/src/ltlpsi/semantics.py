"""Brute-force satisfaction of bound task formulas on lasso team traces.

Every agent's trace is a prefix followed by a cycle; all agents share the
same positions, so a trace is a table ``labels[agent][position]`` plus the
index where the cycle starts. Temporal operators are evaluated as fixpoints
over the finite set of positions, where the successor of the last position
is the cycle start.

A bound formula ``phi^psi`` holds at ``i`` when some ``K`` in ``zeta(psi)``
is covered by the assignment and every agent holding part of ``K`` satisfies
``phi`` from ``i`` on its own trace. ``!(phi^psi)`` asks for some such agent
to violate ``phi`` instead. General negation and implication at team level
are first pushed onto bound atoms.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .agent import AgentModel
from .formula import (
    Always,
    And,
    Binding,
    Bound,
    Const,
    Eventually,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    OuterNot,
    Prop,
    Release,
    Until,
    bindings_of,
    push_negations,
    zeta,
)

Vec = tuple[bool, ...]


@dataclass(frozen=True)
class LassoTrace:
    """Aligned per-agent label sequences; positions ``loop..n-1`` repeat forever."""

    agents: tuple[str, ...]
    labels: tuple[tuple[frozenset[str], ...], ...]
    loop: int

    def __post_init__(self):
        if len(self.agents) != len(self.labels):
            raise ValueError("one label sequence per agent required")
        lengths = {len(seq) for seq in self.labels}
        if len(lengths) > 1:
            raise ValueError("agent traces must have equal length")
        n = lengths.pop() if lengths else 0
        if n == 0:
            raise ValueError("trace must be nonempty")
        if not 0 <= self.loop < n:
            raise ValueError(f"cycle start {self.loop} outside 0..{n - 1}")

    @classmethod
    def of(cls, traces: Mapping[str, Sequence[Iterable[str]]], loop: int) -> "LassoTrace":
        agents = tuple(traces)
        return cls(agents, tuple(tuple(frozenset(x) for x in traces[a]) for a in agents), loop)

    def __len__(self) -> int:
        return len(self.labels[0])

    def succ(self, i: int) -> int:
        return i + 1 if i + 1 < len(self) else self.loop

    def letter(self, agent: str, i: int) -> frozenset[str]:
        return self.labels[self.agents.index(agent)][i]

    def unroll(self, steps: int) -> list[tuple[frozenset[str], ...]]:
        """Team letters of the first ``steps`` positions of the infinite trace."""
        out, i = [], 0
        for _ in range(steps):
            out.append(tuple(seq[i] for seq in self.labels))
            i = self.succ(i)
        return out


# ------------------------------------------------------------ fixpoint engine


def _evaluate(f: Formula, n: int, succ: Callable[[int], int],
              leaf: Callable[[Formula], Vec | None], memo: dict) -> Vec:
    if f in memo:
        return memo[f]
    v = leaf(f)
    if v is None:
        def ev(g: Formula) -> Vec:
            return _evaluate(g, n, succ, leaf, memo)

        match f:
            case Const(b):
                v = (b,) * n
            case Not(a):
                v = tuple(not x for x in ev(a))
            case And(args):
                vs = [ev(a) for a in args]
                v = tuple(all(x[i] for x in vs) for i in range(n))
            case Or(args):
                vs = [ev(a) for a in args]
                v = tuple(any(x[i] for x in vs) for i in range(n))
            case Implies(l, r):
                a, b = ev(l), ev(r)
                v = tuple((not a[i]) or b[i] for i in range(n))
            case Next(a):
                a = ev(a)
                v = tuple(a[succ(i)] for i in range(n))
            case Eventually(a):
                v = _lfp(ev(Const(True)), ev(a), n, succ)
            case Until(l, r):
                v = _lfp(ev(l), ev(r), n, succ)
            case Always(a):
                v = _gfp(ev(Const(False)), ev(a), n, succ)
            case Release(l, r):
                v = _gfp(ev(l), ev(r), n, succ)
            case _:
                raise TypeError(f"cannot evaluate {f!r}")
    memo[f] = v
    return v


def _lfp(left: Vec, right: Vec, n: int, succ) -> Vec:
    """Least solution of ``x[i] = right[i] or (left[i] and x[succ(i)])``."""
    x = list(right)
    changed = True
    while changed:
        changed = False
        for i in reversed(range(n)):
            if not x[i] and left[i] and x[succ(i)]:
                x[i] = changed = True
    return tuple(x)


def _gfp(left: Vec, right: Vec, n: int, succ) -> Vec:
    """Greatest solution of ``x[i] = right[i] and (left[i] or x[succ(i)])``."""
    x = list(right)
    changed = True
    while changed:
        changed = False
        for i in reversed(range(n)):
            if x[i] and not left[i] and not x[succ(i)]:
                x[i] = False
                changed = True
    return tuple(x)


def ltl_vector(f: Formula, letters: Sequence[Iterable], loop: int) -> Vec:
    """Truth of a plain LTL formula at every position of a single lasso word."""
    letters = [frozenset(x) for x in letters]
    n = len(letters)

    def succ(i: int) -> int:
        return i + 1 if i + 1 < n else loop

    def leaf(g: Formula) -> Vec | None:
        if isinstance(g, Prop):
            return tuple(g.name in letters[i] for i in range(n))
        return None

    return _evaluate(f, n, succ, leaf, {})


def ltl_holds(f: Formula, prefix: Sequence[Iterable], cycle: Sequence[Iterable]) -> bool:
    if not cycle:
        raise ValueError("cycle must be nonempty")
    return ltl_vector(f, list(prefix) + list(cycle), len(prefix))[0]


# ------------------------------------------------------------ team semantics


class BindingError(ValueError):
    pass


def _needs_push(f: Formula) -> bool:
    def visit(g: Formula) -> bool:
        match g:
            case Bound() | OuterNot():
                return False
            case Not() | Implies():
                return True
            case And(args) | Or(args):
                return any(visit(a) for a in args)
            case Next(a) | Always(a) | Eventually(a):
                return visit(a)
            case Until(l, r) | Release(l, r):
                return visit(l) or visit(r)
        return False

    return visit(f)


def team_vector(trace: LassoTrace, R: Mapping[str, Iterable[int]], f: Formula,
                ap_psi: Iterable[int] | None = None) -> Vec:
    """Truth of a task formula at every position of a team trace."""
    assign = {a: frozenset(R.get(a, ())) for a in trace.agents}
    if unknown := set(R) - set(trace.agents):
        raise BindingError(f"assignment names agents without a trace: {sorted(unknown)}")
    ap = frozenset(ap_psi) if ap_psi is not None else frozenset().union(bindings_of(f), *assign.values())
    if missing := bindings_of(f) - ap:
        raise BindingError(f"bindings {sorted(missing)} not declared")
    if _needs_push(f):
        f = push_negations(f)
    covered = frozenset().union(*assign.values()) if assign else frozenset()
    n = len(trace)
    agent_memo = {a: {} for a in trace.agents}
    zeta_cache: dict[Binding, list[frozenset[int]]] = {}

    def families(psi: Binding) -> list[frozenset[int]]:
        if psi not in zeta_cache:
            zeta_cache[psi] = sorted((k for k in zeta(psi, ap) if k <= covered), key=sorted)
        return zeta_cache[psi]

    def body_vec(agent: str, phi: Formula) -> Vec:
        seq = trace.labels[trace.agents.index(agent)]

        def leaf(g: Formula) -> Vec | None:
            if isinstance(g, Prop):
                return tuple(g.name in seq[i] for i in range(n))
            if isinstance(g, (Bound, OuterNot)):
                raise TypeError("nested bindings are not supported")
            return None

        return _evaluate(phi, n, trace.succ, leaf, agent_memo[agent])

    def bound_vec(phi: Formula, psi: Binding, outer: bool) -> Vec:
        out = []
        ks = families(psi)
        for i in range(n):
            ok = False
            for k in ks:
                holders = [a for a in trace.agents if k & assign[a]]
                vals = [body_vec(a, phi)[i] for a in holders]
                if (not all(vals)) if outer else all(vals):
                    ok = True
                    break
            out.append(ok)
        return tuple(out)

    def leaf(g: Formula) -> Vec | None:
        match g:
            case Bound(phi, psi):
                return bound_vec(phi, psi, False)
            case OuterNot(Bound(phi, psi)):
                return bound_vec(phi, psi, True)
            case Prop(name):
                raise TypeError(f"proposition {name!r} is not bound to any agent")
        return None

    return _evaluate(f, n, trace.succ, leaf, {})


def satisfies(trace: LassoTrace, R: Mapping[str, Iterable[int]], f: Formula,
              ap_psi: Iterable[int] | None = None, position: int = 0) -> bool:
    """Whether the team trace with constant assignment ``R`` satisfies ``f``."""
    return team_vector(trace, R, f, ap_psi)[position]


# ------------------------------------------------------------ exhaustive lassos


class EnumerationLimitError(RuntimeError):
    pass


def enumerate_lassos(agents: Sequence[AgentModel], max_len: int,
                     cap: int = 10_000) -> Iterable[tuple[LassoTrace, tuple]]:
    """All team lassos of length ``<= max_len`` the agents can execute.

    Positions are the states after each move from the initial states, so the
    initial labels are never read. Yields the trace with its joint state path.
    """
    size = 1
    for a in agents:
        size *= len(a.state_names)
    if size > cap:
        raise EnumerationLimitError(f"{size} joint states exceeds cap {cap}")
    names = tuple(a.name for a in agents)
    succ_cache: dict[tuple, list[tuple]] = {}

    def joint_succ(js: tuple) -> list[tuple]:
        if js not in succ_cache:
            succ_cache[js] = list(
                itertools.product(*(sorted(d for d, _ in a.edges[s]) for a, s in zip(agents, js)))
            )
        return succ_cache[js]

    def moves(src: tuple, dst: tuple) -> bool:
        return all(a.has_transition(s, d) for a, s, d in zip(agents, src, dst))

    start = tuple(a.initial for a in agents)

    def extend(path: list[tuple]):
        for loop in range(len(path)):
            if moves(path[-1], path[loop]):
                labels = tuple(
                    tuple(agents[j].labels[js[j]] for js in path) for j in range(len(agents))
                )
                yield LassoTrace(names, labels, loop), tuple(path)
        if len(path) < max_len:
            for nxt in joint_succ(path[-1]):
                path.append(nxt)
                yield from extend(path)
                path.pop()

    for first in joint_succ(start):
        yield from extend([first])


def enumerate_satisfying_lassos(f: Formula, agents: Sequence[AgentModel],
                                R: Mapping[str, Iterable[int]], max_len: int,
                                cap: int = 10_000) -> list[LassoTrace]:
    return [t for t, _ in enumerate_lassos(agents, max_len, cap) if satisfies(t, R, f)]
