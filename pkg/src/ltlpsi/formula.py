"""Task grammar: AST, parser, canonical printer, binding sets and rewriting.

Surface syntax (ASCII, unicode aliases accepted)::

    task    := impl
    impl    := or ('->' impl)?
    or      := and ('|' and)*
    and     := until ('&' until)*
    until   := unary (('U' | 'R') until)?
    unary   := ('!' | 'X' | 'F' | 'G') unary | postfix
    postfix := primary ('^{' binding '}')?
    primary := IDENT | 'true' | 'false' | '(' task ')'
    binding := band ('|' band)*        band := bprim ('&' bprim)*
    bprim   := INT | '(' binding ')'

``!pickup^{1}`` is the bound negated action ``(!pickup)^{1}``; negating the
bound atom itself needs parentheses: ``!(pickup^{1})``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator


class Formula:
    """Base class of task AST nodes."""

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula


@dataclass(frozen=True)
class Always(Formula):
    arg: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


class Binding:
    """Negation-free Boolean formula over binding ids."""

    def __str__(self) -> str:
        return binding_text(self)


@dataclass(frozen=True)
class BVar(Binding):
    id: int


@dataclass(frozen=True)
class BAnd(Binding):
    args: tuple[Binding, ...]


@dataclass(frozen=True)
class BOr(Binding):
    args: tuple[Binding, ...]


@dataclass(frozen=True)
class Bound(Formula):
    """``body^{binding}``: every agent holding the binding must satisfy body."""

    body: Formula
    binding: Binding


@dataclass(frozen=True)
class OuterNot(Formula):
    """``!(body^{binding})``: at least one relevant agent violates body."""

    arg: Bound


# ---------------------------------------------------------------- builders


def conj(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        else:
            flat.append(a)
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def band(*args: Binding) -> Binding:
    flat: list[Binding] = []
    for a in args:
        flat.extend(a.args if isinstance(a, BAnd) else (a,))
    return flat[0] if len(flat) == 1 else BAnd(tuple(flat))


def bor(*args: Binding) -> Binding:
    flat: list[Binding] = []
    for a in args:
        flat.extend(a.args if isinstance(a, BOr) else (a,))
    return flat[0] if len(flat) == 1 else BOr(tuple(flat))


def bound(body: Formula | str, binding: Binding | int) -> Bound:
    if isinstance(body, str):
        body = Prop(body)
    if isinstance(binding, int):
        binding = BVar(binding)
    return Bound(body, binding)


# ---------------------------------------------------------------- queries


def children(f: Formula) -> tuple[Formula, ...]:
    match f:
        case Prop() | Const():
            return ()
        case Not(a) | Next(a) | Always(a) | Eventually(a) | OuterNot(a):
            return (a,)
        case And(args) | Or(args):
            return args
        case Implies(l, r) | Until(l, r) | Release(l, r):
            return (l, r)
        case Bound(body, _):
            return (body,)
    raise TypeError(f"not a formula node: {f!r}")


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    for c in children(f):
        yield from walk(c)


def binding_ids(psi: Binding) -> frozenset[int]:
    match psi:
        case BVar(i):
            return frozenset((i,))
        case BAnd(args) | BOr(args):
            return frozenset().union(*(binding_ids(a) for a in args))
    raise TypeError(psi)


def action_props(f: Formula) -> frozenset[str]:
    return frozenset(n.name for n in walk(f) if isinstance(n, Prop))


def bindings_of(f: Formula) -> frozenset[int]:
    out: set[int] = set()
    for n in walk(f):
        if isinstance(n, Bound):
            out |= binding_ids(n.binding)
    return frozenset(out)


def has_binding(f: Formula) -> bool:
    return any(isinstance(n, Bound) for n in walk(f))


def is_atomic(f: Formula) -> bool:
    """True when every bound atom is ``pi^rho`` or ``(!pi)^rho``."""
    for n in walk(f):
        if isinstance(n, (Implies,)):
            return False
        if isinstance(n, Not) and not _is_negated_prop(n):
            return False
        if isinstance(n, Bound):
            if not isinstance(n.binding, BVar):
                return False
            if not (isinstance(n.body, Prop) or _is_negated_prop(n.body)):
                return False
    return True


def _is_negated_prop(f: Formula) -> bool:
    return isinstance(f, Not) and isinstance(f.arg, Prop)


# ---------------------------------------------------------------- printing


def binding_text(psi: Binding, _nested: bool = False) -> str:
    match psi:
        case BVar(i):
            return str(i)
        case BAnd(args):
            s = " & ".join(binding_text(a, True) for a in args)
        case BOr(args):
            s = " | ".join(binding_text(a, True) for a in args)
        case _:
            raise TypeError(psi)
    return f"({s})" if _nested else s


def to_text(f: Formula) -> str:
    """Canonical fully-parenthesised form; ``parse_task`` inverts it."""
    match f:
        case Prop(name):
            return name
        case Const(v):
            return "true" if v else "false"
        case Not(Prop(name)):
            return f"!{name}"
        case Not(a):
            return "!" + _group(to_text(a))
        case And(args):
            return "(" + " & ".join(to_text(a) for a in args) + ")"
        case Or(args):
            return "(" + " | ".join(to_text(a) for a in args) + ")"
        case Implies(l, r):
            return f"({to_text(l)} -> {to_text(r)})"
        case Until(l, r):
            return f"({to_text(l)} U {to_text(r)})"
        case Release(l, r):
            return f"({to_text(l)} R {to_text(r)})"
        case Next(a):
            return "X" + _group(to_text(a))
        case Always(a):
            return "G" + _group(to_text(a))
        case Eventually(a):
            return "F" + _group(to_text(a))
        case Bound(Prop(name), psi):
            return f"{name}^{{{binding_text(psi)}}}"
        case Bound(Not(Prop(name)), psi):
            return f"!{name}^{{{binding_text(psi)}}}"
        case Bound(Const(_) as c, psi):
            return f"{to_text(c)}^{{{binding_text(psi)}}}"
        case Bound(body, psi):
            return f"{_group(to_text(body))}^{{{binding_text(psi)}}}"
        case OuterNot(b):
            return f"!({to_text(b)})"
    raise TypeError(f"not a formula node: {f!r}")


def _group(text: str) -> str:
    """Wrap in parentheses unless one group already spans the whole text."""
    if text.startswith("("):
        depth = 0
        for i, ch in enumerate(text):
            depth += ch == "("
            depth -= ch == ")"
            if depth == 0:
                if i == len(text) - 1:
                    return text
                break
    return f"({text})"


def to_sexpr(f: Formula) -> str:
    """S-expression debug dump."""
    match f:
        case Prop(name):
            return name
        case Const(v):
            return "true" if v else "false"
        case Bound(body, psi):
            return f"(bind {to_sexpr(body)} {_binding_sexpr(psi)})"
        case OuterNot(b):
            return f"(outer-not {to_sexpr(b)})"
    tag = {
        Not: "not", And: "and", Or: "or", Implies: "implies", Next: "next",
        Always: "always", Eventually: "eventually", Until: "until", Release: "release",
    }[type(f)]
    return "(" + " ".join([tag, *(to_sexpr(c) for c in children(f))]) + ")"


def _binding_sexpr(psi: Binding) -> str:
    match psi:
        case BVar(i):
            return str(i)
        case BAnd(args):
            return "(and " + " ".join(_binding_sexpr(a) for a in args) + ")"
        case BOr(args):
            return "(or " + " ".join(_binding_sexpr(a) for a in args) + ")"
    raise TypeError(psi)


# ---------------------------------------------------------------- parsing


class TaskSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class UnknownSymbolError(ValueError):
    pass


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->|=>|⇒|→)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[!~¬&∧|∨()^{}◯□◇])
    """,
    re.VERBOSE,
)
_ALIASES = {"~": "!", "¬": "!", "∧": "&", "∨": "|", "◯": "X", "□": "G", "◇": "F"}
_UNARY = {"!", "X", "F", "G"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TaskSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind == "ws":
            for i, ch in enumerate(value):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            if kind == "arrow":
                value = "->"
            elif kind == "sym":
                value = _ALIASES.get(value, value)
            elif kind == "ident" and value in {"U", "R", "X", "F", "G"}:
                kind = "sym"
            elif kind == "ident" and value in {"true", "false"}:
                kind = "const"
            toks.append(_Tok(kind, value, line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, ap_phi, ap_psi):
        self.toks = _tokenize(text)
        self.i = 0
        self.ap_phi = None if ap_phi is None else frozenset(ap_phi)
        self.ap_psi = None if ap_psi is None else frozenset(int(x) for x in ap_psi)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None) -> TaskSyntaxError:
        tok = tok or self.tok
        return TaskSyntaxError(msg, tok.line, tok.col)

    def accept(self, text: str) -> _Tok | None:
        if self.tok.text == text and self.tok.kind in ("sym", "arrow"):
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, text: str) -> _Tok:
        tok = self.accept(text)
        if tok is None:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return tok

    def combine(self, tok: _Tok, *parts: Formula) -> None:
        # Both sides must live at the same level: plain actions or bound atoms.
        levels = {has_binding(p) for p in parts if not isinstance(p, Const)}
        if len(levels) > 1:
            raise self.error(f"operator {tok.text!r} mixes bound and unbound subformulas", tok)

    # task grammar -------------------------------------------------------
    def parse(self) -> Formula:
        f, _ = self.impl()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected token {self.tok.text!r}")
        return f

    def impl(self):
        left, paren = self.disj()
        tok = self.accept("->")
        if tok is None:
            return left, paren
        right, _ = self.impl()
        self.combine(tok, left, right)
        return Implies(left, right), False

    def disj(self):
        first, paren = self.conj()
        parts = [first]
        while (tok := self.accept("|")) is not None:
            nxt, _ = self.conj()
            self.combine(tok, *parts, nxt)
            parts.append(nxt)
        return (disj(*parts), False) if len(parts) > 1 else (first, paren)

    def conj(self):
        first, paren = self.until()
        parts = [first]
        while (tok := self.accept("&")) is not None:
            nxt, _ = self.until()
            self.combine(tok, *parts, nxt)
            parts.append(nxt)
        return (conj(*parts), False) if len(parts) > 1 else (first, paren)

    def until(self):
        left, paren = self.unary()
        for op, node in (("U", Until), ("R", Release)):
            tok = self.accept(op)
            if tok is not None:
                right, _ = self.until()
                self.combine(tok, left, right)
                return node(left, right), False
        return left, paren

    def unary(self):
        tok = self.tok
        if tok.kind == "sym" and tok.text in _UNARY:
            self.i += 1
            arg, paren = self.unary()
            if tok.text == "!":
                if isinstance(arg, Bound):
                    if paren:
                        return OuterNot(arg), False
                    return Bound(Not(arg.body), arg.binding), False
                return Not(arg), False
            return {"X": Next, "F": Eventually, "G": Always}[tok.text](arg), False
        return self.postfix()

    def postfix(self):
        start = self.tok
        body, paren = self.primary()
        if self.accept("^") is None:
            return body, paren
        if has_binding(body):
            raise self.error("nested binding: the bound subformula already carries a binding", start)
        self.expect("{")
        psi = self.binding()
        self.expect("}")
        return Bound(body, psi), False

    def primary(self):
        tok = self.tok
        if tok.kind == "ident":
            self.i += 1
            if self.ap_phi is not None and tok.text not in self.ap_phi:
                raise UnknownSymbolError(
                    f"unknown action proposition {tok.text!r} (line {tok.line}, column {tok.col})"
                )
            return Prop(tok.text), False
        if tok.kind == "const":
            self.i += 1
            return Const(tok.text == "true"), False
        if self.accept("(") is not None:
            f, _ = self.impl()
            self.expect(")")
            return f, True
        found = tok.text or "end of input"
        raise self.error(f"unexpected token {found!r}")

    # binding grammar ----------------------------------------------------
    def binding(self) -> Binding:
        parts = [self.bconj()]
        while self.accept("|") is not None:
            parts.append(self.bconj())
        return bor(*parts)

    def bconj(self) -> Binding:
        parts = [self.bprim()]
        while self.accept("&") is not None:
            parts.append(self.bprim())
        return band(*parts)

    def bprim(self) -> Binding:
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            rho = int(tok.text)
            if rho <= 0:
                raise self.error("binding ids are positive integers", tok)
            if self.ap_psi is not None and rho not in self.ap_psi:
                raise UnknownSymbolError(
                    f"unknown binding id {rho} (line {tok.line}, column {tok.col})"
                )
            return BVar(rho)
        if self.accept("(") is not None:
            psi = self.binding()
            self.expect(")")
            return psi
        if tok.text == "!":
            raise self.error("negation is not allowed inside a binding formula")
        found = tok.text or "end of input"
        raise self.error(f"expected a binding id, found {found!r}")


def parse_task(text: str, ap_phi: Iterable[str] | None = None,
               ap_psi: Iterable[int] | None = None) -> Formula:
    """Parse task text; checks symbols against ``ap_phi``/``ap_psi`` when given."""
    f = _Parser(text, ap_phi, ap_psi).parse()
    if _free_props(f):
        name = sorted(_free_props(f))[0]
        raise TaskSyntaxError(f"action proposition {name!r} is not under a binding", 1, 1)
    return f


def _free_props(f: Formula) -> set[str]:
    if isinstance(f, Bound):
        return set()
    if isinstance(f, Prop):
        return {f.name}
    return set().union(*(_free_props(c) for c in children(f)))


def parse_ltl(text: str) -> Formula:
    """Parse a plain (binding-free) LTL formula with the same surface syntax."""
    f = _Parser(text, None, None).parse()
    if has_binding(f):
        raise TaskSyntaxError("bindings are not allowed in a plain LTL formula", 1, 1)
    return f


# ---------------------------------------------------------------- bindings


def eval_binding(psi: Binding, k: frozenset[int] | set[int]) -> bool:
    match psi:
        case BVar(i):
            return i in k
        case BAnd(args):
            return all(eval_binding(a, k) for a in args)
        case BOr(args):
            return any(eval_binding(a, k) for a in args)
    raise TypeError(psi)


def zeta(psi: Binding, ap_psi: Iterable[int]) -> frozenset[frozenset[int]]:
    """Every subset of ``ap_psi`` whose characteristic assignment satisfies psi."""
    universe = sorted(set(ap_psi))
    missing = binding_ids(psi) - set(universe)
    if missing:
        raise ValueError(f"binding ids {sorted(missing)} not in AP_psi")
    return frozenset(
        frozenset(k)
        for n in range(len(universe) + 1)
        for k in itertools.combinations(universe, n)
        if eval_binding(psi, frozenset(k))
    )


# ---------------------------------------------------------------- rewriting


def nnf(f: Formula) -> Formula:
    """Negation normal form of a binding-free LTL formula."""
    match f:
        case Prop() | Const():
            return f
        case Not(a):
            return _neg_nnf(a)
        case And(args):
            return conj(*(nnf(a) for a in args))
        case Or(args):
            return disj(*(nnf(a) for a in args))
        case Implies(l, r):
            return disj(_neg_nnf(l), nnf(r))
        case Next(a):
            return Next(nnf(a))
        case Always(a):
            return Always(nnf(a))
        case Eventually(a):
            return Eventually(nnf(a))
        case Until(l, r):
            return Until(nnf(l), nnf(r))
        case Release(l, r):
            return Release(nnf(l), nnf(r))
    raise TypeError(f"unexpected node in LTL formula: {f!r}")


def _neg_nnf(f: Formula) -> Formula:
    match f:
        case Prop():
            return Not(f)
        case Const(v):
            return Const(not v)
        case Not(a):
            return nnf(a)
        case And(args):
            return disj(*(_neg_nnf(a) for a in args))
        case Or(args):
            return conj(*(_neg_nnf(a) for a in args))
        case Implies(l, r):
            return conj(nnf(l), _neg_nnf(r))
        case Next(a):
            return Next(_neg_nnf(a))
        case Always(a):
            return Eventually(_neg_nnf(a))
        case Eventually(a):
            return Always(_neg_nnf(a))
        case Until(l, r):
            return Release(_neg_nnf(l), _neg_nnf(r))
        case Release(l, r):
            return Until(_neg_nnf(l), _neg_nnf(r))
    raise TypeError(f"unexpected node in LTL formula: {f!r}")


def push_negations(f: Formula) -> Formula:
    """Remove task-level ``!`` and ``->`` by pushing negation onto bound atoms.

    A negated bound atom becomes ``OuterNot``; ``!!(b)`` collapses to ``b``.
    Bound bodies are left untouched.
    """
    match f:
        case Bound() | OuterNot() | Const():
            return f
        case Not(a):
            return _negate_task(a)
        case Implies(l, r):
            return disj(_negate_task(l), push_negations(r))
        case And(args):
            return conj(*(push_negations(a) for a in args))
        case Or(args):
            return disj(*(push_negations(a) for a in args))
        case Next(a):
            return Next(push_negations(a))
        case Always(a):
            return Always(push_negations(a))
        case Eventually(a):
            return Eventually(push_negations(a))
        case Until(l, r):
            return Until(push_negations(l), push_negations(r))
        case Release(l, r):
            return Release(push_negations(l), push_negations(r))
    raise TypeError(f"unbound node at task level: {f!r}")


def _negate_task(f: Formula) -> Formula:
    match f:
        case Bound():
            return OuterNot(f)
        case OuterNot(b):
            return b
        case Const(v):
            return Const(not v)
        case Not(a):
            return push_negations(a)
        case Implies(l, r):
            return conj(push_negations(l), _negate_task(r))
        case And(args):
            return disj(*(_negate_task(a) for a in args))
        case Or(args):
            return conj(*(_negate_task(a) for a in args))
        case Next(a):
            return Next(_negate_task(a))
        case Always(a):
            return Eventually(_negate_task(a))
        case Eventually(a):
            return Always(_negate_task(a))
        case Until(l, r):
            return Release(_negate_task(l), _negate_task(r))
        case Release(l, r):
            return Until(_negate_task(l), _negate_task(r))
    raise TypeError(f"unbound node at task level: {f!r}")


def _distribute(phi: Formula, rho: int) -> Formula:
    match phi:
        case Prop() | Not(Prop()):
            return Bound(phi, BVar(rho))
        case Const():
            return phi
        case And(args):
            return conj(*(_distribute(a, rho) for a in args))
        case Or(args):
            return disj(*(_distribute(a, rho) for a in args))
        case Next(a):
            return Next(_distribute(a, rho))
        case Always(a):
            return Always(_distribute(a, rho))
        case Eventually(a):
            return Eventually(_distribute(a, rho))
        case Until(l, r):
            return Until(_distribute(l, rho), _distribute(r, rho))
        case Release(l, r):
            return Release(_distribute(l, rho), _distribute(r, rho))
    raise TypeError(f"expected NNF body, got {phi!r}")


def expand_binding(phi: Formula, psi: Binding) -> Formula:
    """Rewrite ``phi^psi`` so each bound atom carries one action and one binding."""
    match psi:
        case BOr(args):
            return disj(*(expand_binding(phi, a) for a in args))
        case BAnd(args):
            return conj(*(expand_binding(phi, a) for a in args))
        case BVar(rho):
            return _distribute(nnf(phi), rho)
    raise TypeError(psi)


def _negate_atomic(f: Formula) -> Formula:
    match f:
        case Bound():
            return OuterNot(f)
        case OuterNot(b):
            return b
        case Const(v):
            return Const(not v)
        case And(args):
            return disj(*(_negate_atomic(a) for a in args))
        case Or(args):
            return conj(*(_negate_atomic(a) for a in args))
        case Next(a):
            return Next(_negate_atomic(a))
        case Always(a):
            return Eventually(_negate_atomic(a))
        case Eventually(a):
            return Always(_negate_atomic(a))
        case Until(l, r):
            return Release(_negate_atomic(l), _negate_atomic(r))
        case Release(l, r):
            return Until(_negate_atomic(l), _negate_atomic(r))
    raise TypeError(f"unexpected node in rewritten formula: {f!r}")


def _expand(f: Formula) -> Formula:
    match f:
        case Const():
            return f
        case Bound(body, psi):
            return expand_binding(body, psi)
        case OuterNot(Bound(body, psi)):
            return _negate_atomic(expand_binding(body, psi))
        case And(args):
            return conj(*(_expand(a) for a in args))
        case Or(args):
            return disj(*(_expand(a) for a in args))
        case Next(a):
            return Next(_expand(a))
        case Always(a):
            return Always(_expand(a))
        case Eventually(a):
            return Eventually(_expand(a))
        case Until(l, r):
            return Until(_expand(l), _expand(r))
        case Release(l, r):
            return Release(_expand(l), _expand(r))
    raise TypeError(f"unexpected task node: {f!r}")


def rewrite_atomic(f: Formula) -> Formula:
    """Distribute bindings until every bound atom is ``pi^rho`` or ``(!pi)^rho``.

    Negation follows bindings: ``!(pickup^{1 & 2})`` becomes
    ``!(pickup^{1}) | !(pickup^{2})`` while ``!pickup^{1 & 2}`` becomes
    ``!pickup^{1} & !pickup^{2}``.
    """
    return _expand(push_negations(f))
