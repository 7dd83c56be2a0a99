"""Term language: sorts, the de Bruijn AST, shifting and substitution.

Binding is positional: ``Var(0)`` refers to the innermost enclosing binder.
Binder names and source spans ride along for printing and diagnostics but
never take part in equality, so alpha-equivalent terms compare equal.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator

from .errors import Span


class Sort(str, Enum):
    U = "U"
    L = "L"

    def __str__(self) -> str:
        return self.value


U = Sort.U
L = Sort.L


def _aux():
    return field(default=None, compare=False, repr=False)


class Term:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Var(Term):
    idx: int
    name: str | None = _aux()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class SortTerm(Term):
    s: Sort
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Pi0(Term):
    t: Sort
    dom: Term
    cod: Term
    name: str | None = _aux()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Pi1(Term):
    t: Sort
    dom: Term
    cod: Term
    name: str | None = _aux()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Lam0(Term):
    t: Sort
    ann: Term
    body: Term
    name: str | None = _aux()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Lam1(Term):
    t: Sort
    ann: Term
    body: Term
    name: str | None = _aux()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class App(Term):
    fun: Term
    arg: Term
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Box(Term):
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Loc(Term):
    l: int
    span: Span | None = _aux()


# propositional equality


@dataclass(frozen=True, slots=True)
class Id(Term):
    ty: Term
    lhs: Term
    rhs: Term
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Refl(Term):
    m: Term
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class IdElim(Term):
    motive: Term  # binds (x, p)
    h: Term
    p: Term
    names: tuple[str, str] | None = _aux()
    span: Span | None = _aux()


# subset pairs (relevant payload, irrelevant proof)


@dataclass(frozen=True, slots=True)
class Sig0(Term):
    t: Sort
    dom: Term
    cod: Term
    name: str | None = _aux()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Pair0(Term):
    t: Sort
    fst: Term
    snd: Term
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Sig0Elim(Term):
    motive: Term | None  # binds z; None until elaborated
    scrut: Term
    branch: Term  # binds (x, y)
    names: tuple[str, str, str] | None = _aux()
    span: Span | None = _aux()


# fully relevant dependent pairs


@dataclass(frozen=True, slots=True)
class Sig1(Term):
    t: Sort
    dom: Term
    cod: Term
    name: str | None = _aux()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Pair1(Term):
    t: Sort
    fst: Term
    snd: Term
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Sig1Elim(Term):
    motive: Term | None
    scrut: Term
    branch: Term
    names: tuple[str, str, str] | None = _aux()
    span: Span | None = _aux()


# additive pairs


@dataclass(frozen=True, slots=True)
class With(Term):
    t: Sort
    lhs: Term
    rhs: Term
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class APair(Term):
    t: Sort
    lhs: Term
    rhs: Term
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class ProjL(Term):
    m: Term
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class ProjR(Term):
    m: Term
    span: Span | None = _aux()


# inductive types and top-level definitions


@dataclass(frozen=True, slots=True)
class IndRef(Term):
    name: str
    args: tuple[Term, ...] = ()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class CtorRef(Term):
    """Constructor application: parameters first, then fields.

    ``implicit`` marks surface applications that list the fields only; the
    checker fills the parameters in.
    """

    name: str
    args: tuple[Term, ...] = ()
    implicit: bool = field(default=False, compare=False, repr=False)
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Branch(Term):
    ctor: str
    arity: int
    body: Term  # binds `arity` fields, last field is Var(0)
    names: tuple[str, ...] | None = _aux()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Match(Term):
    motive: Term | None  # binds the scrutinee
    scrut: Term
    branches: tuple[Branch, ...]
    name: str | None = _aux()
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class DefRef(Term):
    name: str
    span: Span | None = _aux()


# elaboration-only nodes; never survive checking


@dataclass(frozen=True, slots=True)
class Hole(Term):
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class Meta(Term):
    """A unification variable; ``offset`` counts binders between the
    meta's creation point and this occurrence."""

    id: int
    offset: int = 0
    span: Span | None = _aux()


@dataclass(frozen=True, slots=True)
class SchemeRef(Term):
    """Reference to a sort-polymorphic declaration; ``None`` sorts are
    chosen by the checker from the use site."""

    name: str
    sorts: tuple[Sort | None, ...]
    span: Span | None = _aux()


# (field name, number of binders it sits under); "seq" marks tuples of terms.
_SHAPE: dict[type, tuple[tuple[str, object], ...]] = {
    Var: (),
    SortTerm: (),
    Box: (),
    Loc: (),
    Hole: (),
    Meta: (),
    SchemeRef: (),
    DefRef: (),
    Pi0: (("dom", 0), ("cod", 1)),
    Pi1: (("dom", 0), ("cod", 1)),
    Lam0: (("ann", 0), ("body", 1)),
    Lam1: (("ann", 0), ("body", 1)),
    App: (("fun", 0), ("arg", 0)),
    Id: (("ty", 0), ("lhs", 0), ("rhs", 0)),
    Refl: (("m", 0),),
    IdElim: (("motive", 2), ("h", 0), ("p", 0)),
    Sig0: (("dom", 0), ("cod", 1)),
    Pair0: (("fst", 0), ("snd", 0)),
    Sig0Elim: (("motive", 1), ("scrut", 0), ("branch", 2)),
    Sig1: (("dom", 0), ("cod", 1)),
    Pair1: (("fst", 0), ("snd", 0)),
    Sig1Elim: (("motive", 1), ("scrut", 0), ("branch", 2)),
    With: (("lhs", 0), ("rhs", 0)),
    APair: (("lhs", 0), ("rhs", 0)),
    ProjL: (("m", 0),),
    ProjR: (("m", 0),),
    IndRef: (("args", "seq"),),
    CtorRef: (("args", "seq"),),
    Branch: (("body", "arity"),),
    Match: (("motive", 1), ("scrut", 0), ("branches", "seq")),
}

LEAVES = (Var, SortTerm, Box, Loc, Hole, Meta, SchemeRef, DefRef)


def children(t: Term) -> Iterator[tuple[str, Term, int]]:
    """Yield ``(field, child, binders)`` for every direct subterm."""
    for name, k in _SHAPE[type(t)]:
        value = getattr(t, name)
        if value is None:
            continue
        if k == "seq":
            for c in value:
                yield name, c, 0
        elif k == "arity":
            yield name, value, t.arity
        else:
            yield name, value, k


def map_children(t: Term, f: Callable[[Term, int], Term]) -> Term:
    """Rebuild ``t`` with ``f(child, binders)`` applied to each subterm."""
    shape = _SHAPE[type(t)]
    if not shape:
        return t
    updates = {}
    changed = False
    for name, k in shape:
        value = getattr(t, name)
        if value is None:
            continue
        if k == "seq":
            new = tuple(f(c, 0) for c in value)
            changed = changed or any(a is not b for a, b in zip(new, value))
        elif k == "arity":
            new = f(value, t.arity)
            changed = changed or new is not value
        else:
            new = f(value, k)
            changed = changed or new is not value
        updates[name] = new
    if not changed:
        return t
    return dataclasses.replace(t, **updates)


def _walk(t: Term, c: int, on_var, on_meta) -> Term:
    # hot path: the common binders are spelled out
    tp = type(t)
    if tp is Var:
        return on_var(t, c)
    if tp is App:
        f = _walk(t.fun, c, on_var, on_meta)
        a = _walk(t.arg, c, on_var, on_meta)
        if f is t.fun and a is t.arg:
            return t
        return App(f, a, span=t.span)
    if tp is Meta:
        return on_meta(t, c)
    if tp in (SortTerm, Box, Loc, Hole, SchemeRef, DefRef):
        return t
    return map_children(t, lambda ch, k: _walk(ch, c + k, on_var, on_meta))


def shift(t: Term, d: int, cutoff: int = 0) -> Term:
    """Add ``d`` to every free variable index ``>= cutoff``."""
    if d == 0:
        return t

    def on_var(v: Var, c: int) -> Term:
        if v.idx >= c:
            return Var(v.idx + d, v.name, v.span)
        return v

    def on_meta(m: Meta, c: int) -> Term:
        assert c <= m.offset, "meta shifted below its creation depth"
        return Meta(m.id, m.offset + d, m.span)

    return _walk(t, cutoff, on_var, on_meta)


def instantiate(body: Term, args: list[Term] | tuple[Term, ...]) -> Term:
    """Substitute ``args`` for the ``len(args)`` binders ``body`` sits under.

    ``args[0]`` replaces the outermost binder, ``args[-1]`` ``Var(0)``.
    """
    k = len(args)
    if k == 0:
        return body

    def on_var(v: Var, c: int) -> Term:
        i = v.idx
        if i < c:
            return v
        j = i - c
        if j < k:
            return shift(args[k - 1 - j], c)
        return Var(i - k, v.name, v.span)

    def on_meta(m: Meta, c: int) -> Term:
        assert m.offset >= c + k, "substitution into a meta's own scope"
        return Meta(m.id, m.offset - k, m.span)

    return _walk(body, 0, on_var, on_meta)


def subst(m: Term, n: Term) -> Term:
    """``m[n/x]`` where ``m`` sits under the single binder ``x``."""
    return instantiate(m, (n,))


def free_vars(t: Term, depth: int = 0) -> set[int]:
    """Indices (relative to ``t``'s context) of variables free in ``t``."""
    out: set[int] = set()

    def go(u: Term, c: int) -> None:
        tp = type(u)
        if tp is Var:
            if u.idx >= c:
                out.add(u.idx - c)
            return
        for _, ch, k in children(u):
            go(ch, c + k)

    go(t, depth)
    return out


def is_closed(t: Term) -> bool:
    return not free_vars(t)


def has_var(t: Term, i: int) -> bool:
    return i in free_vars(t)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    for _, ch, _ in children(t):
        yield from subterms(ch)


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def contains(t: Term, kinds: tuple[type, ...]) -> bool:
    return any(isinstance(u, kinds) for u in subterms(t))


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Split an application into its head and argument list."""
    args = []
    while type(t) is App:
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def apply(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


def lam_or_pi_rel(t: Term) -> int | None:
    """0 or 1 for the relevance of a binder node, else None."""
    if isinstance(t, (Pi0, Lam0)):
        return 0
    if isinstance(t, (Pi1, Lam1)):
        return 1
    return None
