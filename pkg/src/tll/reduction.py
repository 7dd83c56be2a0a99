"""Logical reductions: weak-head and full normalization, single-step
contraction at a position, and definitional equality by normal forms."""

from __future__ import annotations

import os
from typing import Iterator

from .env import Signature
from .errors import FuelExhausted
from .syntax import (
    APair,
    App,
    CtorRef,
    DefRef,
    IdElim,
    Lam0,
    Lam1,
    Match,
    Pair0,
    Pair1,
    ProjL,
    ProjR,
    Refl,
    Sig0Elim,
    Sig1Elim,
    Term,
    apply,
    children,
    instantiate,
    map_children,
    spine,
    subst,
)

DEFAULT_FUEL = 100_000


def default_fuel() -> int:
    value = os.environ.get("TLL_FUEL")
    return int(value) if value else DEFAULT_FUEL


class Fuel:
    """A shared step budget; ``tick`` raises once it runs dry."""

    __slots__ = ("left",)

    def __init__(self, steps: int | None = None):
        self.left = default_fuel() if steps is None else steps

    def tick(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise FuelExhausted()


def _fuel(f: Fuel | int | None) -> Fuel:
    if isinstance(f, Fuel):
        return f
    return Fuel(f)


def _branch_for(sig: Signature, m: Match, c: CtorRef) -> Term:
    info = sig.ctors[c.name]
    fields = c.args[info.nparams :]
    for br in m.branches:
        if br.ctor == c.name:
            return instantiate(br.body, fields)
    raise KeyError(c.name)


def _unfold_def(sig: Signature, head: DefRef, args: list[Term], fuel: Fuel):
    """Delta step for a definition at the head of ``args``; None if blocked."""
    info = sig.defs.get(head.name)
    if info is None or info.body is None:
        return None
    if info.rec_arg is None:
        return apply(info.body, *args)
    k = info.rec_arg
    if len(args) <= k:
        return None
    scrut = whnf(sig, args[k], fuel)
    if type(scrut) is not CtorRef:
        return None
    args = list(args)
    args[k] = scrut
    return apply(info.body, *args)


def whnf(sig: Signature, m: Term, fuel: Fuel | int | None = None) -> Term:
    """Reduce ``m`` until no logical redex sits at its head."""
    fuel = _fuel(fuel)
    while True:
        head, args = spine(m)
        tp = type(head)
        nxt = None
        if tp is Lam0 or tp is Lam1:
            if args:
                nxt = apply(subst(head.body, args[0]), *args[1:])
        elif tp is DefRef:
            nxt = _unfold_def(sig, head, args, fuel)
        elif tp is IdElim:
            p = whnf(sig, head.p, fuel)
            if type(p) is Refl:
                nxt = apply(head.h, *args)
        elif tp is Sig0Elim or tp is Sig1Elim:
            s = whnf(sig, head.scrut, fuel)
            if type(s) is (Pair0 if tp is Sig0Elim else Pair1):
                nxt = apply(instantiate(head.branch, (s.fst, s.snd)), *args)
        elif tp is ProjL or tp is ProjR:
            s = whnf(sig, head.m, fuel)
            if type(s) is APair:
                nxt = apply(s.lhs if tp is ProjL else s.rhs, *args)
        elif tp is Match:
            s = whnf(sig, head.scrut, fuel)
            if type(s) is CtorRef and s.name in sig.ctors:
                nxt = apply(_branch_for(sig, head, s), *args)
        if nxt is None:
            return m
        fuel.tick()
        m = nxt


def normalize(sig: Signature, m: Term, fuel: Fuel | int | None = None) -> Term:
    """Full normal form, leftmost-outermost."""
    fuel = _fuel(fuel)

    def go(t: Term) -> Term:
        t = whnf(sig, t, fuel)
        return map_children(t, lambda c, _k: go(c))

    return go(m)


def conv(sig: Signature, a: Term, b: Term, fuel: Fuel | int | None = None) -> bool:
    """Definitional equality: compare normal forms."""
    if a == b:
        return True
    fuel = _fuel(fuel)
    return normalize(sig, a, fuel) == normalize(sig, b, fuel)


# -- single steps at explicit positions ---------------------------------------

Path = tuple[int, ...]


def contract(sig: Signature, t: Term) -> Term | None:
    """Contract ``t`` itself if it is a redex (no reduction inside)."""
    tp = type(t)
    if tp is App:
        f = t.fun
        if type(f) in (Lam0, Lam1):
            return subst(f.body, t.arg)
        head, args = spine(t)
        if type(head) is DefRef:
            info = sig.defs.get(head.name)
            if (
                info is not None
                and info.body is not None
                and info.rec_arg is not None
                and len(args) == info.rec_arg + 1
                and type(args[-1]) is CtorRef
            ):
                return apply(info.body, *args)
        return None
    if tp is DefRef:
        info = sig.defs.get(t.name)
        if info is not None and info.body is not None and info.rec_arg is None:
            return info.body
        return None
    if tp is IdElim:
        return t.h if type(t.p) is Refl else None
    if tp is Sig0Elim:
        s = t.scrut
        return instantiate(t.branch, (s.fst, s.snd)) if type(s) is Pair0 else None
    if tp is Sig1Elim:
        s = t.scrut
        return instantiate(t.branch, (s.fst, s.snd)) if type(s) is Pair1 else None
    if tp is ProjL:
        return t.m.lhs if type(t.m) is APair else None
    if tp is ProjR:
        return t.m.rhs if type(t.m) is APair else None
    if tp is Match:
        s = t.scrut
        if type(s) is CtorRef and s.name in sig.ctors:
            return _branch_for(sig, t, s)
        return None
    return None


def _child_list(t: Term) -> list[Term]:
    return [c for _, c, _ in children(t)]


def redexes(sig: Signature, t: Term, path: Path = ()) -> Iterator[Path]:
    """Every redex position in pre-order (outermost, left to right first)."""
    if contract(sig, t) is not None:
        yield path
    for i, c in enumerate(_child_list(t)):
        yield from redexes(sig, c, path + (i,))


def at(t: Term, path: Path) -> Term:
    for i in path:
        t = _child_list(t)[i]
    return t


def replace_at(t: Term, path: Path, new: Term) -> Term:
    if not path:
        return new
    i, rest = path[0], path[1:]
    counter = iter(range(10**9))

    def f(c: Term, _k: int) -> Term:
        return replace_at(c, rest, new) if next(counter) == i else c

    return map_children(t, f)


def step_at(sig: Signature, t: Term, path: Path) -> Term:
    r = contract(sig, at(t, path))
    assert r is not None, "no redex at path"
    return replace_at(t, path, r)


def _innermost(sig: Signature, t: Term, path: Path = ()) -> list[Path]:
    inner: list[Path] = []
    for i, c in enumerate(_child_list(t)):
        inner.extend(_innermost(sig, c, path + (i,)))
    if not inner and contract(sig, t) is not None:
        return [path]
    return inner


def lstep(sig: Signature, t: Term, strategy: str = "lo") -> Term | None:
    """One logical step: ``lo`` leftmost-outermost, ``ri`` rightmost-innermost."""
    if strategy == "lo":
        path = next(redexes(sig, t), None)
    elif strategy == "ri":
        paths = _innermost(sig, t)
        path = paths[-1] if paths else None
    else:
        raise ValueError(strategy)
    if path is None:
        return None
    return step_at(sig, t, path)


def normalize_by(
    sig: Signature, t: Term, strategy: str, fuel: Fuel | int | None = None
) -> Term:
    """Normal form by iterating ``lstep`` with a fixed strategy."""
    fuel = _fuel(fuel)
    while True:
        nxt = lstep(sig, t, strategy)
        if nxt is None:
            return t
        fuel.tick()
        t = nxt
