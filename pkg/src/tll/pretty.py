"""Printing terms back to the concrete syntax.

Bound names are synthesized when missing or clashing, so that
``parse(pretty(m)) == m`` for every term free of locations and boxes.
"""

from __future__ import annotations

from .parser import KEYWORDS
from .syntax import (
    APair,
    App,
    Box,
    Branch,
    CtorRef,
    DefRef,
    Hole,
    Id,
    IdElim,
    IndRef,
    Lam0,
    Lam1,
    Loc,
    Match,
    Meta,
    Pair0,
    Pair1,
    Pi0,
    Pi1,
    ProjL,
    ProjR,
    Refl,
    SchemeRef,
    Sig0,
    Sig0Elim,
    Sig1,
    Sig1Elim,
    SortTerm,
    Term,
    Var,
    With,
    has_var,
    subterms,
)

_BINDERS = {Pi0: "pi0", Pi1: "pi1", Lam0: "lam0", Lam1: "lam1", Sig0: "sig0", Sig1: "sig1"}
_LOWER = ["x", "y", "z", "w", "u", "v"]
_UPPER = ["A", "B", "C", "D", "E", "F"]


def _numeral(t: Term) -> int | None:
    n = 0
    while type(t) is CtorRef and t.name == "S" and len(t.args) == 1:
        n += 1
        t = t.args[0]
    if type(t) is CtorRef and t.name == "zero" and not t.args:
        return n
    return None


class Printer:
    def __init__(self, reserved: set[str]):
        self.reserved = reserved

    def fresh(self, hint: str | None, scope: list[str], sort_like: bool, body: Term | None, depth: int) -> str:
        if hint == "_" and body is not None and not has_var(body, depth):
            return "_"
        taken = set(scope) | self.reserved
        if hint and hint != "_" and hint not in taken and hint not in KEYWORDS:
            return hint
        pool = _UPPER if sort_like else _LOWER
        if hint and hint != "_" and hint not in KEYWORDS:
            pool = [hint] + pool
        for base in pool:
            if base not in taken and base not in KEYWORDS:
                return base
        i = 1
        base = pool[0]
        while f"{base}{i}" in taken:
            i += 1
        return f"{base}{i}"

    def var(self, v: Var, scope: list[str]) -> str:
        if v.idx < len(scope):
            return scope[len(scope) - 1 - v.idx]
        return f"#{v.idx}"

    def level(self, t: Term) -> int:
        tp = type(t)
        if tp in _BINDERS or tp in (IdElim, Sig0Elim, Sig1Elim, Match):
            return 0
        if tp in (App, ProjL, ProjR):
            return 2
        if tp in (IndRef, CtorRef) and t.args and _numeral(t) is None:
            return 2
        return 3

    def pp(self, t: Term, scope: list[str], prec: int = 0) -> str:
        s = self.go(t, scope)
        return f"({s})" if self.level(t) < prec else s

    def go(self, t: Term, scope: list[str]) -> str:
        tp = type(t)
        if tp is Var:
            return self.var(t, scope)
        if tp is SortTerm:
            return t.s.value
        if tp in _BINDERS:
            sort_like = type(t.dom if hasattr(t, "dom") else t.ann) is SortTerm
            x = self.fresh(t.name, scope, sort_like, t.cod if hasattr(t, "cod") else t.body, 0)
            dom = t.dom if hasattr(t, "dom") else t.ann
            body = t.cod if hasattr(t, "cod") else t.body
            return f"{_BINDERS[tp]}{{{t.t.value}}}({x}:{self.pp(dom, scope)}). {self.pp(body, scope + [x])}"
        if tp is App:
            return f"{self.pp(t.fun, scope, 2)} {self.pp(t.arg, scope, 3)}"
        if tp is Box:
            return "<>"
        if tp is Loc:
            return f"*{t.l}"
        if tp is Hole:
            return "_"
        if tp is Meta:
            return f"?{t.id}"
        if tp is Id:
            return f"Id({self.pp(t.ty, scope)}, {self.pp(t.lhs, scope)}, {self.pp(t.rhs, scope)})"
        if tp is Refl:
            return f"refl({self.pp(t.m, scope)})"
        if tp is IdElim:
            h = self.pp(t.h, scope)
            p = self.pp(t.p, scope)
            if type(t.motive) is Box:
                return f"rew[<>] {h} in {p}"
            xn, pn = t.names or ("x", "p")
            x = self.fresh(xn, scope, False, None, 0)
            pv = self.fresh(pn if pn != "_" else "p", scope + [x], False, None, 0)
            mot = self.pp(t.motive, scope + [x, pv])
            return f"rew[{x},{pv} => {mot}] {h} in {p}"
        if tp in (Pair0, Pair1, APair):
            tag = {Pair0: "0", Pair1: "1", APair: "&"}[tp]
            a, b = (t.fst, t.snd) if tp is not APair else (t.lhs, t.rhs)
            return f"<{self.pp(a, scope)}, {self.pp(b, scope)}>{tag}{{{t.t.value}}}"
        if tp is With:
            return f"with{{{t.t.value}}}({self.pp(t.lhs, scope)}, {self.pp(t.rhs, scope)})"
        if tp is ProjL or tp is ProjR:
            return f"proj{'L' if tp is ProjL else 'R'} {self.pp(t.m, scope, 3)}"
        if tp is Sig0Elim or tp is Sig1Elim:
            kw = "split0" if tp is Sig0Elim else "split1"
            zn, xn, yn = t.names or ("z", "x", "y")
            head = kw
            if type(t.motive) is Box:
                head += "[<>]"
            elif t.motive is not None:
                z = self.fresh(zn, scope, False, None, 0)
                head += f"[{z} => {self.pp(t.motive, scope + [z])}]"
            scrut = self.pp(t.scrut, scope)
            x = self.fresh(xn, scope, False, None, 0)
            y = self.fresh(yn if yn != "_" else "y", scope + [x], False, None, 0)
            return f"{head} {scrut} with <{x}, {y}> => {self.pp(t.branch, scope + [x, y])}"
        if tp is Match:
            out = f"match {self.pp(t.scrut, scope)}"
            if type(t.motive) is Box:
                out += " as z in <>"
            elif t.motive is not None:
                z = self.fresh(t.name, scope, False, None, 0)
                out += f" as {z} in {self.pp(t.motive, scope + [z])}"
            out += " with"
            for br in t.branches:
                out += " " + self.branch(br, scope)
            return out + " end"
        if tp is IndRef:
            return self.applied(t.name, t.args, scope, "")
        if tp is CtorRef:
            n = _numeral(t)
            if n is not None:
                return str(n)
            return self.applied(t.name, t.args, scope, "@" if t.args else "")
        if tp is DefRef:
            return t.name
        if tp is SchemeRef:
            sorts = ",".join("_" if s is None else s.value for s in t.sorts)
            return f"{t.name}<{sorts}>"
        if tp is Branch:
            return self.branch(t, scope)
        raise TypeError(f"cannot print {t!r}")

    def branch(self, br: Branch, scope: list[str]) -> str:
        names = list(br.names or ())
        names += [None] * (br.arity - len(names))
        inner = list(scope)
        bound = []
        for i, hint in enumerate(names):
            x = self.fresh(hint, inner, False, br.body, br.arity - 1 - i)
            if x == "_":
                # a wildcard field may still need a distinct slot in scope
                inner.append("_")
            else:
                inner.append(x)
            bound.append(x)
        fields = "".join(f" {x}" for x in bound)
        # patterns name the constructor of the scheme, not of the instance
        ctor = br.ctor.split("<", 1)[0]
        return f"| {ctor}{fields} => {self.pp(br.body, inner)}"

    def applied(self, name: str, args, scope: list[str], prefix: str) -> str:
        return " ".join([prefix + name] + [self.pp(a, scope, 3) for a in args])


def _globals(t: Term) -> set[str]:
    out = set()
    for u in subterms(t):
        if type(u) in (DefRef, IndRef, CtorRef, SchemeRef):
            out.add(u.name)
    return out


def pretty(t: Term, names: list[str] | None = None, sig=None) -> str:
    """Render ``t``; ``names`` gives the enclosing binders, outermost first."""
    reserved = _globals(t)
    if sig is not None:
        reserved |= set(sig.defs) | set(sig.inductives) | set(sig.ctors)
    return Printer(reserved).pp(t, list(names or []))
