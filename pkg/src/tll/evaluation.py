"""Program-level small-step semantics, for source terms and erased terms alike.

Evaluation is call-by-value and left to right. Irrelevant positions
(annotations, Π⁰ arguments, equality proofs, brace fields) are never
evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .env import Signature
from .errors import EvalError, FuelExhausted
from .reduction import Fuel, _fuel
from .syntax import (
    APair,
    App,
    Box,
    CtorRef,
    DefRef,
    IdElim,
    Lam0,
    Lam1,
    Loc,
    Match,
    Pair0,
    Pair1,
    ProjL,
    ProjR,
    Sig0Elim,
    Sig1Elim,
    Term,
    Var,
    instantiate,
    spine,
    subst,
)


def relevant_positions(sig: Signature, c: CtorRef) -> list[int]:
    """Indices into ``c.args`` holding computationally relevant fields."""
    info = sig.ctors.get(c.name)
    if info is None:
        return []
    return [info.nparams + i for i, f in enumerate(info.fields) if f.relevant]


def is_value(m: Term, sig: Signature | None = None, neutral: bool = True) -> bool:
    """Program values. With ``neutral`` an application headed by a
    variable (an assumed constant) also counts, since it cannot move."""
    match m:
        case Var() | Lam0() | Lam1() | Box() | Loc() | APair():
            return True
        case Pair0():
            return is_value(m.fst, sig, neutral)
        case Pair1():
            return is_value(m.fst, sig, neutral) and is_value(m.snd, sig, neutral)
        case CtorRef():
            if sig is None:
                return all(is_value(a, None, neutral) for a in m.args)
            return all(is_value(m.args[i], sig, neutral) for i in relevant_positions(sig, m))
        case App() if neutral:
            head, _ = spine(m)
            return type(head) is Var
    return False


@dataclass
class Stepper:
    """One-step reduction. ``erased`` selects the erased bodies of
    definitions; ``mutant`` drops the value premise of the β₁ rule."""

    sig: Signature
    erased: bool = False
    mutant: bool = False
    last_rule: str | None = field(default=None, init=False)

    def value(self, m: Term) -> bool:
        return is_value(m, self.sig)

    def step(self, m: Term) -> Term | None:
        match m:
            case App(fun=f, arg=a):
                if not self.value(f):
                    f2 = self.step(f)
                    return None if f2 is None else App(f2, a)
                if type(f) is Lam0:
                    self.last_rule = "beta0"
                    return subst(f.body, a)
                if type(f) is Lam1:
                    if self.mutant or self.value(a):
                        self.last_rule = "beta1"
                        return subst(f.body, a)
                    a2 = self.step(a)
                    return None if a2 is None else App(f, a2)
                return None
            case DefRef():
                info = self.sig.defs.get(m.name)
                body = None if info is None else (info.erased if self.erased else info.body)
                if body is None:
                    return None
                self.last_rule = "delta"
                return body
            case IdElim():
                self.last_rule = "rew"
                return m.h
            case Pair0():
                f2 = self.step(m.fst)
                return None if f2 is None else Pair0(m.t, f2, m.snd)
            case Pair1():
                if not self.value(m.fst):
                    f2 = self.step(m.fst)
                    return None if f2 is None else Pair1(m.t, f2, m.snd)
                s2 = self.step(m.snd)
                return None if s2 is None else Pair1(m.t, m.fst, s2)
            case Sig0Elim() | Sig1Elim():
                s = m.scrut
                if type(s) in (Pair0, Pair1) and self.value(s):
                    self.last_rule = "split"
                    return instantiate(m.branch, (s.fst, s.snd))
                s2 = self.step(s)
                return None if s2 is None else type(m)(m.motive, s2, m.branch, names=m.names)
            case ProjL() | ProjR():
                if type(m.m) is APair:
                    self.last_rule = "proj"
                    return m.m.lhs if type(m) is ProjL else m.m.rhs
                s2 = self.step(m.m)
                return None if s2 is None else type(m)(s2)
            case CtorRef():
                for i in relevant_positions(self.sig, m):
                    if not self.value(m.args[i]):
                        a2 = self.step(m.args[i])
                        if a2 is None:
                            return None
                        args = list(m.args)
                        args[i] = a2
                        return CtorRef(m.name, tuple(args))
                return None
            case Match():
                s = m.scrut
                if type(s) is CtorRef and self.value(s):
                    info = self.sig.ctors.get(s.name)
                    for br in m.branches:
                        if br.ctor == s.name:
                            self.last_rule = "match"
                            return instantiate(br.body, s.args[info.nparams :])
                    return None
                s2 = self.step(s)
                return None if s2 is None else Match(m.motive, s2, m.branches, name=m.name)
        return None


def pstep(m: Term, sig: Signature, erased: bool = False, mutant: bool = False) -> Term | None:
    return Stepper(sig, erased, mutant).step(m)


@dataclass
class Trace:
    terms: list[Term]
    rules: list[str]

    @property
    def steps(self) -> int:
        return len(self.rules)

    @property
    def result(self) -> Term:
        return self.terms[-1]


def ptrace(
    m: Term,
    sig: Signature,
    fuel: Fuel | int | None = None,
    erased: bool = False,
    mutant: bool = False,
) -> Trace:
    """Iterate ``pstep`` to a value, recording every intermediate term."""
    fuel = _fuel(fuel)
    st = Stepper(sig, erased, mutant)
    terms, rules = [m], []
    while not st.value(m):
        st.last_rule = None
        nxt = st.step(m)
        if nxt is None:
            raise EvalError("stuck-term", f"evaluation is stuck after {len(rules)} steps")
        fuel.tick()
        rules.append(st.last_rule or "congruence")
        terms.append(nxt)
        m = nxt
    return Trace(terms, rules)


def peval(
    m: Term,
    sig: Signature,
    fuel: Fuel | int | None = None,
    erased: bool = False,
    mutant: bool = False,
) -> Term:
    fuel = _fuel(fuel)
    st = Stepper(sig, erased, mutant)
    while not st.value(m):
        nxt = st.step(m)
        if nxt is None:
            raise EvalError("stuck-term", "evaluation is stuck")
        fuel.tick()
        m = nxt
    return m


__all__ = ["FuelExhausted", "Stepper", "Trace", "is_value", "peval", "pstep", "ptrace"]
