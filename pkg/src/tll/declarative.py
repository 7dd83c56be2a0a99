"""The program judgment read off its rules as written.

Every rule that splits the program context tries all splits. This is
exponential in the number of linear entries and only meant as an oracle for
the algorithmic checker on small judgments. It covers variables, both
quantifiers, application, the three kinds of pairs and their eliminators,
projections and constructors; other forms are reported as unsupported.
"""

from __future__ import annotations

import itertools

from .checker import Checker, _as_ctx, _unshift, _UnshiftFailed
from .contexts import Ctx, PEntry, constrain, splits
from .env import Signature
from .errors import TLLError
from .syntax import (
    APair,
    App,
    CtorRef,
    L,
    Lam0,
    Lam1,
    Pair0,
    Pair1,
    Pi0,
    Pi1,
    ProjL,
    ProjR,
    Sig0,
    Sig0Elim,
    Sig1,
    Sig1Elim,
    Term,
    U,
    Var,
    With,
    instantiate,
    subst,
)


class Unsupported(Exception):
    pass


Delta = frozenset  # levels of the entries present in Δ


class Declarative:
    def __init__(self, sig: Signature | None = None):
        self.chk = Checker(sig)
        self.sig = self.chk.sig

    # Δ as a value of the declarative context type
    def pctx(self, ctx: Ctx, delta: Delta) -> tuple[PEntry, ...]:
        return tuple(PEntry(ctx.entries[k].name, ctx.entries[k].psort, ctx.entries[k].type, k) for k in sorted(delta))

    def splits(self, ctx: Ctx, delta: Delta):
        for d1, d2 in splits(self.pctx(ctx, delta)):
            yield frozenset(e.pos for e in d1), frozenset(e.pos for e in d2)

    def nsplits(self, ctx: Ctx, delta: Delta, n: int):
        """Every way to share Δ among ``n`` premises."""
        linear = sorted(k for k in delta if ctx.entries[k].psort is L)
        shared = frozenset(k for k in delta if ctx.entries[k].psort is U)
        for choice in itertools.product(range(n), repeat=len(linear)):
            yield [shared | {k for k, c in zip(linear, choice) if c == i} for i in range(n)]

    def unrestricted(self, ctx: Ctx, delta: Delta) -> bool:
        return constrain(self.pctx(ctx, delta), U)

    def logical(self, ctx: Ctx, m: Term, a: Term) -> bool:
        try:
            self.chk.check(ctx.logical(), m, a)
            return True
        except TLLError:
            return False

    def conv(self, a: Term, b: Term) -> bool:
        try:
            return self.chk.conv(a, b)
        except TLLError:
            return False

    def infer(self, ctx: Ctx, delta: Delta, m: Term) -> Term | None:
        """A type of ``m`` under exactly ``Γ; Δ``, or None."""
        match m:
            case Var():
                k = ctx.level(m.idx)
                if k not in delta or ctx.entries[k].psort is None:
                    return None
                if not self.unrestricted(ctx, delta - {k}):
                    return None
                return ctx.type_of(m.idx)
            case Lam0() | Lam1():
                if not constrain(self.pctx(ctx, delta), m.t):
                    return None
                try:
                    ann, s = self.chk.check_type(ctx.logical(), m.ann)
                except TLLError:
                    return None
                if type(m) is Lam1:
                    inner = ctx.extend(m.name or "x", ann, s)
                    b = self.infer(inner, delta | {len(ctx)}, m.body)
                    return None if b is None else Pi1(m.t, ann, b)
                inner = ctx.extend(m.name or "x", ann, None)
                b = self.infer(inner, delta, m.body)
                return None if b is None else Pi0(m.t, ann, b)
            case App():
                # Π⁰ application: the whole Δ goes to the function
                f = self.infer(ctx, delta, m.fun)
                if f is not None:
                    w = self.chk.whnf(f)
                    if type(w) is Pi0 and self.logical(ctx, m.arg, w.dom):
                        return subst(w.cod, m.arg)
                for d1, d2 in self.splits(ctx, delta):
                    f = self.infer(ctx, d1, m.fun)
                    if f is None:
                        continue
                    w = self.chk.whnf(f)
                    if type(w) is not Pi1:
                        continue
                    if self.check(ctx, d2, m.arg, w.dom):
                        return subst(w.cod, m.arg)
                return None
            case APair():
                if not constrain(self.pctx(ctx, delta), m.t):
                    return None
                a = self.infer(ctx, delta, m.lhs)
                b = self.infer(ctx, delta, m.rhs)
                if a is None or b is None:
                    return None
                return self.formed(ctx, With(m.t, a, b))
            case ProjL() | ProjR():
                a = self.infer(ctx, delta, m.m)
                if a is None:
                    return None
                w = self.chk.whnf(a)
                if type(w) is not With:
                    return None
                return w.lhs if type(m) is ProjL else w.rhs
            case Pair1():
                for d1, d2 in self.splits(ctx, delta):
                    a = self.infer(ctx, d1, m.fst)
                    b = self.infer(ctx, d2, m.snd) if a is not None else None
                    if b is not None:
                        return self.formed(ctx, Sig1(m.t, a, self.chk.pair_cod(ctx, m.fst, a, b)))
                return None
            case Pair0():
                a = self.infer(ctx, delta, m.fst)
                if a is None:
                    return None
                try:
                    _, b = self.chk.infer(ctx.logical(), m.snd)
                except TLLError:
                    return None
                return self.formed(ctx, Sig0(m.t, a, self.chk.pair_cod(ctx, m.fst, a, b)))
            case Sig0Elim() | Sig1Elim():
                if m.motive is not None:
                    raise Unsupported("annotated split")
                for d1, d2 in self.splits(ctx, delta):
                    s = self.infer(ctx, d1, m.scrut)
                    if s is None:
                        continue
                    w = self.chk.whnf(s)
                    if type(w) is not (Sig0 if type(m) is Sig0Elim else Sig1):
                        continue
                    sx = self.chk.infer_sort(ctx.logical(), w.dom)
                    inner = ctx.extend("x", w.dom, sx)
                    sy = self.chk.infer_sort(inner.logical(), w.cod) if type(w) is Sig1 else None
                    inner = inner.extend("y", w.cod, sy)
                    d2x = d2 | {len(ctx)} | ({len(ctx) + 1} if sy is not None else frozenset())
                    b = self.infer(inner, d2x, m.branch)
                    if b is None:
                        continue
                    try:
                        return _unshift(b, 2)
                    except _UnshiftFailed:
                        continue
                return None
            case CtorRef():
                return self.ctor(ctx, delta, m)
        raise Unsupported(type(m).__name__)

    def ctor(self, ctx: Ctx, delta: Delta, m: CtorRef) -> Term | None:
        info = self.sig.ctors.get(m.name)
        if info is None or len(m.args) != info.arity:
            return None
        params = list(m.args[: info.nparams])
        fields = self.chk.ctor_fields(m.name, params)
        rel = [i for i, (_, r, _) in enumerate(fields) if r]
        if not rel and not self.unrestricted(ctx, delta):
            return None
        vals = list(m.args[info.nparams :])
        for shares in self.nsplits(ctx, delta, max(len(rel), 1)):
            ok = True
            for i, (_, r, fty) in enumerate(fields):
                want = instantiate(fty, vals[:i]) if i else fty
                if r:
                    ok = self.check(ctx, shares[rel.index(i)], vals[i], want)
                else:
                    ok = self.logical(ctx, vals[i], want)
                if not ok:
                    break
            if ok:
                return self.chk.whnf(self.chk.infer(ctx.logical(), m)[1])
        return None

    def formed(self, ctx: Ctx, ty: Term) -> Term | None:
        try:
            self.chk.check_type(ctx.logical(), ty)
        except TLLError:
            return None
        return ty

    def check(self, ctx: Ctx, delta: Delta, m: Term, a: Term) -> bool:
        if type(m) in (Pair0, Pair1):
            w = self.chk.whnf(a)
            if type(w) is (Sig0 if type(m) is Pair0 else Sig1) and w.t is m.t:
                if type(m) is Pair0:
                    return self.check(ctx, delta, m.fst, w.dom) and self.logical(ctx, m.snd, subst(w.cod, m.fst))
                return any(
                    self.check(ctx, d1, m.fst, w.dom) and self.check(ctx, d2, m.snd, subst(w.cod, m.fst))
                    for d1, d2 in self.splits(ctx, delta)
                )
        b = self.infer(ctx, delta, m)
        return b is not None and self.conv(a, b)


def declarative_check(g, m: Term, a: Term, sig: Signature | None = None) -> bool:
    """Whether ``Γ; Δ ⊢ m : A`` is derivable for the Δ recorded in ``g``.

    Raises :class:`Unsupported` for term formers outside the covered
    fragment.
    """
    ctx = _as_ctx(g)
    delta = frozenset(k for k, e in enumerate(ctx.entries) if e.psort is not None)
    return Declarative(sig).check(ctx, delta, m, a)


def declarative_infer(g, m: Term, sig: Signature | None = None) -> Term | None:
    ctx = _as_ctx(g)
    delta = frozenset(k for k, e in enumerate(ctx.entries) if e.psort is not None)
    return Declarative(sig).infer(ctx, delta, m)
