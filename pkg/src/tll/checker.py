"""Bidirectional type checking at both levels, with erasure fused in.

The logical judgment ``Γ ⊢ m : A`` is implemented by :meth:`Checker.infer`
and :meth:`Checker.check`.  The program judgment ``Γ; Δ ⊢ m : A`` is
:meth:`Checker.pinfer` / :meth:`Checker.pcheck`; they also return the erased
term and the set of linear entries the term consumed (as context levels).
Linearity is checked algorithmically: sibling subterms must consume disjoint
sets, and every linear binder must be consumed before it goes out of scope.

Underscores elaborate to metavariables that are solved by first-order
unification against the expected type and the types of later arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

from .contexts import Ctx
from .env import Signature, mangle
from .errors import LinearityError, TLLError, TypingError
from .reduction import Fuel, default_fuel, normalize, whnf
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
    L,
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
    Sort,
    SortTerm,
    Term,
    U,
    Var,
    With,
    _SHAPE,
    _walk,
    apply,
    children,
    instantiate,
    map_children,
    shift,
    spine,
    subst,
    subterms,
)

Consumed = frozenset
EMPTY: frozenset[int] = frozenset()


@dataclass
class MetaVar:
    ctx: Ctx
    type: Term
    span: object = None


class _UnshiftFailed(Exception):
    pass


def _unshift(t: Term, k: int) -> Term:
    """Move ``t`` out from under ``k`` binders; fails if it uses them."""
    if k == 0:
        return t

    def on_var(v: Var, c: int) -> Term:
        if v.idx < c:
            return v
        if v.idx - c < k:
            raise _UnshiftFailed
        return Var(v.idx - k, v.name, v.span)

    def on_meta(m: Meta, c: int) -> Term:
        if m.offset - c < k:
            raise _UnshiftFailed
        return Meta(m.id, m.offset - k, m.span)

    return _walk(t, 0, on_var, on_meta)


def _has_meta(t: Term) -> bool:
    return any(type(u) is Meta for u in subterms(t))


def _shallow_eq(a: Term, b: Term) -> bool:
    """Same constructor and equal non-term fields (arity of tuples included)."""
    if type(a) is not type(b):
        return False
    kids = dict(_SHAPE[type(a)])
    for f in a.__dataclass_fields__.values():
        if not f.compare:
            continue
        x, y = getattr(a, f.name), getattr(b, f.name)
        if f.name in kids:
            if kids[f.name] == "seq" and len(x) != len(y):
                return False
            if (x is None) != (y is None):
                return False
            continue
        if x != y:
            return False
    return True


class Checker:
    def __init__(self, sig: Signature | None = None, fuel: int | None = None):
        self.sig = sig if sig is not None else Signature()
        self.fuel_steps = default_fuel() if fuel is None else fuel
        self.metas: dict[int, MetaVar] = {}
        self.solutions: dict[int, Term] = {}
        self._type_cache: dict[str, Term] = {}

    # -- reduction helpers ---------------------------------------------------

    def fuel(self) -> Fuel:
        return Fuel(self.fuel_steps)

    def whnf(self, t: Term) -> Term:
        return whnf(self.sig, self.zonk(t), self.fuel())

    def normalize(self, t: Term) -> Term:
        return normalize(self.sig, self.zonk(t), self.fuel())

    def conv(self, a: Term, b: Term) -> bool:
        a, b = self.zonk(a), self.zonk(b)
        if a == b:
            return True
        if _has_meta(a) or _has_meta(b):
            return self.unify(a, b)
        fuel = self.fuel()
        return normalize(self.sig, a, fuel) == normalize(self.sig, b, fuel)

    # -- diagnostics ---------------------------------------------------------

    def show(self, t: Term, ctx: Ctx) -> str:
        from .pretty import pretty

        return pretty(self.zonk(t), ctx.names(), self.sig)

    def mismatch(self, ctx: Ctx, expected: Term, actual: Term, term: Term | None = None) -> TypingError:
        try:
            e = self.show(self.normalize(expected), ctx)
            a = self.show(self.normalize(actual), ctx)
        except TLLError:
            e, a = self.show(expected, ctx), self.show(actual, ctx)
        msg = f"expected type {e}, found {a}"
        if term is not None:
            msg = f"{self.show(term, ctx)}: {msg}"
        return TypingError("type-mismatch", msg, getattr(term, "span", None), ctx.describe())

    def error(self, code: str, msg: str, ctx: Ctx, term: Term | None = None) -> TypingError:
        cls = LinearityError if code.startswith("linear") or code == "constraint-violation" else TypingError
        return cls(code, msg, getattr(term, "span", None), ctx.describe())

    # -- metavariables -------------------------------------------------------

    def fresh_meta(self, ctx: Ctx, ty: Term, span=None) -> int:
        mid = len(self.metas)
        while mid in self.metas:
            mid += 1
        self.metas[mid] = MetaVar(ctx, ty, span)
        return mid

    def zonk(self, t: Term) -> Term:
        if not self.solutions:
            return t

        def on_meta(m: Meta, c: int) -> Term:
            sol = self.solutions.get(m.id)
            if sol is None:
                return m
            return shift(self.zonk(sol), m.offset)

        return _walk(t, 0, lambda v, c: v, on_meta)

    def solve(self, m: Meta, t: Term) -> bool:
        try:
            sol = _unshift(t, m.offset)
        except _UnshiftFailed:
            return False
        if any(type(u) is Meta and u.id == m.id for u in subterms(sol)):
            return False
        info = self.metas[m.id]
        self.solutions[m.id] = sol
        try:
            _, ty = self.infer(info.ctx, sol)
            ok = self.unify(ty, info.type)
        except TLLError:
            ok = False
        if not ok:
            del self.solutions[m.id]
        return ok

    def unify(self, a: Term, b: Term) -> bool:
        a, b = self.zonk(a), self.zonk(b)
        if a == b:
            return True
        if type(a) is Meta:
            return self.solve(a, b)
        if type(b) is Meta:
            return self.solve(b, a)
        if _shallow_eq(a, b):
            snap = dict(self.solutions)
            ka = [c for _, c, _ in children(a)]
            kb = [c for _, c, _ in children(b)]
            if len(ka) == len(kb) and all(self.unify(x, y) for x, y in zip(ka, kb)):
                return True
            self.solutions = snap
        wa = whnf(self.sig, a, self.fuel())
        wb = whnf(self.sig, b, self.fuel())
        if wa != a or wb != b:
            return self.unify(wa, wb)
        if _has_meta(a) or _has_meta(b):
            return False
        fuel = self.fuel()
        return normalize(self.sig, a, fuel) == normalize(self.sig, b, fuel)

    def snapshot(self):
        return dict(self.solutions)

    def restore(self, snap) -> None:
        self.solutions = snap

    # -- signature-derived types ---------------------------------------------

    def ind_type(self, name: str) -> Term:
        key = "I:" + name
        if key not in self._type_cache:
            info = self.sig.inductives[name]
            ty: Term = SortTerm(info.arity)
            for pn, pt in reversed(info.params):
                ty = Pi1(U, pt, ty, name=pn)
            self._type_cache[key] = ty
        return self._type_cache[key]

    def ctor_type(self, name: str) -> Term:
        key = "C:" + name
        if key not in self._type_cache:
            info = self.sig.ctors[name]
            ind = self.sig.inductives[info.ind]
            np, nf = info.nparams, len(info.fields)
            ty: Term = IndRef(ind.name, tuple(Var(np + nf - 1 - j) for j in range(np)))
            for f in reversed(info.fields):
                ty = (Pi1 if f.relevant else Pi0)(U, f.type, ty, name=f.name)
            for pn, pt in reversed(ind.params):
                ty = Pi0(U, pt, ty, name=pn)
            self._type_cache[key] = ty
        return self._type_cache[key]

    def ctor_fields(self, cname: str, params: tuple[Term, ...]) -> list:
        """Field telescope with the parameters substituted; entry j sits
        under the j earlier fields."""
        info = self.sig.ctors[cname]
        out = []
        for j, f in enumerate(info.fields):
            ty = instantiate_under(f.type, [shift(p, j) for p in params], j)
            out.append((f.name, f.relevant, ty))
        return out

    # -- the logical judgment -------------------------------------------------

    def check_type(self, ctx: Ctx, a: Term) -> tuple[Term, Sort]:
        a2, ty = self.infer(ctx, a)
        w = self.whnf(ty)
        if type(w) is not SortTerm:
            raise self.error("not-a-type", f"{self.show(a2, ctx)} is not a type", ctx, a)
        return a2, w.s

    def infer_sort(self, ctx: Ctx, a: Term) -> Sort:
        return self.check_type(ctx, a)[1]

    def infer(self, ctx: Ctx, m: Term) -> tuple[Term, Term]:
        try:
            return self._infer(ctx, m)
        except TLLError as e:
            if e.span is None:
                e.span = getattr(m, "span", None)
            raise

    def check(self, ctx: Ctx, m: Term, a: Term) -> Term:
        try:
            return self._check(ctx, m, a)
        except TLLError as e:
            if e.span is None:
                e.span = getattr(m, "span", None)
            raise

    def _infer(self, ctx: Ctx, m: Term) -> tuple[Term, Term]:
        match m:
            case Var():
                return m, ctx.type_of(m.idx)
            case SortTerm():
                return m, SortTerm(U)
            case Pi0() | Pi1():
                a, _ = self.check_type(ctx, m.dom)
                b, _ = self.check_type(ctx.extend(m.name or "x", a), m.cod)
                return type(m)(m.t, a, b, name=m.name, span=m.span), SortTerm(m.t)
            case Sig0() | Sig1():
                a, s = self.check_type(ctx, m.dom)
                b, r = self.check_type(ctx.extend(m.name or "x", a), m.cod)
                if m.t is U and (s is L or (type(m) is Sig1 and r is L)):
                    raise self.error(
                        "constraint-violation",
                        "a U-sorted pair type cannot carry linear components",
                        ctx,
                        m,
                    )
                return type(m)(m.t, a, b, name=m.name, span=m.span), SortTerm(m.t)
            case With():
                a, _ = self.check_type(ctx, m.lhs)
                b, _ = self.check_type(ctx, m.rhs)
                return With(m.t, a, b, span=m.span), SortTerm(m.t)
            case Lam0() | Lam1():
                if type(m.ann) is Hole:
                    raise self.error("unresolved-hole", "cannot infer the binder's type; annotate it", ctx, m)
                a, _ = self.check_type(ctx, m.ann)
                body, b = self.infer(ctx.extend(m.name or "x", a), m.body)
                pi = Pi0 if type(m) is Lam0 else Pi1
                return type(m)(m.t, a, body, name=m.name, span=m.span), pi(m.t, a, b, name=m.name)
            case App() | IndRef() | CtorRef() | DefRef() | SchemeRef():
                el, _, ty, _ = self.spine(ctx, m, None, prog=False)
                return el, ty
            case Id():
                return self.id_type(ctx, m), SortTerm(U)
            case Refl():
                if type(m.m) is Hole:
                    raise self.error("unresolved-hole", "bare refl needs an expected equality type", ctx, m)
                x, a = self.infer(ctx, m.m)
                return Refl(x, span=m.span), Id(a, x, x)
            case IdElim():
                el, _, ty, _ = self.id_elim(ctx, m, prog=False)
                return el, ty
            case Pair0() | Pair1():
                a_el, a = self.infer(ctx, m.fst)
                b_el, b = self.infer(ctx, m.snd)
                sig_t = (Sig0 if type(m) is Pair0 else Sig1)(m.t, a, self.pair_cod(ctx, a_el, a, b), name="_")
                self.check_type(ctx, sig_t)
                return type(m)(m.t, a_el, b_el, span=m.span), sig_t
            case APair():
                a_el, a = self.infer(ctx, m.lhs)
                b_el, b = self.infer(ctx, m.rhs)
                return APair(m.t, a_el, b_el, span=m.span), With(m.t, a, b)
            case ProjL() | ProjR():
                x, ty = self.infer(ctx, m.m)
                w = self.whnf(ty)
                if type(w) is not With:
                    raise self.error("type-mismatch", f"projection from non-additive type {self.show(w, ctx)}", ctx, m)
                return type(m)(x, span=m.span), (w.lhs if type(m) is ProjL else w.rhs)
            case Sig0Elim() | Sig1Elim():
                el, _, ty, _ = self.sig_elim(ctx, m, None, prog=False)
                return el, ty
            case Match():
                el, _, ty, _ = self.match(ctx, m, None, prog=False)
                return el, ty
            case Meta():
                return m, shift(self.zonk(self.metas[m.id].type), m.offset)
            case Box() | Loc():
                raise self.error("location-in-source", "boxes and locations cannot be type checked", ctx, m)
            case Hole():
                raise self.error("unresolved-hole", "cannot infer `_` here; supply the term explicitly", ctx, m)
        raise self.error("type-mismatch", f"unexpected term {m!r}", ctx, m)

    def _check(self, ctx: Ctx, m: Term, a: Term) -> Term:
        match m:
            case Lam0() | Lam1():
                w = self.whnf(a)
                pi = Pi0 if type(m) is Lam0 else Pi1
                if type(w) is not pi or w.t is not m.t:
                    raise self.mismatch(ctx, a, self._lam_shape(m), m)
                ann = self._lam_ann(ctx, m, w)
                body = self.check(ctx.extend(m.name or "x", ann), m.body, w.cod)
                return type(m)(m.t, ann, body, name=m.name, span=m.span)
            case Refl():
                w = self.whnf(a)
                if type(w) is not Id:
                    raise self.mismatch(ctx, a, Id(Hole(), m.m, m.m), m)
                x = w.lhs if type(m.m) is Hole else self.check(ctx, m.m, w.ty)
                if not (self.conv(x, w.lhs) and self.conv(x, w.rhs)):
                    raise self.mismatch(ctx, a, Id(w.ty, x, x), m)
                return Refl(x, span=m.span)
            case Pair0() | Pair1():
                w = self.whnf(a)
                want = Sig0 if type(m) is Pair0 else Sig1
                if type(w) is not want or w.t is not m.t:
                    return self._check_by_infer(ctx, m, a)
                x = self.check(ctx, m.fst, w.dom)
                y = self.check(ctx, m.snd, subst(w.cod, x))
                return type(m)(m.t, x, y, span=m.span)
            case APair():
                w = self.whnf(a)
                if type(w) is not With or w.t is not m.t:
                    return self._check_by_infer(ctx, m, a)
                return APair(m.t, self.check(ctx, m.lhs, w.lhs), self.check(ctx, m.rhs, w.rhs), span=m.span)
            case App(fun=Lam0() | Lam1()) if type(m.fun.ann) is not Hole and (r := self._redex(ctx, m, a, False)):
                return r[0]
            case App() | IndRef() | CtorRef() | DefRef() | SchemeRef():
                el, _, _, _ = self.spine(ctx, m, a, prog=False)
                return el
            case Sig0Elim() | Sig1Elim():
                el, _, _, _ = self.sig_elim(ctx, m, a, prog=False)
                return el
            case Match():
                el, _, _, _ = self.match(ctx, m, a, prog=False)
                return el
        return self._check_by_infer(ctx, m, a)

    def pair_cod(self, ctx: Ctx, fst: Term, a: Term, b: Term) -> Term:
        """The codomain inferred for a pair whose components have types
        ``a`` and ``b``: subterms of ``b`` convertible to ``fst`` are
        abstracted when that gives a well-formed family, so ``<n, refl n>``
        gets the type ``sig(x:A). Id(A, x, x)``."""
        body = shift(b, 1)
        target = shift(fst, 1)
        try:
            nf = self.normalize(target)
        except TLLError:
            return body

        def go(t: Term, depth: int) -> Term:
            if type(t) not in (SortTerm, IndRef, Hole, Meta, Branch):
                try:
                    u = _unshift(t, depth) if depth else t
                except _UnshiftFailed:
                    u = None
                if u is not None and (u == target or self.normalize(u) == nf):
                    return Var(depth)
            return map_children(t, lambda c, k: go(c, depth + k))

        try:
            dep = go(body, 0)
        except TLLError:
            return body
        if dep != body:
            try:
                self.check_type(ctx.extend("x", a), dep)
                return dep
            except TLLError:
                pass
        return body

    def _check_by_infer(self, ctx: Ctx, m: Term, a: Term) -> Term:
        el, ty = self.infer(ctx, m)
        if not self.conv(ty, a):
            raise self.mismatch(ctx, a, ty, m)
        return el

    def _lam_shape(self, m: Term) -> Term:
        pi = Pi0 if type(m) is Lam0 else Pi1
        return pi(m.t, m.ann, Hole(), name=m.name)

    def _lam_ann(self, ctx: Ctx, m: Term, w: Term) -> Term:
        if type(m.ann) is Hole:
            return w.dom
        ann, _ = self.check_type(ctx, m.ann)
        if not self.conv(ann, w.dom):
            raise self.mismatch(ctx, w.dom, ann, m.ann)
        return ann

    def id_type(self, ctx: Ctx, m: Id) -> Term:
        if type(m.ty) is Hole:
            lhs, a = self.infer(ctx, m.lhs)
            self.check_type(ctx, a)
        else:
            a, _ = self.check_type(ctx, m.ty)
            lhs = self.check(ctx, m.lhs, a)
        rhs = self.check(ctx, m.rhs, a)
        return Id(a, lhs, rhs, span=m.span)

    # -- linear bookkeeping ----------------------------------------------------

    def join(self, ctx: Ctx, c1: frozenset, c2: frozenset, term: Term | None) -> frozenset:
        both = c1 & c2
        if both:
            names = ", ".join(ctx.entries[k].name for k in sorted(both))
            raise self.error("linear-duplicated", f"linear variable {names} used more than once", ctx, term)
        return c1 | c2

    def release(self, ctx: Ctx, consumed: frozenset, level: int, term: Term | None) -> frozenset:
        """Close the scope of the binder at ``level`` (extended ``ctx``)."""
        e = ctx.entries[level]
        if e.psort is L and level not in consumed:
            raise self.error("linear-unused", f"linear variable {e.name} is never used", ctx, term)
        return consumed - {level}

    def require_unrestricted(self, ctx: Ctx, consumed: frozenset, t: Sort, term: Term, what: str):
        if t is U and consumed:
            names = ", ".join(ctx.entries[k].name for k in sorted(consumed))
            raise self.error(
                "constraint-violation",
                f"{what} tagged U captures linear variable {names}",
                ctx,
                term,
            )

    # -- the program judgment ---------------------------------------------------

    def pinfer(self, ctx: Ctx, m: Term) -> tuple[Term, Term, Term, frozenset]:
        """(elaborated, erased, type, consumed levels)."""
        try:
            return self._pinfer(ctx, m)
        except TLLError as e:
            if e.span is None:
                e.span = getattr(m, "span", None)
            raise

    def pcheck(self, ctx: Ctx, m: Term, a: Term) -> tuple[Term, Term, frozenset]:
        try:
            return self._pcheck(ctx, m, a)
        except TLLError as e:
            if e.span is None:
                e.span = getattr(m, "span", None)
            raise

    def _pinfer(self, ctx: Ctx, m: Term):
        match m:
            case Var():
                e = ctx.entry(m.idx)
                if e.psort is None:
                    raise self.error(
                        "relevance-violation",
                        f"{e.name} is only available logically and cannot be used as a program",
                        ctx,
                        m,
                    )
                used = frozenset({ctx.level(m.idx)}) if e.psort is L else EMPTY
                return m, m, ctx.type_of(m.idx), used
            case SortTerm() | Pi0() | Pi1() | Sig0() | Sig1() | With() | Id() | IndRef():
                raise self.error("not-a-program", "types may only appear in irrelevant positions", ctx, m)
            case Refl():
                raise self.error("not-a-program", "equality proofs exist only at the logical level", ctx, m)
            case Lam0() | Lam1():
                if type(m.ann) is Hole:
                    raise self.error("unresolved-hole", "cannot infer the binder's type; annotate it", ctx, m)
                a, s = self.check_type(ctx, m.ann)
                return self._plam(ctx, m, a, s, None)
            case App() | CtorRef() | DefRef() | SchemeRef():
                return self.spine(ctx, m, None, prog=True)
            case IdElim():
                return self.id_elim(ctx, m, prog=True)
            case Pair0():
                x, xe, a, c = self.pinfer(ctx, m.fst)
                y, b = self.infer(ctx, m.snd)
                ty = Sig0(m.t, a, self.pair_cod(ctx, x, a, b), name="_")
                self.check_type(ctx, ty)
                return Pair0(m.t, x, y, span=m.span), Pair0(m.t, xe, Box()), ty, c
            case Pair1():
                x, xe, a, c1 = self.pinfer(ctx, m.fst)
                y, ye, b, c2 = self.pinfer(ctx, m.snd)
                ty = Sig1(m.t, a, self.pair_cod(ctx, x, a, b), name="_")
                self.check_type(ctx, ty)
                return Pair1(m.t, x, y, span=m.span), Pair1(m.t, xe, ye), ty, self.join(ctx, c1, c2, m)
            case APair():
                x, xe, a, c1 = self.pinfer(ctx, m.lhs)
                y, ye, b, c2 = self.pinfer(ctx, m.rhs)
                c = self._additive(ctx, c1, c2, m)
                return APair(m.t, x, y, span=m.span), APair(m.t, xe, ye), With(m.t, a, b), c
            case ProjL() | ProjR():
                x, xe, ty, c = self.pinfer(ctx, m.m)
                w = self.whnf(ty)
                if type(w) is not With:
                    raise self.error("type-mismatch", f"projection from non-additive type {self.show(w, ctx)}", ctx, m)
                res = w.lhs if type(m) is ProjL else w.rhs
                return type(m)(x, span=m.span), type(m)(xe), res, c
            case Sig0Elim() | Sig1Elim():
                return self.sig_elim(ctx, m, None, prog=True)
            case Match():
                return self.match(ctx, m, None, prog=True)
            case Box() | Loc():
                raise self.error("location-in-source", "boxes and locations cannot be type checked", ctx, m)
            case Hole():
                raise self.error("unresolved-hole", "`_` cannot stand for a program", ctx, m)
        raise self.error("not-a-program", f"unexpected term {m!r}", ctx, m)

    def _pcheck(self, ctx: Ctx, m: Term, a: Term):
        match m:
            case Lam0() | Lam1():
                w = self.whnf(a)
                pi = Pi0 if type(m) is Lam0 else Pi1
                if type(w) is not pi or w.t is not m.t:
                    raise self.mismatch(ctx, a, self._lam_shape(m), m)
                ann = self._lam_ann(ctx, m, w)
                s = self.infer_sort(ctx, ann)
                el, er, _, c = self._plam(ctx, m, ann, s, w.cod)
                return el, er, c
            case Pair0() | Pair1():
                w = self.whnf(a)
                want = Sig0 if type(m) is Pair0 else Sig1
                if type(w) is not want or w.t is not m.t:
                    return self._pcheck_by_infer(ctx, m, a)
                x, xe, c1 = self.pcheck(ctx, m.fst, w.dom)
                if type(m) is Pair0:
                    y = self.check(ctx, m.snd, subst(w.cod, x))
                    return Pair0(m.t, x, y, span=m.span), Pair0(m.t, xe, Box()), c1
                y, ye, c2 = self.pcheck(ctx, m.snd, subst(w.cod, x))
                return Pair1(m.t, x, y, span=m.span), Pair1(m.t, xe, ye), self.join(ctx, c1, c2, m)
            case APair():
                w = self.whnf(a)
                if type(w) is not With or w.t is not m.t:
                    return self._pcheck_by_infer(ctx, m, a)
                x, xe, c1 = self.pcheck(ctx, m.lhs, w.lhs)
                y, ye, c2 = self.pcheck(ctx, m.rhs, w.rhs)
                c = self._additive(ctx, c1, c2, m)
                return APair(m.t, x, y, span=m.span), APair(m.t, xe, ye), c
            case App(fun=Lam0() | Lam1()) if type(m.fun.ann) is not Hole and (r := self._redex(ctx, m, a, True)):
                return r
            case App() | CtorRef() | DefRef() | SchemeRef():
                el, er, _, c = self.spine(ctx, m, a, prog=True)
                return el, er, c
            case Sig0Elim() | Sig1Elim():
                el, er, _, c = self.sig_elim(ctx, m, a, prog=True)
                return el, er, c
            case Match():
                el, er, _, c = self.match(ctx, m, a, prog=True)
                return el, er, c
        return self._pcheck_by_infer(ctx, m, a)

    def _redex(self, ctx: Ctx, m: App, a: Term, prog: bool):
        """Check ``(λx:A. b) n`` against ``a`` by checking ``b`` against ``a``
        itself, which needs no type for ``b`` to be inferred.

        This only works when the type of ``b`` does not mention ``x``; on
        failure the state is restored and None returned, so the caller falls
        back to inference.
        """
        snap = self.snapshot()
        try:
            return self._redex_rule(ctx, m, a, prog)
        except TLLError:
            self.restore(snap)
            return None

    def _redex_rule(self, ctx: Ctx, m: App, a: Term, prog: bool):
        lam = m.fun
        ann, s = self.check_type(ctx, lam.ann)
        relevant = type(lam) is Lam1
        if prog and relevant:
            arg, arg_e, c1 = self.pcheck(ctx, m.arg, ann)
        else:
            arg, arg_e, c1 = self.check(ctx, m.arg, ann), Box(), EMPTY
        inner = ctx.extend(lam.name or "x", ann, s if (prog and relevant) else None)
        goal = shift(a, 1)
        if not prog:
            body = self.check(inner, lam.body, goal)
            return App(type(lam)(lam.t, ann, body, name=lam.name, span=lam.span), arg, span=m.span), None, EMPTY
        body, body_e, c2 = self.pcheck(inner, lam.body, goal)
        c2 = self.release(inner, c2, len(ctx), lam)
        self.require_unrestricted(ctx, c2, lam.t, lam, "function")
        el = App(type(lam)(lam.t, ann, body, name=lam.name, span=lam.span), arg, span=m.span)
        er = App(type(lam)(lam.t, Box(), body_e, name=lam.name), arg_e if relevant else Box())
        return el, er, self.join(ctx, c1, c2, m)

    def _pcheck_by_infer(self, ctx: Ctx, m: Term, a: Term):
        el, er, ty, c = self.pinfer(ctx, m)
        if not self.conv(ty, a):
            raise self.mismatch(ctx, a, ty, m)
        return el, er, c

    def _plam(self, ctx: Ctx, m: Term, ann: Term, s: Sort, cod: Term | None):
        relevant = type(m) is Lam1
        inner = ctx.extend(m.name or "x", ann, s if relevant else None)
        if cod is None:
            body, body_e, b, c = self.pinfer(inner, m.body)
        else:
            body, body_e, c = self.pcheck(inner, m.body, cod)
            b = cod
        c = self.release(inner, c, len(ctx), m)
        self.require_unrestricted(ctx, c, m.t, m, "function")
        lam = type(m)
        pi = Pi1 if relevant else Pi0
        return (
            lam(m.t, ann, body, name=m.name, span=m.span),
            lam(m.t, Box(), body_e, name=m.name),
            pi(m.t, ann, b, name=m.name),
            c,
        )

    def _additive(self, ctx: Ctx, c1: frozenset, c2: frozenset, m: APair) -> frozenset:
        if c1 != c2:
            diff = sorted(c1 ^ c2)
            names = ", ".join(ctx.entries[k].name for k in diff)
            raise self.error(
                "linear-unused",
                f"both components of an additive pair must use the same linear variables ({names} differ)",
                ctx,
                m,
            )
        self.require_unrestricted(ctx, c1, m.t, m, "additive pair")
        return c1

    # -- shared rules --------------------------------------------------------------

    def id_elim(self, ctx: Ctx, m: IdElim, prog: bool):
        p, pty = self.infer(ctx, m.p)
        w = self.whnf(pty)
        if type(w) is not Id:
            raise self.error("type-mismatch", f"rew expects an equality proof, found {self.show(w, ctx)}", ctx, m.p)
        xn, pn = m.names or ("x", "p")
        mctx = ctx.extend(xn, w.ty).extend(pn, Id(shift(w.ty, 1), shift(w.lhs, 1), Var(0)))
        try:
            motive, _ = self.check_type(mctx, m.motive)
        except TLLError as e:
            if e.code in ("not-a-type",):
                e.code = "ill-formed-motive"
            raise
        want = instantiate(motive, (w.lhs, Refl(w.lhs)))
        result = instantiate(motive, (w.rhs, p))
        if prog:
            h, he, c = self.pcheck(ctx, m.h, want)
        else:
            h, he, c = self.check(ctx, m.h, want), None, EMPTY
        el = IdElim(motive, h, p, names=m.names, span=m.span)
        return el, IdElim(Box(), he, Box(), names=m.names) if prog else None, result, c

    def _motive(self, ctx: Ctx, motive: Term | None, scrut_ty: Term, zname: str, expected: Term | None, m: Term):
        """Elaborate a one-binder motive, defaulting to the expected type."""
        if motive is None:
            # None asks the caller to read the motive off the first branch
            return None if expected is None else shift(expected, 1)
        if type(motive) is Box:
            raise self.error("location-in-source", "erased motive in source", ctx, m)
        try:
            out, _ = self.check_type(ctx.extend(zname, scrut_ty), motive)
        except TLLError as e:
            if e.code == "not-a-type":
                e.code = "ill-formed-motive"
            raise
        return out

    def sig_elim(self, ctx: Ctx, m: Term, expected: Term | None, prog: bool):
        zn, xn, yn = m.names or ("z", "x", "y")
        if prog:
            s, se, sty, c1 = self.pinfer(ctx, m.scrut)
        else:
            (s, sty), se, c1 = self.infer(ctx, m.scrut), None, EMPTY
        w = self.whnf(sty)
        kind = type(w)
        if kind not in (Sig0, Sig1):
            raise self.error("type-mismatch", f"split expects a pair, found {self.show(w, ctx)}", ctx, m.scrut)
        elim = Sig0Elim if kind is Sig0 else Sig1Elim
        pair = Pair0 if kind is Sig0 else Pair1
        motive = self._motive(ctx, m.motive, w, zn, expected, m)
        bctx = ctx
        if prog:
            bctx = bctx.extend(xn, w.dom, self.infer_sort(ctx, w.dom))
            ysort = self.infer_sort(bctx, w.cod) if kind is Sig1 else None
            bctx = bctx.extend(yn, w.cod, ysort)
        else:
            bctx = bctx.extend(xn, w.dom).extend(yn, w.cod)
        goal = None if motive is None else subst(shift(motive, 2, 1), pair(w.t, Var(1), Var(0)))
        br, bre, bty, c2 = self._branch(bctx, m.branch, goal, prog)
        if motive is None:
            motive = shift(self._unbind(bctx, bty, 2, m), 1)
        if prog:
            c2 = self.release(bctx, c2, len(ctx) + 1, m)
            c2 = self.release(bctx, c2, len(ctx), m)
        result = subst(motive, s)
        if expected is not None and not self.conv(result, expected):
            raise self.mismatch(ctx, expected, result, m)
        mot_el = motive if m.motive is not None else None
        el = elim(mot_el, s, br, names=m.names, span=m.span)
        er = elim(Box(), se, bre, names=m.names) if prog else None
        return el, er, result, self.join(ctx, c1, c2, m) if prog else EMPTY

    def match(self, ctx: Ctx, m: Match, expected: Term | None, prog: bool):
        if prog:
            s, se, sty, c0 = self.pinfer(ctx, m.scrut)
        else:
            (s, sty), se, c0 = self.infer(ctx, m.scrut), None, EMPTY
        w = self.whnf(sty)
        if type(w) is not IndRef or w.name not in self.sig.inductives:
            raise self.error("type-mismatch", f"match expects an inductive value, found {self.show(w, ctx)}", ctx, m.scrut)
        ind = self.sig.inductives[w.name]
        params = w.args
        motive = self._motive(ctx, m.motive, w, m.name or "z", expected, m)
        by_ctor: dict[str, Branch] = {}
        for br in m.branches:
            cname = self._branch_ctor(ind, br, ctx)
            if cname is None:
                continue  # constructor pruned from this instance
            if cname in by_ctor:
                raise self.error("non-exhaustive-match", f"duplicate branch for {br.ctor}", ctx, br)
            by_ctor[cname] = br
        missing = [c for c in ind.ctors if c not in by_ctor]
        if missing:
            raise self.error("non-exhaustive-match", f"missing branch for {', '.join(missing)}", ctx, m)
        out, out_e = [], []
        branch_use: frozenset | None = None
        for cname in ind.ctors:
            br = by_ctor[cname]
            fields = self.ctor_fields(cname, params)
            if br.arity != len(fields):
                raise self.error(
                    "type-mismatch",
                    f"constructor {br.ctor} has {len(fields)} fields, branch binds {br.arity}",
                    ctx,
                    br,
                )
            bctx = ctx
            names = list(br.names or [f"x{i}" for i in range(br.arity)])
            for (fname, rel, fty), bn in zip(fields, names):
                psort = self.infer_sort(bctx, fty) if (prog and rel) else None
                bctx = bctx.extend(bn, fty, psort)
            k = len(fields)
            value = CtorRef(
                cname,
                tuple(shift(p, k) for p in params) + tuple(Var(k - 1 - j) for j in range(k)),
            )
            goal = None if motive is None else subst(shift(motive, k, 1), value)
            body, body_e, bty, cb = self._branch(bctx, br.body, goal, prog)
            if motive is None:
                motive = shift(self._unbind(bctx, bty, k, br), 1)
            if prog:
                for j in range(k):
                    cb = self.release(bctx, cb, len(ctx) + j, br)
                if branch_use is None:
                    branch_use = cb
                elif cb != branch_use:
                    diff = ", ".join(ctx.entries[x].name for x in sorted(cb ^ branch_use))
                    raise self.error(
                        "linear-unused",
                        f"match branches must use the same linear variables ({diff} differ)",
                        ctx,
                        br,
                    )
                out_e.append(Branch(cname, k, body_e, names=br.names))
            out.append(Branch(cname, k, body, names=br.names, span=br.span))
        if motive is None:
            raise self.error(
                "ill-formed-motive",
                "cannot infer the result type of an empty match; add an 'as z in C' annotation",
                ctx,
                m,
            )
        result = subst(motive, s)
        if expected is not None and not self.conv(result, expected):
            raise self.mismatch(ctx, expected, result, m)
        mot_el = motive if m.motive is not None else None
        el = Match(mot_el, s, tuple(out), name=m.name, span=m.span)
        if not prog:
            return el, None, result, EMPTY
        er = Match(Box(), se, tuple(out_e), name=m.name)
        return el, er, result, self.join(ctx, c0, branch_use or EMPTY, m)

    def _branch(self, bctx: Ctx, body: Term, goal: Term | None, prog: bool):
        if goal is None:
            if prog:
                return self.pinfer(bctx, body)
            el, ty = self.infer(bctx, body)
            return el, None, ty, EMPTY
        if prog:
            el, er, c = self.pcheck(bctx, body, goal)
            return el, er, goal, c
        return self.check(bctx, body, goal), None, goal, EMPTY

    def _unbind(self, bctx: Ctx, ty: Term, k: int, where: Term) -> Term:
        """A branch type with its ``k`` pattern variables removed."""
        try:
            return _unshift(self.zonk(ty), k)
        except _UnshiftFailed:
            pass
        try:
            return _unshift(self.normalize(ty), k)
        except _UnshiftFailed:
            raise self.error(
                "ill-formed-motive",
                "the result type depends on the pattern variables; add an 'as z in C' annotation",
                bctx,
                where,
            ) from None

    def _branch_ctor(self, ind, br: Branch, ctx: Ctx) -> str | None:
        if br.ctor in ind.ctors:
            return br.ctor
        if ind.scheme is not None:
            target = mangle(br.ctor, ind.sorts)
            if target in ind.ctors:
                return target
            if any(c == target for c, _ in ind.pruned):
                return None
        if any(c == br.ctor for c, _ in ind.pruned):
            return None
        raise self.error("type-mismatch", f"{br.ctor} is not a constructor of {ind.name}", ctx, br)

    # -- applications, constructors and references ----------------------------------

    def scheme_candidates(self, ref: SchemeRef) -> list[Term]:
        sig = self.sig
        out: list[Term] = []
        if ref.name in sig.schemes:
            sch = sig.schemes[ref.name]
            for sorts, target in sch.kept():
                if all(w is None or w is s for w, s in zip(ref.sorts, sorts)):
                    out.append(IndRef(target) if sch.kind == "inductive" else DefRef(target))
        elif ref.name in sig.scheme_ctors:
            sch = sig.schemes[sig.scheme_ctors[ref.name]]
            for sorts, _ in sch.kept():
                if all(w is None or w is s for w, s in zip(ref.sorts, sorts)):
                    cname = mangle(ref.name, sorts)
                    if cname in sig.ctors:
                        out.append(CtorRef(cname, (), implicit=True))
        return out

    def spine(self, ctx: Ctx, m: Term, expected: Term | None, prog: bool):
        head, args = spine(m)
        if type(head) is SchemeRef:
            return self._scheme_spine(ctx, head, args, expected, prog, m)
        return self._spine(ctx, head, args, expected, prog, m)

    def _scheme_spine(self, ctx, head: SchemeRef, args, expected, prog, m):
        cands = self.scheme_candidates(head)
        if not cands:
            raise self.error("all-instances-pruned", f"no usable instance of {head.name}", ctx, head)
        errors = []
        for cand in cands:
            snap = self.snapshot()
            try:
                return self._spine(ctx, cand, args, expected, prog, m)
            except TLLError as e:
                self.restore(snap)
                errors.append(e)
        for e in errors:
            if e.code != "type-mismatch":
                raise e
        raise errors[0]

    def _spine(self, ctx: Ctx, head: Term, args: list[Term], expected, prog: bool, m: Term):
        sig = self.sig
        kind = "term"
        consumed = EMPTY
        if type(head) is CtorRef:
            if head.name not in sig.ctors:
                raise self.error("unbound-identifier", f"unknown constructor {head.name}", ctx, head)
            info = sig.ctors[head.name]
            pre = [Hole(span=head.span)] * info.nparams if head.implicit else []
            args = pre + list(head.args) + list(args)
            ty, kind = self.ctor_type(head.name), "ctor"
            h_el = h_er = CtorRef(head.name)
        elif type(head) is IndRef:
            if prog:
                raise self.error("not-a-program", "types may only appear in irrelevant positions", ctx, head)
            if head.name not in sig.inductives:
                raise self.error("unbound-identifier", f"unknown inductive type {head.name}", ctx, head)
            args = list(head.args) + list(args)
            ty, kind = self.ind_type(head.name), "ind"
            h_el = h_er = IndRef(head.name)
        elif type(head) is DefRef:
            info = sig.defs.get(head.name)
            if info is None:
                raise self.error("unbound-identifier", f"unknown definition {head.name}", ctx, head)
            if prog and info.level != "program":
                raise self.error(
                    "relevance-violation",
                    f"logical definition {head.name} cannot be used as a program",
                    ctx,
                    head,
                )
            ty = info.type
            h_el = h_er = head
        elif prog:
            h_el, h_er, ty, consumed = self.pinfer(ctx, head)
        else:
            (h_el, ty), h_er = self.infer(ctx, head), None

        n = len(args)
        elabs: list[Term | None] = [None] * n
        erased: list[Term | None] = [None] * n
        deferred = []
        created = []
        for i, a in enumerate(args):
            w = self.whnf(ty)
            if type(w) not in (Pi0, Pi1):
                if kind != "term":
                    raise self.error("type-mismatch", f"{head.name} is applied to too many arguments", ctx, m)
                raise self.error("not-a-function", f"{self.show(h_el, ctx)} is not a function", ctx, m)
            rel = type(w) is Pi1
            dom = self.zonk(w.dom)
            if type(a) is Hole:
                if prog and rel:
                    raise self.error(
                        "unresolved-hole",
                        "`_` is only allowed for irrelevant arguments in programs",
                        ctx,
                        a,
                    )
                mid = self.fresh_meta(ctx, dom, a.span)
                created.append(mid)
                val: Term = Meta(mid)
                elabs[i] = val
                erased[i] = Box()
            elif _has_meta(dom):
                mid = self.fresh_meta(ctx, dom, getattr(a, "span", None))
                created.append(mid)
                val = Meta(mid)
                deferred.append((i, a, mid, rel))
            else:
                el, er, c = self._arg(ctx, a, dom, rel, prog)
                consumed = self.join(ctx, consumed, c, a) if prog else consumed
                val = el
                elabs[i], erased[i] = el, er
            ty = subst(w.cod, val)

        if kind != "term":
            full = len(args) == (sig.ctors[head.name].arity if kind == "ctor" else len(sig.inductives[head.name].params))
            if not full:
                raise self.error(
                    "not-fully-applied",
                    f"{head.name} must be applied to all of its arguments",
                    ctx,
                    m,
                )
        if expected is not None and not self.unify(ty, expected):
            raise self.mismatch(ctx, expected, ty, m)
        while deferred:
            # arguments whose domain is already known go first, since checking
            # them may solve the metas the others are waiting for
            ready = [d for d in deferred if not _has_meta(self.zonk(self.metas[d[2]].type))]
            i, a, mid, rel = (ready or deferred)[0]
            deferred.remove((i, a, mid, rel))
            dom = self.zonk(self.metas[mid].type)
            if _has_meta(dom):
                el, er, c = self._stuck_arg(ctx, a, dom, rel, prog)
            else:
                el, er, c = self._arg(ctx, a, dom, rel, prog)
            consumed = self.join(ctx, consumed, c, a) if prog else consumed
            if not self.unify(Meta(mid), el):
                raise self.mismatch(ctx, self.zonk(Meta(mid)), el, a)
            elabs[i], erased[i] = el, er
        for mid in created:
            if mid not in self.solutions:
                span = self.metas[mid].span
                err = self.error("unresolved-hole", "could not infer `_`; give the argument explicitly", ctx, m)
                err.span = span or err.span
                raise err
        elabs = [self.zonk(e) for e in elabs]
        ty = self.zonk(ty)
        if kind == "ctor":
            el = CtorRef(head.name, tuple(elabs), span=m.span)
            er = CtorRef(head.name, tuple(erased)) if prog else None
        elif kind == "ind":
            el, er = IndRef(head.name, tuple(elabs), span=m.span), None
        else:
            el = apply(h_el, *elabs)
            er = apply(h_er, *erased) if prog else None
        return el, er, ty, consumed

    def _stuck_arg(self, ctx: Ctx, a: Term, dom: Term, rel: bool, prog: bool):
        """An argument whose expected type still has unsolved metas: infer its
        type when possible, otherwise check against the partial type."""
        saved = self.snapshot()
        try:
            if prog and rel:
                el, er, aty, c = self.pinfer(ctx, a)
            else:
                (el, aty), er, c = self.infer(ctx, a), (Box() if prog else None), EMPTY
        except TypingError as e:
            if e.code != "unresolved-hole":
                raise
            self.restore(saved)
            return self._arg(ctx, a, dom, rel, prog)
        if not self.unify(aty, dom):
            raise self.mismatch(ctx, dom, aty, a)
        return el, er, c

    def _arg(self, ctx: Ctx, a: Term, dom: Term, rel: bool, prog: bool):
        if prog and rel:
            return self.pcheck(ctx, a, dom)
        el = self.check(ctx, a, dom)
        return el, (Box() if prog else None), EMPTY


def instantiate_under(body: Term, args: list[Term], skip: int) -> Term:
    """Substitute ``args`` for the binders sitting just outside the innermost
    ``skip`` binders of ``body`` (the inner ones stay bound)."""
    k = len(args)
    if k == 0:
        return body

    def on_var(v: Var, c: int) -> Term:
        i = v.idx
        if i < c + skip:
            return v
        j = i - c - skip
        if j < k:
            return shift(args[k - 1 - j], c)
        return Var(i - k, v.name, v.span)

    def on_meta(mt: Meta, c: int) -> Term:
        return Meta(mt.id, mt.offset - k, mt.span)

    return _walk(body, 0, on_var, on_meta)


# -- public entry points -----------------------------------------------------------


def _as_ctx(g) -> Ctx:
    if g is None:
        return Ctx()
    if isinstance(g, Ctx):
        return g
    out = Ctx()
    for name, ty, *rest in g:
        out = out.extend(name, ty, rest[0] if rest else None)
    return out


def infer_logical(g, m: Term, sig: Signature | None = None) -> Term:
    """The type of ``m`` in weak-head normal form."""
    c = Checker(sig)
    ctx = _as_ctx(g)
    _, ty = c.infer(ctx, m)
    return c.whnf(ty)


def check_logical(g, m: Term, a: Term, sig: Signature | None = None) -> Term:
    c = Checker(sig)
    return c.check(_as_ctx(g), m, a)


def infer_sort(g, a: Term, sig: Signature | None = None) -> Sort:
    return Checker(sig).infer_sort(_as_ctx(g), a)


@dataclass
class ProgramResult:
    term: Term
    erased: Term
    consumed: frozenset  # names of the linear entries consumed
    levels: frozenset


def check_program(g, m: Term, a: Term, sig: Signature | None = None, root: bool = True) -> ProgramResult:
    """``Γ; Δ ⊢ m : A``; the context entries carry their program sort.

    At the root every linear entry must be consumed.
    """
    c = Checker(sig)
    ctx = _as_ctx(g)
    c.check_type(ctx, a)
    el, er, used = c.pcheck(ctx, m, a)
    if root:
        missing = ctx.linear_levels() - used
        if missing:
            names = ", ".join(ctx.entries[k].name for k in sorted(missing))
            raise c.error("linear-unused", f"linear variable {names} is never used", ctx, m)
    return ProgramResult(el, er, frozenset(ctx.entries[k].name for k in used), used)


def check_variable(g, x: str, sig: Signature | None = None) -> tuple[Term, frozenset]:
    """Type of program variable ``x`` and the entries its use consumes."""
    ctx = _as_ctx(g)
    names = ctx.names()
    if x not in names:
        raise TypingError("unbound-identifier", f"unbound variable {x}")
    idx = len(names) - 1 - max(i for i, n in enumerate(names) if n == x)
    _, _, ty, used = Checker(sig).pinfer(ctx, Var(idx, name=x))
    return ty, frozenset(ctx.entries[k].name for k in used)


def erase(g, m: Term, a: Term, sig: Signature | None = None) -> Term:
    """The erased form of a program-checked term."""
    return check_program(g, m, a, sig).erased
