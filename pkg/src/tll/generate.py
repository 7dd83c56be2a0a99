"""Random well-typed programs, built by choosing a typing derivation first.

Generation threads the set of linear variables a subterm has to consume, so
every rule splits that set the way the declarative rules split ``Δ``. All
generated types are closed, which keeps variable types stable under binders.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .checker import check_program
from .env import Signature
from .errors import TLLError
from .syntax import (
    APair,
    App,
    Branch,
    CtorRef,
    Id,
    IdElim,
    IndRef,
    L,
    Lam0,
    Lam1,
    Match,
    Pair0,
    Pair1,
    Pi0,
    Pi1,
    ProjL,
    ProjR,
    Refl,
    Sig0,
    Sig0Elim,
    Sig1,
    Sig1Elim,
    Sort,
    Term,
    U,
    Var,
    With,
    children,
    map_children,
    size,
)

NAT = IndRef("nat")
ZERO = CtorRef("zero")


def numeral(n: int) -> Term:
    t: Term = ZERO
    for _ in range(n):
        t = CtorRef("S", (t,))
    return t


def fn(t: Sort, a: Term, b: Term) -> Term:
    return Pi1(t, a, b, name="_")


def sort_of(a: Term) -> Sort:
    return U if a == NAT else a.t


def sub_nat(t: Sort) -> Term:
    """``sig0{t}(x:nat). Id(nat, x, x)``."""
    return Sig0(t, NAT, Id(NAT, Var(0), Var(0)), name="x")


@dataclass(frozen=True)
class Entry:
    name: str
    type: Term
    psort: Sort | None  # None: logical only


@dataclass
class GenTerm:
    seed: int
    depth: int
    term: Term
    type: Term
    ctx: list[Entry] = field(default_factory=list)
    # id of a generated subterm -> (subterm, ctx, must, type, inf), for shrinking
    origins: dict = field(default_factory=dict, repr=False, compare=False)

    def gamma(self) -> list[tuple[str, Term, Sort | None]]:
        return [(e.name, e.type, e.psort) for e in self.ctx]


class Generator:
    def __init__(self, rng: random.Random, sloppy: bool = False):
        self.rng = rng
        # sloppy generation ignores the ▷ U side conditions; the result is
        # then only a candidate, used to probe the checker
        self.sloppy = sloppy
        self.names = 0
        self.origins: dict[int, tuple] = {}

    def fresh(self, base: str) -> str:
        self.names += 1
        return f"{base}{self.names}"

    # -- types ----------------------------------------------------------------

    def rtype(self, depth: int) -> Term:
        r = self.rng
        if depth <= 0 or r.random() < 0.3:
            return NAT
        t = r.choice((U, L))
        k = r.randrange(6)
        if k <= 1:
            return fn(t, self.rtype(depth - 1), self.rtype(depth - 1))
        if k == 2:
            return Pi0(t, NAT, self.rtype(depth - 1), name="_")
        if k == 3:
            a, b = self.rtype(depth - 1), self.rtype(depth - 1)
            if t is U and (sort_of(a) is L or sort_of(b) is L):
                t = L
            return Sig1(t, a, b, name="_")
        if k == 4:
            return sub_nat(t)
        return With(t, self.rtype(depth - 1), self.rtype(depth - 1))

    # -- helpers --------------------------------------------------------------------

    def var(self, ctx: list[Entry], level: int) -> Var:
        return Var(len(ctx) - 1 - level, name=ctx[level].name)

    def split(self, must: frozenset) -> tuple[frozenset, frozenset]:
        left = frozenset(x for x in must if self.rng.random() < 0.5)
        return left, must - left

    def tag(self, must: frozenset) -> Sort:
        if must and not self.sloppy:
            return L
        return self.rng.choice((U, L))

    def bind(self, ctx: list[Entry], must: frozenset, base: str, ty: Term, relevant: bool = True):
        psort = sort_of(ty) if relevant else None
        inner = ctx + [Entry(self.fresh(base), ty, psort)]
        if psort is L:
            must = must | {len(ctx)}
        return inner, must

    def u_vars(self, ctx: list[Entry], ty: Term) -> list[int]:
        return [k for k, e in enumerate(ctx) if e.psort is U and e.type == ty]

    # -- leaves: the shortest derivation consuming exactly ``must`` ------------------
    #
    # ``inf`` marks positions whose type the checker infers rather than checks;
    # subset pairs there get an ascription, since their inferred type would
    # not be the dependent one we have in mind.

    def ascribe(self, t: Term, a: Term, inf: bool) -> Term:
        if inf and type(t) is Pair0:
            return IdElim(a, t, Refl(ZERO), names=("x", "p"))
        return t

    def finish(self, ctx: list[Entry], must: frozenset, a: Term, inf: bool = False) -> Term:
        if must:
            v = self.rng.choice(sorted(must))
            return self.elim(ctx, self.var(ctx, v), ctx[v].type, must - {v}, a, inf)
        return self.canon(ctx, a, inf)

    def canon(self, ctx: list[Entry], a: Term, inf: bool = False) -> Term:
        r = self.rng
        vs = self.u_vars(ctx, a)
        if vs and r.random() < 0.5:
            return self.var(ctx, r.choice(vs))
        match a:
            case IndRef():
                return numeral(r.randrange(3))
            case Pi1():
                inner, must = self.bind(ctx, frozenset(), "x", a.dom)
                return Lam1(a.t, a.dom, self.finish(inner, must, a.cod, inf), name=inner[-1].name)
            case Pi0():
                inner, _ = self.bind(ctx, frozenset(), "n", a.dom, relevant=False)
                return Lam0(a.t, a.dom, self.finish(inner, frozenset(), a.cod, inf), name=inner[-1].name)
            case Sig1():
                return Pair1(a.t, self.canon(ctx, a.dom, inf), self.canon(ctx, a.cod, inf))
            case Sig0():
                n = self.canon(ctx, NAT)
                return self.ascribe(Pair0(a.t, n, Refl(n)), a, inf)
            case With():
                return APair(a.t, self.canon(ctx, a.lhs, inf), self.canon(ctx, a.rhs, inf))
        raise ValueError(a)

    def elim(self, ctx: list[Entry], e: Term, b: Term, rest: frozenset, a: Term, inf: bool = False) -> Term:
        """Consume ``e : b`` and the variables in ``rest`` to build an ``a``."""
        if b == a and not rest:
            return e
        match b:
            case Pi1():
                return self.elim(ctx, App(e, self.canon(ctx, b.dom)), b.cod, rest, a, inf)
            case Pi0():
                return self.elim(ctx, App(e, numeral(self.rng.randrange(2))), b.cod, rest, a, inf)
            case Sig1() | Sig0():
                relevant_snd = type(b) is Sig1
                inner, must = self.bind(ctx, rest, "x", b.dom)
                inner, must = self.bind(inner, must, "y", b.cod, relevant=relevant_snd)
                body = self.finish(inner, must, a, inf)
                elim = Sig1Elim if relevant_snd else Sig0Elim
                return elim(None, e, body, names=("z", inner[-2].name, inner[-1].name))
            case With():
                if self.rng.random() < 0.5:
                    return self.elim(ctx, ProjL(e), b.lhs, rest, a, inf)
                return self.elim(ctx, ProjR(e), b.rhs, rest, a, inf)
            case IndRef():
                # a number: bind it and carry on; it needs no consumption
                inner, must = self.bind(ctx, rest, "k", b)
                body = self.finish(inner, must, a, inf)
                return App(Lam1(self.tag(rest), b, body, name=inner[-1].name), e)
        raise ValueError(b)

    # -- the random derivation ------------------------------------------------------------

    def gen(self, ctx: list[Entry], must: frozenset, a: Term, depth: int, inf: bool = False) -> Term:
        t = self._gen(ctx, must, a, depth, inf)
        self.origins[id(t)] = (t, ctx, must, a, inf)
        return t

    def _gen(self, ctx: list[Entry], must: frozenset, a: Term, depth: int, inf: bool) -> Term:
        if depth <= 0:
            return self.finish(ctx, must, a, inf)
        r = self.rng
        rules = ["intro", "intro", "let", "beta0", "match", "rew", "split", "proj", "use", "call"]
        r.shuffle(rules)
        for rule in rules:
            t = getattr(self, f"r_{rule}")(ctx, must, a, depth - 1, inf)
            if t is not None:
                return t
        return self.finish(ctx, must, a, inf)

    def r_intro(self, ctx, must, a, d, inf=False):
        r = self.rng
        match a:
            case IndRef():
                if not must and r.random() < 0.3:
                    return ZERO
                return CtorRef("S", (self.gen(ctx, must, NAT, d),))
            case Pi1():
                if a.t is U and must and not self.sloppy:
                    return None
                inner, m2 = self.bind(ctx, must, "x", a.dom)
                return Lam1(a.t, a.dom, self.gen(inner, m2, a.cod, d, inf), name=inner[-1].name)
            case Pi0():
                if a.t is U and must and not self.sloppy:
                    return None
                inner, _ = self.bind(ctx, must, "n", a.dom, relevant=False)
                return Lam0(a.t, a.dom, self.gen(inner, must, a.cod, d, inf), name=inner[-1].name)
            case Sig1():
                m1, m2 = self.split(must)
                return Pair1(a.t, self.gen(ctx, m1, a.dom, d, inf), self.gen(ctx, m2, a.cod, d, inf))
            case Sig0():
                n = self.gen(ctx, must, NAT, d)
                return self.ascribe(Pair0(a.t, n, Refl(n)), a, inf)
            case With():
                if a.t is U and must and not self.sloppy:
                    return None
                return APair(a.t, self.gen(ctx, must, a.lhs, d, inf), self.gen(ctx, must, a.rhs, d, inf))
        return None

    def r_let(self, ctx, must, a, d, inf=False):
        b = self.rtype(2)
        m1, m2 = self.split(must)
        inner, body_must = self.bind(ctx, m2, "y", b)
        body = self.gen(inner, body_must, a, d, inf)
        fun = Lam1(self.tag(m2), b, body, name=inner[-1].name)
        return App(fun, self.gen(ctx, m1, b, d))

    def r_beta0(self, ctx, must, a, d, inf=False):
        inner, _ = self.bind(ctx, must, "n", NAT, relevant=False)
        fun = Lam0(self.tag(must), NAT, self.gen(inner, must, a, d, inf), name=inner[-1].name)
        return App(fun, numeral(self.rng.randrange(3)))

    def r_match(self, ctx, must, a, d, inf=False):
        m1, m2 = self.split(must)
        scrut = self.gen(ctx, m1, NAT, d, True)
        zero = self.gen(ctx, m2, a, d, inf)
        inner, m3 = self.bind(ctx, m2, "k", NAT)
        succ = self.gen(inner, m3, a, d, inf)
        return Match(
            None,
            scrut,
            (Branch("zero", 0, zero), Branch("S", 1, succ, names=(inner[-1].name,))),
        )

    def r_rew(self, ctx, must, a, d, inf=False):
        h = self.gen(ctx, must, a, d)
        n = numeral(self.rng.randrange(2))
        # the motive ignores both of its variables (types here are closed)
        return IdElim(a, h, Refl(n), names=("x", "p"))

    def r_split(self, ctx, must, a, d, inf=False):
        r = self.rng
        m1, m2 = self.split(must)
        if r.random() < 0.3:
            b = sub_nat(self.tag(m1))
        else:
            x, y = self.rtype(1), self.rtype(1)
            t = self.tag(m1)
            if t is U and (sort_of(x) is L or sort_of(y) is L):
                t = L
            b = Sig1(t, x, y, name="_")
        scrut = self.gen(ctx, m1, b, d, True)
        relevant_snd = type(b) is Sig1
        inner, mb = self.bind(ctx, m2, "x", b.dom)
        inner, mb = self.bind(inner, mb, "y", b.cod, relevant=relevant_snd)
        body = self.gen(inner, mb, a, d, inf)
        elim = Sig1Elim if relevant_snd else Sig0Elim
        return elim(None, scrut, body, names=("z", inner[-2].name, inner[-1].name))

    def r_proj(self, ctx, must, a, d, inf=False):
        other = self.rtype(1)
        t = self.tag(must)
        if self.rng.random() < 0.5:
            return ProjL(self.gen(ctx, must, With(t, a, other), d, True))
        return ProjR(self.gen(ctx, must, With(t, other, a), d, True))

    def r_use(self, ctx, must, a, d, inf=False):
        if must:
            return self.finish(ctx, must, a, inf)
        vs = self.u_vars(ctx, a)
        return self.var(ctx, self.rng.choice(vs)) if vs else None

    def r_call(self, ctx, must, a, d, inf=False):
        fs = [k for k, e in enumerate(ctx) if e.psort is U and type(e.type) is Pi1 and e.type.cod == a]
        if not fs:
            return None
        f = self.rng.choice(fs)
        return App(self.var(ctx, f), self.gen(ctx, must, ctx[f].type.dom, d))


def generate(seed: int, depth: int = 6) -> GenTerm:
    """A closed program and its type, determined by ``seed``."""
    rng = random.Random(seed)
    g = Generator(rng)
    a = g.rtype(min(depth, 3))
    return GenTerm(seed, depth, g.gen([], frozenset(), a, depth), a, [], g.origins)


def generate_open(seed: int, depth: int = 3, sloppy: bool = False) -> GenTerm:
    """A program over a random context of up to two program variables,
    consuming every linear one."""
    rng = random.Random(seed)
    g = Generator(rng, sloppy)
    ctx: list[Entry] = []
    for _ in range(rng.randrange(3)):
        ty = g.rtype(1)
        ctx.append(Entry(g.fresh("v"), ty, sort_of(ty)))
    must = frozenset(k for k, e in enumerate(ctx) if e.psort is L)
    a = g.rtype(2)
    return GenTerm(seed, depth, g.gen(ctx, must, a, depth), a, ctx, g.origins)


def generate_value(seed: int, depth: int = 3) -> GenTerm:
    """A candidate value of a non-linear type over a context with linear
    variables, generated without the ▷ U side conditions."""
    rng = random.Random(seed)
    g = Generator(rng, sloppy=True)
    ctx = [Entry(g.fresh("v"), fn(L, NAT, NAT), L)]
    if rng.random() < 0.5:
        ctx.append(Entry(g.fresh("u"), NAT, U))
    must = frozenset({0})
    while True:
        a = g.rtype(2)
        if sort_of(a) is U and a != NAT:
            break
    t = g.r_intro(ctx, must, a, depth)
    return GenTerm(seed, depth, t, a, ctx, g.origins)


def checks(gt: GenTerm, sig: Signature) -> bool:
    try:
        check_program(gt.gamma(), gt.term, gt.type, sig)
        return True
    except TLLError:
        return False


# -- shrinking -------------------------------------------------------------------------


def _positions(t: Term, path=()):
    yield path
    for i, (_, c, _) in enumerate(children(t)):
        yield from _positions(c, path + (i,))


def _replace(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    i, rest = path[0], path[1:]
    k = iter(range(1 << 30))
    return map_children(t, lambda c, _b: _replace(c, rest, new) if next(k) == i else c)


def _at(t: Term, path) -> Term:
    for i in path:
        t = [c for _, c, _ in children(t)][i]
    return t


def _candidates(gt: GenTerm):
    """Smaller terms, most promising first: a generated subterm replaced by
    the shortest derivation of its judgment, then a subterm replaced by one
    of its own children or by 0."""
    t = gt.term
    for path in _positions(t):
        sub = _at(t, path)
        origin = gt.origins.get(id(sub))
        if origin is not None and origin[0] is sub and size(sub) > 1:
            _, ctx, must, a, inf = origin
            yield _replace(t, path, Generator(random.Random(0)).finish(ctx, must, a, inf))
    for path in _positions(t):
        sub = _at(t, path)
        if type(sub) is Branch:
            continue
        for _, c, binders in children(sub):
            if binders == 0 and type(c) is not Branch:
                yield _replace(t, path, c)
        if sub != ZERO and type(sub) is not Var:
            yield _replace(t, path, ZERO)


def shrink(gt: GenTerm, sig: Signature, fails, budget: int = 2000) -> GenTerm:
    """Greedily shrink ``gt`` while it stays well typed and ``fails`` holds."""
    best = gt
    tried = 0
    improved = True
    while improved and tried < budget:
        improved = False
        for cand in _candidates(best):
            tried += 1
            if tried >= budget:
                break
            if size(cand) >= size(best.term):
                continue
            new = GenTerm(gt.seed, gt.depth, cand, gt.type, gt.ctx, gt.origins)
            if checks(new, sig) and fails(new):
                best = new
                improved = True
                break
    return best


__all__ = [
    "Entry",
    "GenTerm",
    "Generator",
    "NAT",
    "checks",
    "fn",
    "generate",
    "generate_open",
    "generate_value",
    "numeral",
    "shrink",
    "sort_of",
    "sub_nat",
]
