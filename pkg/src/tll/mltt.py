"""A model of the logical level in plain Martin-Löf type theory.

The translation forgets sorts: both sorts become one universe ``Type``, the
two function spaces become one Π, and the two pair types become one Σ.
Everything else is translated homomorphically.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    APair,
    App,
    Branch,
    CtorRef,
    DefRef,
    Id,
    IdElim,
    IndRef,
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
    SortTerm,
    Term,
    Var,
    With,
    children,
)


class MTerm:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class MVar(MTerm):
    idx: int


@dataclass(frozen=True, slots=True)
class MType(MTerm):
    pass


@dataclass(frozen=True, slots=True)
class MPi(MTerm):
    dom: MTerm
    cod: MTerm


@dataclass(frozen=True, slots=True)
class MLam(MTerm):
    ann: MTerm
    body: MTerm


@dataclass(frozen=True, slots=True)
class MApp(MTerm):
    fun: MTerm
    arg: MTerm


@dataclass(frozen=True, slots=True)
class MNode(MTerm):
    """Any other former: ``head`` names it, ``binds[i]`` is the number of
    variables bound in ``kids[i]``."""

    head: str
    kids: tuple[MTerm, ...] = ()
    binds: tuple[int, ...] = ()


def _node(head: str, *parts: tuple[MTerm, int]) -> MNode:
    return MNode(head, tuple(k for k, _ in parts), tuple(b for _, b in parts))


def mltt_model(m: Term) -> MTerm:
    go = mltt_model
    match m:
        case Var():
            return MVar(m.idx)
        case SortTerm():
            return MType()
        case Pi0() | Pi1():
            return MPi(go(m.dom), go(m.cod))
        case Lam0() | Lam1():
            return MLam(go(m.ann), go(m.body))
        case App():
            return MApp(go(m.fun), go(m.arg))
        case Sig0() | Sig1():
            return _node("Sigma", (go(m.dom), 0), (go(m.cod), 1))
        case Pair0() | Pair1():
            return _node("pair", (go(m.fst), 0), (go(m.snd), 0))
        case Sig0Elim() | Sig1Elim():
            mot = () if m.motive is None else ((go(m.motive), 1),)
            return _node("split" if mot else "split_", *mot, (go(m.scrut), 0), (go(m.branch), 2))
        case Id():
            return _node("Id", (go(m.ty), 0), (go(m.lhs), 0), (go(m.rhs), 0))
        case Refl():
            return _node("refl", (go(m.m), 0))
        case IdElim():
            return _node("J", (go(m.motive), 2), (go(m.h), 0), (go(m.p), 0))
        case With():
            return _node("Prod", (go(m.lhs), 0), (go(m.rhs), 0))
        case APair():
            return _node("tuple", (go(m.lhs), 0), (go(m.rhs), 0))
        case ProjL():
            return _node("fst", (go(m.m), 0))
        case ProjR():
            return _node("snd", (go(m.m), 0))
        case IndRef():
            return _node(f"ind:{m.name}", *((go(a), 0) for a in m.args))
        case CtorRef():
            return _node(f"ctor:{m.name}", *((go(a), 0) for a in m.args))
        case DefRef():
            return _node(f"def:{m.name}")
        case Match():
            mot = () if m.motive is None else ((go(m.motive), 1),)
            brs = tuple((go(b.body), b.arity) for b in m.branches)
            tags = "|".join(b.ctor for b in m.branches)
            return _node(f"match{'' if mot else '_'}:{tags}", *mot, (go(m.scrut), 0), *brs)
    raise TypeError(f"no model for {type(m).__name__}")


# -- de Bruijn operations on model terms ---------------------------------------------


def _walk(t: MTerm, c: int, on_var) -> MTerm:
    match t:
        case MVar():
            return on_var(t, c)
        case MType():
            return t
        case MPi():
            return MPi(_walk(t.dom, c, on_var), _walk(t.cod, c + 1, on_var))
        case MLam():
            return MLam(_walk(t.ann, c, on_var), _walk(t.body, c + 1, on_var))
        case MApp():
            return MApp(_walk(t.fun, c, on_var), _walk(t.arg, c, on_var))
        case MNode():
            return MNode(t.head, tuple(_walk(k, c + b, on_var) for k, b in zip(t.kids, t.binds)), t.binds)
    raise TypeError(t)


def mshift(t: MTerm, d: int, cutoff: int = 0) -> MTerm:
    return _walk(t, cutoff, lambda v, c: MVar(v.idx + d) if v.idx >= c else v)


def minstantiate(body: MTerm, args: tuple[MTerm, ...]) -> MTerm:
    """Substitute ``args`` (outermost first) for the innermost binders."""
    k = len(args)

    def on_var(v: MVar, c: int) -> MTerm:
        if v.idx < c:
            return v
        j = v.idx - c
        if j < k:
            return mshift(args[k - 1 - j], c)
        return MVar(v.idx - k)

    return _walk(body, 0, on_var)


def msubst(body: MTerm, n: MTerm) -> MTerm:
    return minstantiate(body, (n,))


def _kids(t: MTerm) -> list[MTerm]:
    match t:
        case MPi():
            return [t.dom, t.cod]
        case MLam():
            return [t.ann, t.body]
        case MApp():
            return [t.fun, t.arg]
        case MNode():
            return list(t.kids)
    return []


def _rebuild(t: MTerm, kids: list[MTerm]) -> MTerm:
    match t:
        case MPi():
            return MPi(*kids)
        case MLam():
            return MLam(*kids)
        case MApp():
            return MApp(*kids)
        case MNode():
            return MNode(t.head, tuple(kids), t.binds)
    return t


def mcontract(t: MTerm, sig=None) -> MTerm | None:
    """Contract ``t`` if it is a redex of the collapsed system."""
    match t:
        case MApp(fun=MLam(body=b), arg=a):
            return msubst(b, a)
        case MNode(head="J", kids=(_, h, MNode(head="refl"))):
            return h
        case MNode(head="split" | "split_") if isinstance(t.kids[-2], MNode) and t.kids[-2].head == "pair":
            pair = t.kids[-2]
            return minstantiate(t.kids[-1], pair.kids)
        case MNode(head="fst" | "snd", kids=(MNode(head="tuple", kids=(l, r)),)):
            return l if t.head == "fst" else r
        case MNode() if t.head.startswith("match") and sig is not None:
            scrut_at = 1 if not t.head.startswith("match_") else 0
            s = t.kids[scrut_at]
            if isinstance(s, MNode) and s.head.startswith("ctor:"):
                cname = s.head[5:]
                info = sig.ctors.get(cname)
                ctors = t.head.split(":", 1)[1].split("|")
                if info is not None and cname in ctors:
                    body = t.kids[scrut_at + 1 + ctors.index(cname)]
                    return minstantiate(body, s.kids[info.nparams :])
    return None


def mstep_at(t: MTerm, path: tuple[int, ...], sig=None) -> MTerm | None:
    if not path:
        return mcontract(t, sig)
    kids = _kids(t)
    i = path[0]
    new = mstep_at(kids[i], path[1:], sig)
    if new is None:
        return None
    kids[i] = new
    return _rebuild(t, kids)


def model_path(m: Term, path: tuple[int, ...]) -> tuple[int, ...]:
    """The position in ``mltt_model(m)`` of the subterm at ``path`` in ``m``.

    Source matches keep their branches in ``Branch`` nodes; the model inlines
    the branch bodies, so one path step disappears there.
    """
    out: list[int] = []
    t = m
    rest = list(path)
    while rest:
        i = rest.pop(0)
        kids = [c for _, c, _ in children(t)]
        out.append(i)
        t = kids[i]
        if type(t) is Branch:
            assert rest and rest[0] == 0
            rest.pop(0)
            t = t.body
    return tuple(out)


__all__ = [
    "MApp",
    "MLam",
    "MNode",
    "MPi",
    "MTerm",
    "MType",
    "MVar",
    "minstantiate",
    "mltt_model",
    "model_path",
    "mshift",
    "mstep_at",
    "msubst",
]
