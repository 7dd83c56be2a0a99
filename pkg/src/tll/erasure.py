"""Erasure of irrelevant content.

The translation itself is computed by the program checker in the same pass
as typing (it is type directed); this module exposes it and a recogniser for
its image.
"""

from __future__ import annotations

from .checker import erase as _erase
from .env import Signature
from .syntax import (
    Box,
    CtorRef,
    Hole,
    Id,
    IdElim,
    IndRef,
    Lam0,
    Lam1,
    Match,
    Meta,
    Pair0,
    Pi0,
    Pi1,
    Refl,
    SchemeRef,
    Sig0,
    Sig0Elim,
    Sig1,
    Sig1Elim,
    SortTerm,
    Term,
    With,
    subterms,
)

_TYPE_FORMERS = (SortTerm, Pi0, Pi1, Sig0, Sig1, With, Id, Refl, IndRef, Hole, Meta, SchemeRef)


def erase(g, m: Term, a: Term, sig: Signature | None = None) -> Term:
    """The erased form of program ``m`` at type ``a`` in context ``g``."""
    return _erase(g, m, a, sig)


def is_erased(m: Term, sig: Signature | None = None) -> bool:
    """Whether ``m`` has the shape of an erased term.

    Without a signature, constructor arguments are not inspected for their
    relevance.
    """
    for u in subterms(m):
        match u:
            case _ if isinstance(u, _TYPE_FORMERS):
                return False
            case Lam0() | Lam1() if type(u.ann) is not Box:
                return False
            case Pair0() if type(u.snd) is not Box:
                return False
            case IdElim() if type(u.motive) is not Box or type(u.p) is not Box:
                return False
            case Sig0Elim() | Sig1Elim() | Match() if type(u.motive) is not Box:
                return False
            case CtorRef() if sig is not None and u.name in sig.ctors:
                info = sig.ctors[u.name]
                for i, a in enumerate(u.args):
                    relevant = i >= info.nparams and info.fields[i - info.nparams].relevant
                    if not relevant and type(a) is not Box:
                        return False
    return True
