"""Logical and program contexts, context merge and sort constraints."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .errors import TLLError, TypingError
from .syntax import L, U, Sort, Term, shift


@dataclass(frozen=True)
class Entry:
    """One binder of the combined judgment ``Γ; Δ``.

    ``psort`` is ``None`` when the variable lives in ``Γ`` only (bound by a
    λ⁰, a brace field or a proof component); otherwise the variable is also
    in ``Δ`` with that sort.
    """

    name: str
    type: Term
    psort: Sort | None = None


class Ctx:
    """``Γ`` with its ``Δ`` annotations, indexed by de Bruijn index."""

    __slots__ = ("entries",)

    def __init__(self, entries: tuple[Entry, ...] = ()):
        self.entries = entries

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        return f"Ctx({list(self.entries)!r})"

    def extend(self, name: str, ty: Term, psort: Sort | None = None) -> Ctx:
        return Ctx(self.entries + (Entry(name, ty, psort),))

    def logical(self) -> Ctx:
        """Forget every program annotation (``Γ`` alone)."""
        return Ctx(tuple(Entry(e.name, e.type, None) for e in self.entries))

    def entry(self, i: int) -> Entry:
        if i < 0 or i >= len(self.entries):
            raise TypingError("unbound-identifier", f"unbound variable #{i}")
        return self.entries[len(self.entries) - 1 - i]

    def type_of(self, i: int) -> Term:
        return shift(self.entry(i).type, i + 1)

    def level(self, i: int) -> int:
        return len(self.entries) - 1 - i

    def index(self, level: int) -> int:
        return len(self.entries) - 1 - level

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def linear_levels(self) -> frozenset[int]:
        return frozenset(k for k, e in enumerate(self.entries) if e.psort is L)

    def describe(self) -> str:
        parts = []
        for e in self.entries:
            if e.psort is None:
                parts.append(f"{e.name}")
            else:
                parts.append(f"{e.name}:{e.psort}")
        return "[" + ", ".join(parts) + "]"


# -- program contexts as plain values (declarative operations) ---------------


@dataclass(frozen=True)
class PEntry:
    """A triple ``x :s A`` of a program context; ``pos`` is its position in
    the underlying logical context, used to keep merged contexts ordered."""

    name: str
    sort: Sort
    type: Term
    pos: int | None = None


ProgramCtx = tuple[PEntry, ...]


def merge(d1: ProgramCtx, d2: ProgramCtx) -> ProgramCtx:
    """``Δ1 ⋒ Δ2``: contract shared U entries, keep L entries exclusive."""
    by_name: dict[str, PEntry] = {}
    order: list[str] = []
    for e in d1:
        if e.name in by_name:
            raise TLLError("duplicate-name", f"{e.name} occurs twice in one context")
        by_name[e.name] = e
        order.append(e.name)
    seen2: set[str] = set()
    for e in d2:
        if e.name in seen2:
            raise TLLError("duplicate-name", f"{e.name} occurs twice in one context")
        seen2.add(e.name)
        prev = by_name.get(e.name)
        if prev is None:
            by_name[e.name] = e
            order.append(e.name)
            continue
        if prev.sort is not e.sort or prev.type != e.type:
            raise TLLError(
                "undefined-merge", f"{e.name} has different annotations on each side"
            )
        if e.sort is L:
            raise TLLError(
                "undefined-merge", f"linear entry {e.name} occurs on both sides"
            )
    entries = [by_name[n] for n in order]
    if all(e.pos is not None for e in entries):
        entries.sort(key=lambda e: e.pos)
    return tuple(entries)


def constrain(d: ProgramCtx, s: Sort) -> bool:
    """``Δ ▷ s``."""
    return s is L or all(e.sort is U for e in d)


def restrict_others(d: ProgramCtx, x: str) -> bool:
    """``Δ/{x} ▷ U``: every entry other than ``x`` is non-linear."""
    if not any(e.name == x for e in d):
        raise TLLError("name-not-found", f"{x} is not in the program context")
    return all(e.sort is U for e in d if e.name != x)


def splits(d: ProgramCtx) -> Iterator[tuple[ProgramCtx, ProgramCtx]]:
    """All ``(Δ1, Δ2)`` with ``Δ1 ⋒ Δ2 = Δ`` under the declarative rules:
    U entries go to both sides, each L entry to exactly one side."""
    linear = [i for i, e in enumerate(d) if e.sort is L]
    for choice in itertools.product((0, 1), repeat=len(linear)):
        side = dict(zip(linear, choice))
        left = tuple(e for i, e in enumerate(d) if e.sort is U or side[i] == 0)
        right = tuple(e for i, e in enumerate(d) if e.sort is U or side[i] == 1)
        yield left, right
