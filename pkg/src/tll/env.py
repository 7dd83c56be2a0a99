"""The global signature: inductive types, constructors, definitions, schemes."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TLLError
from .syntax import Sort, Term


@dataclass(frozen=True)
class Field:
    name: str
    relevant: bool
    type: Term  # under params + earlier fields


@dataclass
class InductiveInfo:
    name: str
    params: tuple[tuple[str, Term], ...]  # each type under earlier params
    arity: Sort
    ctors: tuple[str, ...] = ()
    pruned: tuple[tuple[str, str], ...] = ()  # (constructor, reason)
    scheme: str | None = None
    sorts: tuple[Sort, ...] = ()


@dataclass
class CtorInfo:
    name: str
    ind: str
    index: int
    nparams: int
    fields: tuple[Field, ...]

    @property
    def arity(self) -> int:
        return self.nparams + len(self.fields)


@dataclass
class DefInfo:
    name: str
    level: str  # "logical" | "program"
    type: Term
    body: Term | None = None  # None while the body is being checked
    erased: Term | None = None
    rec_arg: int | None = None
    recursive: bool = False
    scheme: str | None = None
    sorts: tuple[Sort, ...] = ()


@dataclass
class SchemeInfo:
    name: str
    kind: str  # "inductive" | "logical" | "program"
    sort_vars: tuple[str, ...]
    instances: dict[tuple[Sort, ...], str | None] = field(default_factory=dict)
    reasons: dict[tuple[Sort, ...], str] = field(default_factory=dict)
    ctor_names: tuple[str, ...] = ()  # base constructor names of an inductive scheme

    def kept(self) -> list[tuple[tuple[Sort, ...], str]]:
        return [(k, v) for k, v in self.instances.items() if v is not None]


def mangle(name: str, sorts: tuple[Sort, ...]) -> str:
    if not sorts:
        return name
    return f"{name}<{','.join(s.value for s in sorts)}>"


class Signature:
    def __init__(self) -> None:
        self.inductives: dict[str, InductiveInfo] = {}
        self.ctors: dict[str, CtorInfo] = {}
        self.defs: dict[str, DefInfo] = {}
        self.schemes: dict[str, SchemeInfo] = {}
        # base constructor name -> owning inductive scheme
        self.scheme_ctors: dict[str, str] = {}
        self.order: list[str] = []
        self.warnings: list[str] = []

    def copy(self) -> Signature:
        new = Signature()
        new.inductives = dict(self.inductives)
        new.ctors = dict(self.ctors)
        new.defs = dict(self.defs)
        new.schemes = dict(self.schemes)
        new.scheme_ctors = dict(self.scheme_ctors)
        new.order = list(self.order)
        new.warnings = list(self.warnings)
        return new

    def kind(self, name: str) -> str | None:
        if name in self.defs:
            return "def"
        if name in self.inductives:
            return "ind"
        if name in self.ctors:
            return "ctor"
        if name in self.schemes:
            return "scheme"
        if name in self.scheme_ctors:
            return "scheme-ctor"
        return None

    def check_fresh(self, name: str) -> None:
        if self.kind(name) is not None:
            raise TLLError("duplicate-name", f"{name} is already declared")

    def ctor(self, name: str) -> CtorInfo:
        return self.ctors[name]

    def export(self) -> list[dict]:
        """One record per declaration, for tooling."""
        from .pretty import pretty

        records = []
        for name in self.order:
            if name in self.defs:
                d = self.defs[name]
                records.append(
                    {
                        "name": name,
                        "level": d.level,
                        "type": pretty(d.type, sig=self),
                        "sorts": [s.value for s in d.sorts],
                    }
                )
            elif name in self.inductives:
                ind = self.inductives[name]
                records.append(
                    {
                        "name": name,
                        "level": "inductive",
                        "type": ind.arity.value,
                        "sorts": [s.value for s in ind.sorts],
                        "ctors": list(ind.ctors),
                        "pruned": [c for c, _ in ind.pruned],
                    }
                )
            elif name in self.schemes:
                sch = self.schemes[name]
                records.append(
                    {
                        "name": name,
                        "level": f"scheme:{sch.kind}",
                        "type": None,
                        "sorts": list(sch.sort_vars),
                        "instances": {
                            mangle(name, k): v for k, v in sch.instances.items()
                        },
                    }
                )
        return records
