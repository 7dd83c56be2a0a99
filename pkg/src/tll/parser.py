"""Concrete syntax: tokenizer, recursive-descent parser and name resolution.

Parsing happens in two steps.  :class:`Parser` turns text into a small named
surface tree (:class:`S` nodes and declaration records); :class:`Resolver`
turns surface trees into de Bruijn terms against a signature and an optional
sort-variable environment.  Sort-polymorphic declarations are resolved once
per instance, which is why the surface tree is kept around.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .env import Signature, mangle
from .errors import ParseError, Span, TLLError
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
)

KEYWORDS = frozenset(
    {
        "pi0", "pi1", "lam0", "lam1", "sig0", "sig1", "fn", "ln", "Id", "refl",
        "rew", "in", "with", "projL", "projR", "match", "as", "end", "split0",
        "split1", "inductive", "logical", "program", "of", "Type", "U", "L",
    }
)

_TOKEN = re.compile(
    r"(?P<ws>\s+|--[^\n]*)"
    r"|(?P<num>\d+)"
    r"|(?P<sym>=>|->|-o(?![A-Za-z0-9_'])|==|<>|[(){}\[\]<>,.:|*@&+=])"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
)


@dataclass(frozen=True)
class Token:
    kind: str  # num | sym | ident | kw | eof
    text: str
    start: int
    end: int


def tokenize(src: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(
                "syntax-error", f"unexpected character {src[pos]!r}", _span(src, pos, pos + 1)
            )
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, text, m.start(), m.end()))
        pos = m.end()
    out.append(Token("eof", "", len(src), len(src)))
    return out


def _span(src: str, start: int, end: int, file: str | None = None) -> Span:
    line = src.count("\n", 0, start) + 1
    col = start - (src.rfind("\n", 0, start) + 1) + 1
    return Span(start, end, line, col, file)


# -- surface tree --------------------------------------------------------------


@dataclass(frozen=True)
class S:
    kind: str
    args: tuple
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Binder:
    name: str
    relevant: bool
    type: S


@dataclass
class InductiveDecl:
    name: str
    sort_vars: tuple[str, ...]
    params: list[Binder]
    arity: str  # a sort expression
    ctors: list[tuple[str, list[Binder], Span | None]]
    span: Span | None = None


@dataclass
class DefDecl:
    level: str  # "logical" | "program"
    name: str
    sort_vars: tuple[str, ...]
    params: list[Binder]
    type: S
    body: S
    span: Span | None = None


Declaration = InductiveDecl | DefDecl

_BINDER_KWS = {"pi0", "pi1", "lam0", "lam1", "sig0", "sig1"}
_STOP = {"in", "as", "end", "of", "=>", "|", ",", ")", "]", "}", ">", "=", "->", "-o", "==", "+", ".", ":"}


class Parser:
    def __init__(self, src: str, file: str | None = None):
        self.src = src
        self.file = file
        self.toks = tokenize(src)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def span_from(self, start: int) -> Span:
        end = self.toks[max(self.i - 1, 0)].end
        return _span(self.src, start, max(end, start), self.file)

    def error(self, expected: str) -> ParseError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(
            "syntax-error",
            f"expected {expected}, found {found}",
            _span(self.src, t.start, t.end, self.file),
        )

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("sym", "kw")

    def eat(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(repr(text))
        t = self.tok
        self.i += 1
        return t

    def ident(self, allow_wild: bool = True) -> str:
        t = self.tok
        if t.kind != "ident" or (t.text == "_" and not allow_wild):
            raise self.error("an identifier")
        self.i += 1
        return t.text

    def sort_expr(self) -> str:
        t = self.tok
        if t.kind == "kw" and t.text in ("U", "L"):
            self.i += 1
            return t.text
        if t.kind == "ident":
            self.i += 1
            return t.text
        raise self.error("a sort")

    def sort_braces(self) -> str:
        self.expect("{")
        s = self.sort_expr()
        self.expect("}")
        return s

    def sort_args(self) -> tuple[str, ...]:
        self.expect("<")
        items = [self.sort_expr()]
        while self.eat(","):
            items.append(self.sort_expr())
        self.expect(">")
        return tuple(items)

    def adjacent_lt(self) -> bool:
        prev = self.toks[self.i - 1]
        return self.at("<") and prev.end == self.tok.start

    # -- entry points
    def parse_term_only(self) -> S:
        t = self.term()
        if self.tok.kind != "eof":
            raise self.error("end of input")
        return t

    def parse_decls(self) -> list[Declaration]:
        decls = []
        while self.tok.kind != "eof":
            if self.at("inductive"):
                decls.append(self.inductive())
            elif self.at("logical") or self.at("program"):
                decls.append(self.definition())
            else:
                raise self.error("'inductive', 'logical' or 'program'")
        return decls

    # -- declarations
    def sort_vars(self) -> tuple[str, ...]:
        if self.adjacent_lt():
            return self.sort_args()
        return ()

    def binders(self) -> list[Binder]:
        out = []
        while self.at("(") or self.at("{"):
            close = ")" if self.at("(") else "}"
            relevant = close == ")"
            self.i += 1
            names = [self.ident()]
            while self.tok.kind == "ident":
                names.append(self.ident())
            self.expect(":")
            ty = self.term()
            self.expect(close)
            out.extend(Binder(n, relevant, ty) for n in names)
        return out

    def inductive(self) -> InductiveDecl:
        start = self.tok.start
        self.expect("inductive")
        name = self.ident(allow_wild=False)
        svars = self.sort_vars()
        params = self.binders()
        self.expect(":")
        arity = self.arity()
        self.expect("=")
        ctors = []
        while self.at("|"):
            cstart = self.tok.start
            self.i += 1
            cname = self.ident(allow_wild=False)
            fields: list[Binder] = []
            if self.eat("of"):
                fields = self.binders()
                if not fields:
                    raise self.error("constructor fields")
            ctors.append((cname, fields, self.span_from(cstart)))
        return InductiveDecl(name, svars, params, arity, ctors, self.span_from(start))

    def arity(self) -> str:
        if self.at("Type"):
            self.i += 1
            (s,) = self.sort_args()
            return s
        return self.sort_expr()

    def definition(self) -> DefDecl:
        start = self.tok.start
        level = self.tok.text
        self.i += 1
        name = self.ident(allow_wild=False)
        svars = self.sort_vars()
        params = self.binders()
        self.expect(":")
        ty = self.term()
        self.expect("=")
        body = self.term()
        return DefDecl(level, name, svars, params, ty, body, self.span_from(start))

    # -- terms
    def term(self) -> S:
        start = self.tok.start
        t = self.tok
        if t.kind == "kw" and t.text in _BINDER_KWS:
            self.i += 1
            s = self.sort_braces()
            self.expect("(")
            x = self.ident()
            self.expect(":")
            ann = self.term()
            self.expect(")")
            self.expect(".")
            body = self.term()
            return S("bind", (t.text, s, x, ann, body), self.span_from(start))
        if t.kind == "kw" and t.text in ("fn", "ln"):
            self.i += 1
            ann = None
            if self.eat("("):
                x = self.ident()
                self.expect(":")
                ann = self.term()
                self.expect(")")
            else:
                x = self.ident()
            self.expect("=>")
            body = self.term()
            sort = "U" if t.text == "fn" else "L"
            return S("bind", ("lam1", sort, x, ann, body), self.span_from(start))
        if t.kind == "kw" and t.text == "rew":
            self.i += 1
            self.expect("[")
            if self.eat("<>"):
                motive = "box"
            else:
                x = self.ident()
                self.expect(",")
                p = self.ident()
                self.expect("=>")
                motive = (x, p, self.term())
            self.expect("]")
            h = self.term()
            self.expect("in")
            proof = self.term()
            return S("rew", (motive, h, proof), self.span_from(start))
        if t.kind == "kw" and t.text in ("split0", "split1"):
            self.i += 1
            motive = None
            if self.eat("["):
                if self.eat("<>"):
                    motive = "box"
                else:
                    z = self.ident()
                    self.expect("=>")
                    motive = (z, self.term())
                self.expect("]")
            scrut = self.term()
            self.expect("with")
            self.expect("<")
            x = self.ident()
            self.expect(",")
            y = self.ident()
            self.expect(">")
            self.expect("=>")
            body = self.term()
            return S("split", (t.text[-1], motive, scrut, x, y, body), self.span_from(start))
        if t.kind == "kw" and t.text == "match":
            return self.match()
        return self.arrow()

    def match(self) -> S:
        start = self.tok.start
        self.expect("match")
        scrut = self.term()
        motive = None
        if self.eat("as"):
            z = self.ident()
            self.expect("in")
            if self.eat("<>"):
                motive = "box"
            else:
                motive = (z, self.term())
        self.expect("with")
        branches = []
        while self.at("|"):
            bstart = self.tok.start
            self.i += 1
            if self.eat("<"):
                x = self.ident()
                self.expect(",")
                y = self.ident()
                self.expect(">")
                self.expect("=>")
                body = self.term()
                branches.append(("<pair>", (x, y), body, self.span_from(bstart)))
                continue
            cname = self.ident(allow_wild=False)
            names = []
            while self.tok.kind == "ident":
                names.append(self.ident())
            self.expect("=>")
            body = self.term()
            branches.append((cname, tuple(names), body, self.span_from(bstart)))
        self.expect("end")
        return S("match", (scrut, motive, tuple(branches)), self.span_from(start))

    def arrow(self) -> S:
        start = self.tok.start
        lhs = self.eq()
        if self.eat("->"):
            return S("arrow", ("U", lhs, self.term()), self.span_from(start))
        if self.eat("-o"):
            return S("arrow", ("L", lhs, self.term()), self.span_from(start))
        return lhs

    def eq(self) -> S:
        start = self.tok.start
        lhs = self.sum()
        if self.eat("=="):
            return S("eq", (lhs, self.sum()), self.span_from(start))
        return lhs

    def sum(self) -> S:
        start = self.tok.start
        lhs = self.app()
        while self.eat("+"):
            lhs = S("plus", (lhs, self.app()), self.span_from(start))
        return lhs

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "num"):
            return True
        if t.kind == "kw":
            if t.text == "with":
                return self.peek().text == "{"
            return t.text in ("U", "L", "Type", "Id", "refl", "projL", "projR")
        return t.text in ("(", "<>", "*", "@", "<")

    def app(self) -> S:
        start = self.tok.start
        if not self.starts_atom():
            raise self.error("a term")
        f = self.atom()
        while self.starts_atom():
            a = self.atom()
            f = S("app", (f, a), self.span_from(start))
        return f

    def atom(self) -> S:
        start = self.tok.start
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return S("num", (int(t.text),), self.span_from(start))
        if t.kind == "ident":
            self.i += 1
            if t.text == "_":
                return S("hole", (), self.span_from(start))
            sorts = self.sort_args() if self.adjacent_lt() else None
            return S("name", (t.text, sorts), self.span_from(start))
        if t.kind == "kw":
            if t.text in ("U", "L"):
                self.i += 1
                return S("sort", (t.text,), self.span_from(start))
            if t.text == "Type":
                self.i += 1
                (s,) = self.sort_args()
                return S("sort", (s,), self.span_from(start))
            if t.text == "Id":
                self.i += 1
                self.expect("(")
                a = self.term()
                self.expect(",")
                b = self.term()
                self.expect(",")
                c = self.term()
                self.expect(")")
                return S("id", (a, b, c), self.span_from(start))
            if t.text == "refl":
                self.i += 1
                if self.at("(") and self.tok.start == t.end:
                    self.i += 1
                    m = self.term()
                    self.expect(")")
                    return S("refl", (m,), self.span_from(start))
                return S("refl", (None,), self.span_from(start))
            if t.text in ("projL", "projR"):
                self.i += 1
                m = self.atom()
                return S("proj", (t.text[-1], m), self.span_from(start))
            if t.text == "with":
                self.i += 1
                s = self.sort_braces()
                self.expect("(")
                a = self.term()
                self.expect(",")
                b = self.term()
                self.expect(")")
                return S("with", (s, a, b), self.span_from(start))
        if self.eat("("):
            m = self.term()
            self.expect(")")
            return m
        if self.eat("<>"):
            return S("box", (), self.span_from(start))
        if self.eat("*"):
            if self.tok.kind != "num":
                raise self.error("a location number")
            n = int(self.tok.text)
            self.i += 1
            return S("loc", (n,), self.span_from(start))
        if self.eat("@"):
            name = self.ident(allow_wild=False)
            sorts = self.sort_args() if self.adjacent_lt() else None
            return S("ctor_explicit", (name, sorts), self.span_from(start))
        if self.eat("<"):
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(">")
            if self.eat("&"):
                kind = "&"
            elif self.tok.kind == "num" and self.tok.text in ("0", "1"):
                kind = self.tok.text
                self.i += 1
            else:
                raise self.error("'0', '1' or '&' after a pair")
            s = self.sort_braces()
            return S("pair", (kind, s, a, b), self.span_from(start))
        raise self.error("a term")


# -- name resolution ------------------------------------------------------------


@dataclass
class SelfRef:
    """How a definition may refer to itself inside its own body."""

    name: str  # name as written
    target: str | None  # resolved (possibly mangled) name; None forbids the reference


class Resolver:
    def __init__(
        self,
        sig: Signature | None = None,
        sort_env: dict[str, Sort] | None = None,
        self_ref: SelfRef | None = None,
    ):
        self.sig = sig if sig is not None else Signature()
        self.sort_env = sort_env or {}
        self.self_ref = self_ref

    def err(self, code: str, msg: str, node: S) -> TLLError:
        return ParseError(code, msg, node.span)

    def sort(self, s: str, node: S) -> Sort:
        if s == "U":
            return U
        if s == "L":
            return L
        if s in self.sort_env:
            return self.sort_env[s]
        raise self.err("unbound-identifier", f"unbound sort variable {s}", node)

    def opt_sort(self, s: str, node: S) -> Sort | None:
        return None if s == "_" else self.sort(s, node)

    def term(self, node: S, scope: list[str]) -> Term:
        k = node.kind
        a = node.args
        sp = node.span
        if k == "name":
            return self.name(node, scope)
        if k == "ctor_explicit":
            name, sorts = a
            return self.global_ref(node, name, sorts, explicit=True)
        if k == "hole":
            return Hole(span=sp)
        if k == "num":
            return self.numeral(a[0], node)
        if k == "sort":
            return SortTerm(self.sort(a[0], node), span=sp)
        if k == "box":
            return Box(span=sp)
        if k == "loc":
            return Loc(a[0], span=sp)
        if k == "app":
            return self.fold(App(self.term(a[0], scope), self.term(a[1], scope), span=sp))
        if k == "bind":
            kw, s, x, ann, body = a
            t = self.sort(s, node)
            ann_t = Hole(span=sp) if ann is None else self.term(ann, scope)
            body_t = self.term(body, scope + [x])
            cls = {"pi0": Pi0, "pi1": Pi1, "lam0": Lam0, "lam1": Lam1, "sig0": Sig0, "sig1": Sig1}[kw]
            return cls(t, ann_t, body_t, name=x, span=sp)
        if k == "arrow":
            s, lhs, rhs = a
            return Pi1(self.sort(s, node), self.term(lhs, scope), self.term(rhs, scope + ["_"]), name="_", span=sp)
        if k == "id":
            return Id(*(self.term(c, scope) for c in a), span=sp)
        if k == "eq":
            return Id(Hole(span=sp), self.term(a[0], scope), self.term(a[1], scope), span=sp)
        if k == "refl":
            m = Hole(span=sp) if a[0] is None else self.term(a[0], scope)
            return Refl(m, span=sp)
        if k == "rew":
            motive, h, p = a
            if motive == "box":
                mot, names = Box(), ("x", "p")
            else:
                x, pn, body = motive
                mot, names = self.term(body, scope + [x, pn]), (x, pn)
            return IdElim(mot, self.term(h, scope), self.term(p, scope), names=names, span=sp)
        if k == "pair":
            kind, s, m, n = a
            cls = {"0": Pair0, "1": Pair1, "&": APair}[kind]
            return cls(self.sort(s, node), self.term(m, scope), self.term(n, scope), span=sp)
        if k == "split":
            kind, motive, scrut, x, y, body = a
            mot, z = self.motive(motive, scope)
            cls = Sig0Elim if kind == "0" else Sig1Elim
            return cls(mot, self.term(scrut, scope), self.term(body, scope + [x, y]), names=(z, x, y), span=sp)
        if k == "with":
            s, lhs, rhs = a
            return With(self.sort(s, node), self.term(lhs, scope), self.term(rhs, scope), span=sp)
        if k == "proj":
            side, m = a
            return (ProjL if side == "L" else ProjR)(self.term(m, scope), span=sp)
        if k == "plus":
            add = self.global_ref(node, "add", None, explicit=False)
            return App(App(add, self.term(a[0], scope)), self.term(a[1], scope), span=sp)
        if k == "match":
            return self.match(node, scope)
        raise self.err("syntax-error", f"unknown surface form {k}", node)

    def motive(self, motive, scope: list[str]) -> tuple[Term | None, str]:
        if motive is None:
            return None, "z"
        if motive == "box":
            return Box(), "z"
        z, body = motive
        return self.term(body, scope + [z]), z

    def match(self, node: S, scope: list[str]) -> Term:
        scrut, motive, branches = node.args
        mot, z = self.motive(motive, scope)
        scrut_t = self.term(scrut, scope)
        if len(branches) == 1 and branches[0][0] == "<pair>":
            _, (x, y), body, _ = branches[0]
            return Sig1Elim(
                mot, scrut_t, self.term(body, scope + [x, y]), names=(z, x, y), span=node.span
            )
        out = []
        for cname, names, body, bspan in branches:
            ctor = self.ctor_name(cname, node)
            out.append(
                Branch(ctor, len(names), self.term(body, scope + list(names)), names=names, span=bspan)
            )
        return Match(mot, scrut_t, tuple(out), name=z, span=node.span)

    def ctor_name(self, cname: str, node: S) -> str:
        """Branch labels keep their base name when the constructor belongs to
        a scheme; the checker maps them to the scrutinee's instance."""
        kind = self.sig.kind(cname)
        if kind in ("ctor", "scheme-ctor"):
            return cname
        raise self.err("unbound-identifier", f"unknown constructor {cname}", node)

    def numeral(self, n: int, node: S) -> Term:
        if "zero" not in self.sig.ctors or "S" not in self.sig.ctors:
            raise self.err("unbound-identifier", "numerals need the nat prelude (zero, S)", node)
        t: Term = CtorRef("zero", (), span=node.span)
        for _ in range(n):
            t = CtorRef("S", (t,), span=node.span)
        return t

    def name(self, node: S, scope: list[str]) -> Term:
        x, sorts = node.args
        if sorts is None and x in scope:
            i = len(scope) - 1 - scope[::-1].index(x)
            return Var(len(scope) - 1 - i, name=x, span=node.span)
        return self.global_ref(node, x, sorts, explicit=False)

    def global_ref(self, node: S, x: str, sorts, explicit: bool) -> Term:
        sp = node.span
        if self.self_ref is not None and x == self.self_ref.name and sorts is None:
            if self.self_ref.target is None:
                raise self.err(
                    "unbound-identifier",
                    f"{x} is not in scope in its own body (only definitions with parameters may recurse)",
                    node,
                )
            return DefRef(self.self_ref.target, span=sp)
        sig = self.sig
        if sorts is not None:
            sorts_r = tuple(self.opt_sort(s, node) for s in sorts)
            base = x
            sch = sig.schemes.get(base) or sig.schemes.get(sig.scheme_ctors.get(base, ""))
            if sch is None:
                raise self.err("unbound-identifier", f"{x} is not sort-polymorphic", node)
            if len(sorts_r) != len(sch.sort_vars):
                raise self.err("syntax-error", f"{x} expects {len(sch.sort_vars)} sort arguments", node)
            if all(s is not None for s in sorts_r):
                target = mangle(base, sorts_r)
                if self.self_ref is not None and target == self.self_ref.target:
                    return DefRef(target, span=sp)
                if sig.kind(target) is None:
                    raise self.err(
                        "all-instances-pruned", f"instance {target} was pruned or is undefined", node
                    )
                return self.global_ref(node, target, None, explicit)
            return SchemeRef(x, sorts_r, span=sp)
        kind = sig.kind(x)
        if kind == "def":
            return DefRef(x, span=sp)
        if kind == "ind":
            return IndRef(x, (), span=sp)
        if kind == "ctor":
            info = sig.ctors[x]
            if info.nparams == 0 or explicit:
                return CtorRef(x, (), span=sp)
            return CtorRef(x, (), implicit=True, span=sp)
        if kind == "scheme":
            sch = sig.schemes[x]
            return SchemeRef(x, (None,) * len(sch.sort_vars), span=sp)
        if kind == "scheme-ctor":
            sch = sig.schemes[sig.scheme_ctors[x]]
            return SchemeRef(x, (None,) * len(sch.sort_vars), span=sp)
        raise self.err("unbound-identifier", f"unbound identifier {x}", node)

    def fold(self, t: App) -> Term:
        """Fold a saturated inductive/constructor spine into one node."""
        head, args = t, []
        while type(head) is App:
            args.append(head.arg)
            head = head.fun
        args.reverse()
        if type(head) is IndRef:
            info = self.sig.inductives.get(head.name)
            full = head.args + tuple(args)
            if info is not None and len(full) == len(info.params):
                return IndRef(head.name, full, span=t.span)
        elif type(head) is CtorRef:
            info = self.sig.ctors.get(head.name)
            full = head.args + tuple(args)
            if info is not None:
                want = len(info.fields) if head.implicit else info.arity
                if len(full) == want:
                    return CtorRef(head.name, full, implicit=head.implicit, span=t.span)
        return t


def parse_surface(src: str, file: str | None = None) -> S:
    return Parser(src, file).parse_term_only()


def parse_term(
    src: str,
    sig: Signature | None = None,
    scope: list[str] | None = None,
    file: str | None = None,
) -> Term:
    """Parse and resolve a single term; free names are looked up in ``sig``."""
    return Resolver(sig).term(parse_surface(src, file), list(scope or []))


def parse_declarations(src: str, file: str | None = None) -> list[Declaration]:
    return Parser(src, file).parse_decls()


def parse(src: str, sig: Signature | None = None, file: str | None = None):
    """A term, or a declaration list when the text starts with a keyword."""
    toks = tokenize(src)
    if toks[0].kind == "kw" and toks[0].text in ("inductive", "logical", "program"):
        return parse_declarations(src, file)
    return parse_term(src, sig, file=file)
