"""Top-level declarations: inductive types, definitions and sort schemes."""

from __future__ import annotations

import itertools
from importlib import resources
from pathlib import Path

from .checker import Checker
from .contexts import Ctx
from .env import (
    CtorInfo,
    DefInfo,
    Field,
    InductiveInfo,
    SchemeInfo,
    Signature,
    mangle,
)
from .errors import TLLError, TypingError
from .parser import DefDecl, InductiveDecl, Resolver, SelfRef, parse_declarations
from .syntax import (
    App,
    Box,
    DefRef,
    IndRef,
    L,
    Lam0,
    Lam1,
    Match,
    Pi0,
    Pi1,
    Sort,
    Term,
    U,
    Var,
    children,
    spine,
    subterms,
)


def _mentions(t: Term, name: str) -> bool:
    return any(type(u) is IndRef and u.name == name for u in subterms(t))


def strictly_positive(t: Term, name: str) -> bool:
    if not _mentions(t, name):
        return True
    if type(t) is IndRef and t.name == name:
        return not any(_mentions(a, name) for a in t.args)
    if type(t) in (Pi0, Pi1):
        return not _mentions(t.dom, name) and strictly_positive(t.cod, name)
    return False


def check_inductive(
    sig: Signature,
    decl: InductiveDecl,
    sort_env: dict[str, Sort] | None = None,
    target: str | None = None,
    scheme: str | None = None,
    sorts: tuple[Sort, ...] = (),
    prune: bool = False,
) -> Signature:
    """Validate ``decl`` and return the extended signature.

    With ``prune`` set, constructors breaking the non-linear field rule are
    dropped (recorded in ``pruned``) instead of rejected.
    """
    sig = sig.copy()
    target = target or decl.name
    sig.check_fresh(target)
    res = Resolver(sig, sort_env)
    chk = Checker(sig)
    ctx = Ctx()
    params = []
    for b in decl.params:
        ty, _ = chk.check_type(ctx, res.term(b.type, ctx.names()))
        params.append((b.name, ty))
        ctx = ctx.extend(b.name, ty)
    arity = res.sort(decl.arity, decl)
    info = InductiveInfo(target, tuple(params), arity, scheme=scheme, sorts=sorts)
    sig.inductives[target] = info
    ctors: list[str] = []
    pruned: list[tuple[str, str]] = []
    for cname, fields, span in decl.ctors:
        cn = mangle(cname, sorts) if scheme else cname
        if cn in ctors or (sig.kind(cn) is not None):
            raise TypingError("duplicate-name", f"{cn} is already declared", span)
        fctx = ctx
        out = []
        try:
            for f in fields:
                ft, s = chk.check_type(fctx, res.term(f.type, fctx.names()))
                if not strictly_positive(ft, target):
                    raise TypingError(
                        "negative-occurrence",
                        f"{target} occurs in a non-strictly-positive position in field {f.name} of {cname}",
                        f.type.span,
                    )
                if f.relevant and arity is U and s is L:
                    raise TypingError(
                        "nonlinear-field-in-U-type",
                        f"field {f.name} of {cname} is linear but {target} is non-linear",
                        f.type.span,
                    )
                out.append(Field(f.name, f.relevant, ft))
                fctx = fctx.extend(f.name, ft)
        except TLLError as e:
            if prune and e.code == "nonlinear-field-in-U-type":
                pruned.append((cn, e.message))
                continue
            if e.span is None:
                e.span = span
            raise
        sig.ctors[cn] = CtorInfo(cn, target, len(ctors), len(params), tuple(out))
        ctors.append(cn)
    info.ctors = tuple(ctors)
    info.pruned = tuple(pruned)
    sig.order.append(target)
    return sig


def _smaller_calls(body: Term, target: str, nparams: int) -> set[int] | None:
    """Argument positions on which every recursive call is structurally
    decreasing; None if there are no recursive calls."""
    found: list[set[int]] = []

    def go(t: Term, depth: int, smaller: dict[int, set[int]]) -> None:
        head, args = spine(t) if type(t) is App else (t, [])
        if type(head) is DefRef and head.name == target:
            ok = set()
            for k, a in enumerate(args):
                if type(a) is Var and a.idx < depth:
                    lvl = depth - 1 - a.idx
                    if k in smaller.get(lvl, ()):
                        ok.add(k)
            found.append(ok)
            for a in args:
                go(a, depth, smaller)
            return
        if type(t) is App:
            go(head, depth, smaller)
            for a in args:
                go(a, depth, smaller)
            return
        if type(t) is Match:
            origin: set[int] = set()
            s = t.scrut
            if type(s) is Var and s.idx < depth:
                lvl = depth - 1 - s.idx
                if lvl < nparams:
                    origin.add(lvl)
                origin |= smaller.get(lvl, set())
            if t.motive is not None:
                go(t.motive, depth + 1, smaller)
            go(s, depth, smaller)
            for br in t.branches:
                inner = dict(smaller)
                for j in range(br.arity):
                    inner[depth + j] = origin
                go(br.body, depth + br.arity, inner)
            return
        for _, c, k in children(t):
            go(c, depth + k, smaller)

    go(body, nparams, {})
    if not found:
        return None
    return set.intersection(*found) if found else set()


def check_definition(
    sig: Signature,
    decl: DefDecl,
    sort_env: dict[str, Sort] | None = None,
    target: str | None = None,
    scheme: str | None = None,
    sorts: tuple[Sort, ...] = (),
) -> Signature:
    sig = sig.copy()
    target = target or decl.name
    sig.check_fresh(target)
    self_ref = SelfRef(decl.name, target if decl.params else None)
    res = Resolver(sig, sort_env, self_ref)
    chk = Checker(sig)
    program = decl.level == "program"
    ctx = Ctx()
    binders = []
    linear_seen = False
    for b in decl.params:
        ty, s = chk.check_type(ctx, res.term(b.type, ctx.names()))
        tag = L if linear_seen else U
        binders.append((b.name, b.relevant, tag, ty))
        ctx = ctx.extend(b.name, ty, s if (b.relevant and program) else None)
        if b.relevant and s is L:
            linear_seen = True
    ret, _ = chk.check_type(ctx, res.term(decl.type, ctx.names()))
    full_type = ret
    for name, rel, tag, ty in reversed(binders):
        full_type = (Pi1 if rel else Pi0)(tag, ty, full_type, name=name)
    if decl.params:
        sig.defs[target] = DefInfo(target, decl.level, full_type, scheme=scheme, sorts=sorts)
    body_s = res.term(decl.body, ctx.names())
    if program:
        body, body_e, used = chk.pcheck(ctx, body_s, ret)
        missing = ctx.linear_levels() - used
        if missing:
            names = ", ".join(ctx.entries[k].name for k in sorted(missing))
            raise chk.error("linear-unused", f"linear parameter {names} is never used", ctx, body_s)
    else:
        body, body_e = chk.check(ctx, body_s, ret), None
    full = body
    full_e = body_e
    for name, rel, tag, ty in reversed(binders):
        lam = Lam1 if rel else Lam0
        full = lam(tag, ty, full, name=name)
        if full_e is not None:
            full_e = lam(tag, Box(), full_e, name=name)
    recursive = any(type(u) is DefRef and u.name == target for u in subterms(full))
    rec_arg = None
    if recursive:
        ok = _smaller_calls(body, target, len(binders))
        if not ok:
            raise TypingError(
                "non-structural-recursion",
                f"recursive calls of {target} are not on a structurally smaller argument",
                decl.span,
            )
        rec_arg = min(ok)
    sig.defs[target] = DefInfo(
        target,
        decl.level,
        full_type,
        body=full,
        erased=full_e,
        rec_arg=rec_arg,
        recursive=recursive,
        scheme=scheme,
        sorts=sorts,
    )
    sig.order.append(target)
    return sig


class _SortEnv(dict):
    """A sort assignment that remembers which variables were looked up."""

    def __init__(self, items=()):
        super().__init__(items)
        self.read: set[str] = set()

    def __contains__(self, key) -> bool:
        found = super().__contains__(key)
        if found:
            self.read.add(key)
        return found

    def __getitem__(self, key):
        self.read.add(key)
        return super().__getitem__(key)


def instantiate_scheme(sig: Signature, decl: InductiveDecl | DefDecl) -> Signature:
    """Elaborate every sort assignment of a scheme, pruning failures."""
    sig = sig.copy()
    sig.check_fresh(decl.name)
    kind = "inductive" if isinstance(decl, InductiveDecl) else decl.level
    ctor_names = tuple(c for c, _, _ in decl.ctors) if kind == "inductive" else ()
    sch = SchemeInfo(decl.name, kind, decl.sort_vars, ctor_names=ctor_names)
    sig.schemes[decl.name] = sch
    for c in ctor_names:
        sig.check_fresh(c)
        sig.scheme_ctors[c] = decl.name
    assignments = list(itertools.product((U, L), repeat=len(decl.sort_vars)))
    for i, sorts in enumerate(assignments):
        env = _SortEnv(zip(decl.sort_vars, sorts))
        target = mangle(decl.name, sorts)
        try:
            if kind == "inductive":
                sig = check_inductive(sig, decl, env, target, decl.name, sorts, prune=True)
            else:
                sig = check_definition(sig, decl, env, target, decl.name, sorts)
            sch.instances[sorts] = target
        except TLLError as e:
            sch.instances[sorts] = None
            sch.reasons[sorts] = f"{e.code}: {e.message}"
        if i == 0 and not env.read:
            # no sort variable is ever consulted: one instance serves every assignment
            for other in assignments[1:]:
                sch.instances[other] = sch.instances[sorts]
                if sorts in sch.reasons:
                    sch.reasons[other] = sch.reasons[sorts]
            break
    if not sch.kept():
        sig.warnings.append(f"all instances of {decl.name} were pruned")
    sig.order.append(decl.name)
    return sig


def check_toplevel(sig: Signature, decl: InductiveDecl | DefDecl) -> Signature:
    if decl.sort_vars:
        return instantiate_scheme(sig, decl)
    if isinstance(decl, InductiveDecl):
        return check_inductive(sig, decl)
    return check_definition(sig, decl)


def check_declarations(sig: Signature, decls) -> Signature:
    for d in decls:
        sig = check_toplevel(sig, d)
    return sig


def prelude_source() -> str:
    return resources.files("tll").joinpath("prelude.tll").read_text()


_PRELUDE: Signature | None = None


def prelude() -> Signature:
    """A fresh copy of the signature holding the standard prelude."""
    global _PRELUDE
    if _PRELUDE is None:
        _PRELUDE = check_declarations(Signature(), parse_declarations(prelude_source(), "prelude.tll"))
    return _PRELUDE.copy()


def check_source(src: str, file: str | None = None, sig: Signature | None = None, with_prelude: bool = True) -> Signature:
    if sig is None:
        sig = prelude() if with_prelude else Signature()
    return check_declarations(sig, parse_declarations(src, file))


def load_file(path: str | Path, sig: Signature | None = None) -> Signature:
    p = Path(path)
    if not p.is_file():
        raise TLLError("file-not-found", f"no such file: {p}")
    return check_source(p.read_text(), str(p), sig)
