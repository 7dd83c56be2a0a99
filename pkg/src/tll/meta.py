"""Executable metatheory: each property runs over generated programs and
reports the first failure, shrunk to a small counterexample."""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass
from typing import Callable, Iterator

from .checker import Checker, check_logical, check_program, infer_logical
from .contexts import Ctx
from .declarative import Unsupported, declarative_check
from .env import Signature
from .errors import FuelExhausted, TLLError
from .evaluation import Stepper, is_value, ptrace
from .generate import NAT, ZERO, GenTerm, fn, generate, generate_open, generate_value, shrink
from .heap import run_heap
from .mltt import mltt_model, model_path, mstep_at
from .pretty import pretty
from .reduction import normalize_by, redexes, step_at
from .signature import prelude
from .syntax import (
    APair,
    App,
    L,
    Lam1,
    Pair1,
    ProjL,
    ProjR,
    Sig1,
    Sig1Elim,
    Term,
    U,
    Var,
    With,
    CtorRef,
)

CONFLUENCE_FUEL = 10_000
EVAL_FUEL = 100_000


@dataclass
class Counterexample:
    seed: int | None
    term: str
    type: str
    context: list[str]
    reason: str

    def __str__(self) -> str:
        ctx = ", ".join(self.context) or "ε"
        where = "" if self.seed is None else f"seed {self.seed}: "
        return f"{where}{ctx} ⊢ {self.term} : {self.type}\n  {self.reason}"


@dataclass
class PropertyResult:
    name: str
    passed: bool
    cases: int = 0
    skipped: int = 0
    seconds: float = 0.0
    counterexample: Counterexample | None = None

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        line = f"{self.name}: {status} ({self.cases} cases, {self.skipped} skipped, {self.seconds:.1f}s)"
        if self.counterexample is not None:
            line += f"\n{self.counterexample}"
        return line


class Skip(Exception):
    """The case says nothing about the property (e.g. outside a fragment)."""


Probe = Callable[[GenTerm, Signature, bool], "str | None"]


# -- individual checks: None for success, else a description of the violation ------


def _logical_ctx(gt: GenTerm):
    return gt.gamma()


def logical_subject_reduction(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    """Contract a random redex (anywhere, also under binders) and re-check."""
    rng = random.Random(gt.seed)
    t = gt.term
    for _ in range(8):
        paths = list(redexes(sig, t))
        if not paths:
            return None
        path = rng.choice(paths)
        t2 = step_at(sig, t, path)
        try:
            check_logical(_logical_ctx(gt), t2, gt.type, sig)
        except TLLError as e:
            return f"contracting the redex at {list(path)} of {pretty(t, _names(gt), sig)} gives an ill-typed term: {e.message}"
        t = t2
    return None


def program_subject_reduction(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    try:
        trace = ptrace(gt.term, sig, EVAL_FUEL, mutant=mutant)
    except FuelExhausted:
        raise Skip
    except TLLError as e:
        return f"evaluation failed: {e.message}"
    for i, t in enumerate(trace.terms[1:], 1):
        try:
            check_program(gt.gamma(), t, gt.type, sig)
        except TLLError as e:
            return f"after {i} step(s) ({trace.rules[i - 1]}) the program {pretty(t, _names(gt), sig)} no longer checks: {e.message}"
    return None


def subject_reduction(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    return logical_subject_reduction(gt, sig, mutant) or program_subject_reduction(gt, sig, mutant)


def confluence(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    """Leftmost-outermost and rightmost-innermost normalization agree."""
    try:
        lo = normalize_by(sig, gt.term, "lo", CONFLUENCE_FUEL)
        ri = normalize_by(sig, gt.term, "ri", CONFLUENCE_FUEL)
    except FuelExhausted:
        return "a reduction strategy ran out of fuel"
    if lo != ri:
        names = _names(gt)
        return f"normal forms differ: {pretty(lo, names, sig)} vs {pretty(ri, names, sig)}"
    return None


def sort_uniqueness(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    """The inferred type has the same sort as the intended one, and the sort
    is stable under normalizing the type."""
    c = Checker(sig)
    ctx = Ctx()
    for name, ty, ps in gt.gamma():
        ctx = ctx.extend(name, ty, ps)
    want = c.infer_sort(ctx, gt.type)
    try:
        got = infer_logical(ctx, gt.term, sig)
    except TLLError:
        # not every checkable term is inferable; fall back to its checked type
        got = gt.type
    if not c.conv(got, gt.type):
        return f"inferred type {pretty(got, _names(gt), sig)} is not convertible to the intended one"
    sorts = {c.infer_sort(ctx, got), c.infer_sort(ctx, c.normalize(got)), c.infer_sort(ctx, c.whnf(gt.type))}
    if sorts != {want}:
        return f"the type has sorts {sorted(map(str, sorts))}, expected only {want}"
    return None


def value_stability(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    """A value of a non-linear type consumes no linear resource."""
    if not is_value(gt.term, sig, neutral=False):
        raise Skip
    try:
        res = check_program(gt.gamma(), gt.term, gt.type, sig, root=False)
    except TLLError:
        return None
    linear = {e.name for e in gt.ctx if e.psort is L}
    leaked = sorted(res.consumed & linear)
    if leaked:
        return f"a value of a non-linear type was accepted while consuming {', '.join(leaked)}"
    return None


def erasure_lockstep(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    """Each source step is matched by one step of the runtime evaluator on
    erased terms, and erasing the stepped source gives the stepped erased term.

    ``mutant`` breaks the runtime evaluator only; the source side always uses
    the reference semantics.
    """
    source = Stepper(sig)
    runtime = Stepper(sig, erased=True, mutant=mutant)
    m = gt.term
    e = check_program(gt.gamma(), m, gt.type, sig).erased
    for i in range(EVAL_FUEL):
        m2 = source.step(m) if not is_value(m, sig) else None
        e2 = runtime.step(e) if not is_value(e, sig) else None
        if m2 is None and e2 is None:
            return None
        if m2 is None or e2 is None:
            side = "source" if m2 is None else "erased"
            return f"step {i + 1}: the {side} term cannot step but the other can"
        try:
            want = check_program(gt.gamma(), m2, gt.type, sig).erased
        except TLLError as err:
            return f"step {i + 1}: the stepped source no longer checks: {err.message}"
        if want != e2:
            return (
                f"step {i + 1}: erasing the stepped source gives {pretty(want, _names(gt), sig)} "
                f"but the erased evaluator produced {pretty(e2, _names(gt), sig)}"
            )
        m, e = m2, e2
    raise Skip


def heap_clean(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    try:
        run = run_heap(gt.term, gt.type, sig, fuel=EVAL_FUEL)
    except FuelExhausted:
        raise Skip
    except TLLError as e:
        return f"heap run failed: {e.message}"
    if run.violations:
        return run.violations[0]
    if run.leaked:
        return f"{len(run.leaked)} linear cell(s) leaked"
    if not run.clean:
        return f"a value of a non-linear type keeps {len(run.live)} linear cell(s) alive"
    if run.steps != run.program_steps + run.allocations:
        return f"{run.steps} machine steps for {run.program_steps} program steps and {run.allocations} allocations"
    return None


def model_soundness(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    """Translating to the collapsed system commutes with logical steps."""
    for path in list(redexes(sig, gt.term))[:8]:
        stepped = mltt_model(step_at(sig, gt.term, path))
        image = mstep_at(mltt_model(gt.term), model_path(gt.term, path), sig)
        if image != stepped:
            return f"the model of the step at {list(path)} does not match a model step"
    return None


def agreement(gt: GenTerm, sig: Signature, mutant: bool = False) -> str | None:
    try:
        decl = declarative_check(gt.gamma(), gt.term, gt.type, sig)
    except Unsupported:
        raise Skip
    try:
        check_program(gt.gamma(), gt.term, gt.type, sig)
        alg = True
    except TLLError:
        alg = False
    if alg != decl:
        verdict = "accepts" if alg else "rejects"
        return f"the algorithmic checker {verdict} but the declarative rules {'do not' if alg else 'do'}"
    return None


def _names(gt: GenTerm) -> list[str]:
    return [e.name for e in gt.ctx]


# -- exhaustive small judgments ------------------------------------------------------

_NN_L = fn(L, NAT, NAT)
_NN_U = fn(U, NAT, NAT)
_ENTRY_TYPES = ((NAT, U), (_NN_L, L), (_NN_U, U))
_GOALS = (NAT, _NN_L, _NN_U, With(L, NAT, NAT), Sig1(L, NAT, NAT, name="_"))


def small_terms(scope: int, size: int) -> Iterator[Term]:
    """Every term of exactly ``size`` nodes over ``scope`` variables, drawn
    from the fragment the declarative rules cover."""
    if size == 1:
        for i in range(scope):
            yield Var(i)
        yield ZERO
        return
    for t in small_terms(scope, size - 1):
        yield CtorRef("S", (t,))
        yield ProjL(t)
        yield ProjR(t)
    for s in (U, L):
        for ann in (NAT, _NN_L):
            for b in small_terms(scope + 1, size - 1):
                yield Lam1(s, ann, b, name="x")
    for k in range(1, size - 1):
        for f in small_terms(scope, k):
            for a in small_terms(scope, size - 1 - k):
                yield App(f, a)
                for s in (U, L):
                    yield APair(s, f, a)
                    yield Pair1(s, f, a)
            for b in small_terms(scope + 2, size - 1 - k):
                yield Sig1Elim(None, f, b, names=("z", "x", "y"))


def small_contexts(max_entries: int = 2) -> Iterator[list[tuple[str, Term, object]]]:
    for n in range(max_entries + 1):
        for combo in itertools.product(_ENTRY_TYPES, repeat=n):
            yield [(f"v{i}", ty, s) for i, (ty, s) in enumerate(combo)]


def exhaustive_agreement(sig: Signature, max_size: int = 4, max_entries: int = 2) -> tuple[int, Counterexample | None]:
    """Compare both checkers on every small judgment, smallest first."""
    cases = 0
    for size in range(1, max_size + 1):
        for g in small_contexts(max_entries):
            names = [n for n, _, _ in g]
            for m in small_terms(len(g), size):
                for a in _GOALS:
                    cases += 1
                    try:
                        alg = bool(check_program(g, m, a, sig))
                    except TLLError:
                        alg = False
                    decl = declarative_check(g, m, a, sig)
                    if alg != decl:
                        verdict = "accepts" if alg else "rejects"
                        return cases, Counterexample(
                            None,
                            pretty(m, names, sig),
                            pretty(a, names, sig),
                            [f"{n} :{s} {pretty(t, names[:i], sig)}" for i, (n, t, s) in enumerate(g)],
                            f"the algorithmic checker {verdict} but the declarative rules {'do not' if alg else 'do'}",
                        )
    return cases, None


# -- the driver -------------------------------------------------------------------------


@dataclass(frozen=True)
class Property:
    probe: Probe
    source: Callable[[int, int], GenTerm]
    doc: str


def _closed(seed: int, depth: int) -> GenTerm:
    return generate(seed, depth)


def _value(seed: int, depth: int) -> GenTerm:
    return generate_value(seed, min(depth, 3))


def _open_candidate(seed: int, depth: int) -> GenTerm:
    return generate_open(seed, min(depth, 3), sloppy=True)


PROPERTIES: dict[str, Property] = {
    "subject-reduction": Property(subject_reduction, _closed, "types are preserved by logical and program steps"),
    "logical-subject-reduction": Property(logical_subject_reduction, _closed, "types are preserved by logical steps"),
    "program-subject-reduction": Property(program_subject_reduction, _closed, "types are preserved by program steps"),
    "confluence": Property(confluence, _closed, "two reduction strategies reach the same normal form"),
    "sort-uniqueness": Property(sort_uniqueness, _closed, "re-inferred types keep their sort"),
    "value-stability": Property(value_stability, _value, "non-linear values hold no linear resources"),
    "erasure-lockstep": Property(erasure_lockstep, _closed, "erasure commutes with each program step"),
    "heap-clean": Property(heap_clean, _closed, "heap runs are well resolved and leave no leaks"),
    "algorithmic-agreement": Property(agreement, _open_candidate, "algorithmic and declarative checking agree"),
    "model-soundness": Property(model_soundness, _closed, "the model translation commutes with logical steps"),
}


def _counterexample(gt: GenTerm, sig: Signature, reason: str) -> Counterexample:
    names = _names(gt)
    return Counterexample(
        gt.seed,
        pretty(gt.term, names, sig),
        pretty(gt.type, names, sig),
        [f"{e.name} :{e.psort or 'logical'} {pretty(e.type, names[:i], sig)}" for i, e in enumerate(gt.ctx)],
        reason,
    )


def run_property(
    name: str,
    seeds: int = 1000,
    depth: int = 6,
    mutant: bool = False,
    sig: Signature | None = None,
    minimize: bool = True,
) -> PropertyResult:
    """Run property ``name`` on ``seeds`` generated cases.

    ``mutant`` swaps in an evaluator whose β₁ rule ignores its value premise;
    a sound harness must then find a counterexample.
    """
    if name not in PROPERTIES:
        raise KeyError(name)
    prop = PROPERTIES[name]
    sig = sig or prelude()
    t0 = time.perf_counter()
    res = PropertyResult(name, True)
    if name == "algorithmic-agreement":
        cases, cex = exhaustive_agreement(sig)
        res.cases += cases
        if cex is not None:
            res.passed, res.counterexample = False, cex
            res.seconds = time.perf_counter() - t0
            return res
    for seed in range(seeds):
        gt = prop.source(seed, depth)
        try:
            reason = prop.probe(gt, sig, mutant)
        except Skip:
            res.skipped += 1
            continue
        res.cases += 1
        if reason is None:
            continue
        if minimize:
            gt = shrink(gt, sig, lambda g: _fails(prop, g, sig, mutant))
            reason = _fails(prop, gt, sig, mutant) or reason
        res.passed = False
        res.counterexample = _counterexample(gt, sig, reason)
        break
    res.seconds = time.perf_counter() - t0
    return res


def _fails(prop: Property, gt: GenTerm, sig: Signature, mutant: bool) -> str | None:
    try:
        return prop.probe(gt, sig, mutant)
    except Skip:
        return None


__all__ = [
    "PROPERTIES",
    "Counterexample",
    "PropertyResult",
    "exhaustive_agreement",
    "run_property",
    "small_contexts",
    "small_terms",
]
