"""The heap machine: values live in sorted cells, linear cells are freed by
the lookup that reads them, and nothing else ever collects memory."""

from __future__ import annotations

from dataclasses import dataclass, field

from .checker import Checker, check_program
from .contexts import Ctx
from .env import Signature
from .errors import EvalError
from .evaluation import Stepper, is_value, ptrace, relevant_positions
from .reduction import _fuel
from .syntax import (
    APair,
    App,
    Box,
    CtorRef,
    DefRef,
    IdElim,
    L,
    Lam0,
    Lam1,
    Loc,
    Match,
    Pair0,
    Pair1,
    ProjL,
    ProjR,
    Sig0Elim,
    Sig1Elim,
    Sort,
    Term,
    U,
    instantiate,
    is_closed,
    map_children,
    subst,
    subterms,
)


@dataclass(frozen=True)
class Cell:
    sort: Sort
    value: Term


@dataclass
class Heap:
    cells: dict[int, Cell] = field(default_factory=dict)
    next_loc: int = 0

    def copy(self) -> Heap:
        return Heap(dict(self.cells), self.next_loc)

    def alloc(self, sort: Sort, value: Term) -> tuple[int, Heap]:
        h = self.copy()
        loc = h.next_loc
        h.cells[loc] = Cell(sort, value)
        h.next_loc += 1
        return loc, h

    def live_linear(self) -> int:
        return sum(1 for c in self.cells.values() if c.sort is L)

    def __len__(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class MachineState:
    heap: Heap
    ctrl: Term


def hlookup(h: Heap, loc: int) -> tuple[Term, Heap]:
    """Read cell ``loc``; a linear cell is removed by the read."""
    cell = h.cells.get(loc)
    if cell is None:
        raise EvalError("dangling-location", f"location *{loc} is not allocated")
    if cell.sort is U:
        return cell.value, h
    h2 = h.copy()
    del h2.cells[loc]
    return cell.value, h2


def cell_sort(sig: Signature, v: Term) -> Sort:
    """The sort a value form is allocated at."""
    match v:
        case Lam0() | Lam1() | Pair0() | Pair1() | APair():
            return v.t
        case CtorRef():
            info = sig.ctors[v.name]
            return sig.inductives[info.ind].arity
    raise EvalError("stuck-term", f"{type(v).__name__} is not an allocatable value")


def _is_ptr(t: Term) -> bool:
    return type(t) in (Loc, Box)


def is_heap_value(v: Term, sig: Signature | None = None) -> bool:
    match v:
        case Lam0() | Lam1() | APair():
            return True
        case Pair0():
            return type(v.fst) is Loc
        case Pair1():
            return type(v.fst) is Loc and type(v.snd) is Loc
        case CtorRef():
            if sig is None or v.name not in sig.ctors:
                return all(_is_ptr(a) for a in v.args)
            rel = set(relevant_positions(sig, v))
            return all(type(a) is Loc if i in rel else type(a) is Box for i, a in enumerate(v.args))
    return False


class Machine:
    """One transition at a time; ``rule`` names the last transition."""

    def __init__(self, sig: Signature):
        self.sig = sig
        self.rule: str | None = None

    def step(self, st: MachineState) -> MachineState | None:
        self.rule = None
        r = self._step(st.heap, st.ctrl)
        if r is None:
            return None
        h, c = r
        return MachineState(h, c)

    def _alloc(self, h: Heap, v: Term):
        loc, h2 = h.alloc(cell_sort(self.sig, v), v)
        self.rule = "alloc"
        return h2, Loc(loc)

    def _sub(self, h: Heap, t: Term, rebuild):
        r = self._step(h, t)
        if r is None:
            return None
        h2, t2 = r
        return h2, rebuild(t2)

    def _step(self, h: Heap, c: Term):
        match c:
            case Loc() | Box():
                return None
            case Lam0() | Lam1() | APair():
                return self._alloc(h, c)
            case App(fun=f, arg=a):
                if type(f) is not Loc:
                    return self._sub(h, f, lambda f2: App(f2, a))
                cell = h.cells.get(f.l)
                if cell is None:
                    raise EvalError("dangling-location", f"location *{f.l} is not allocated")
                if type(cell.value) is Lam0:
                    v, h2 = hlookup(h, f.l)
                    self.rule = "beta0"
                    return h2, subst(v.body, Box())
                if type(cell.value) is Lam1:
                    if type(a) is not Loc:
                        return self._sub(h, a, lambda a2: App(f, a2))
                    v, h2 = hlookup(h, f.l)
                    self.rule = "beta1"
                    return h2, subst(v.body, a)
                return None
            case DefRef():
                info = self.sig.defs.get(c.name)
                if info is None or info.erased is None:
                    return None
                self.rule = "delta"
                return h, info.erased
            case IdElim():
                self.rule = "rew"
                return h, c.h
            case Pair0():
                if type(c.fst) is not Loc:
                    return self._sub(h, c.fst, lambda x: Pair0(c.t, x, c.snd))
                return self._alloc(h, c)
            case Pair1():
                if type(c.fst) is not Loc:
                    return self._sub(h, c.fst, lambda x: Pair1(c.t, x, c.snd))
                if type(c.snd) is not Loc:
                    return self._sub(h, c.snd, lambda y: Pair1(c.t, c.fst, y))
                return self._alloc(h, c)
            case CtorRef():
                for i in relevant_positions(self.sig, c):
                    if type(c.args[i]) is not Loc:

                        def put(a2, i=i):
                            args = list(c.args)
                            args[i] = a2
                            return CtorRef(c.name, tuple(args))

                        return self._sub(h, c.args[i], put)
                return self._alloc(h, c)
            case Sig0Elim() | Sig1Elim():
                if type(c.scrut) is not Loc:
                    return self._sub(h, c.scrut, lambda s: type(c)(c.motive, s, c.branch, names=c.names))
                v, h2 = hlookup(h, c.scrut.l)
                if type(v) not in (Pair0, Pair1):
                    return None
                self.rule = "split"
                return h2, instantiate(c.branch, (v.fst, v.snd))
            case ProjL() | ProjR():
                if type(c.m) is not Loc:
                    return self._sub(h, c.m, lambda s: type(c)(s))
                v, h2 = hlookup(h, c.m.l)
                if type(v) is not APair:
                    return None
                self.rule = "proj"
                return h2, v.lhs if type(c) is ProjL else v.rhs
            case Match():
                if type(c.scrut) is not Loc:
                    return self._sub(h, c.scrut, lambda s: Match(c.motive, s, c.branches, name=c.name))
                v, h2 = hlookup(h, c.scrut.l)
                if type(v) is not CtorRef:
                    return None
                nparams = self.sig.ctors[v.name].nparams
                for br in c.branches:
                    if br.ctor == v.name:
                        self.rule = "match"
                        return h2, instantiate(br.body, v.args[nparams:])
                return None
        return None


def hstep(st: MachineState, sig: Signature) -> MachineState | None:
    return Machine(sig).step(st)


# -- pointer resolution ---------------------------------------------------------


class _Resolver:
    def __init__(self, h: Heap, sig: Signature | None):
        self.h = h
        self.sig = sig
        self.used: set[int] = set()
        self.cache: dict[int, Term] = {}

    def fail(self, msg: str) -> EvalError:
        return EvalError("unresolvable", msg)

    def tagged(self, t: Term) -> Sort | None:
        match t:
            case Lam0() | Lam1() | Pair0() | Pair1() | APair():
                return t.t
            case CtorRef() if self.sig is not None and t.name in self.sig.ctors:
                return self.sig.inductives[self.sig.ctors[t.name].ind].arity
        return None

    def go(self, t: Term) -> Term:
        if type(t) is Loc:
            cell = self.h.cells.get(t.l)
            if cell is None:
                raise EvalError("dangling-location", f"location *{t.l} is not allocated")
            if cell.sort is U:
                if t.l not in self.cache:
                    before = set(self.used)
                    self.cache[t.l] = self.go(cell.value)
                    if self.used != before:
                        raise self.fail(f"non-linear cell *{t.l} refers to linear cells")
                return self.cache[t.l]
            if t.l in self.used:
                raise self.fail(f"linear cell *{t.l} is needed more than once")
            self.used.add(t.l)
            return self.go(cell.value)
        if type(t) is APair:
            before = set(self.used)
            lhs = self.go(t.lhs)
            left = self.used - before
            self.used = set(before)
            rhs = self.go(t.rhs)
            if self.used - before != left:
                raise self.fail("the two sides of an additive pair use different linear cells")
            out = APair(t.t, lhs, rhs)
            if t.t is U and left:
                raise self.fail("a non-linear additive pair holds linear cells")
            return out
        if type(t) is Match:
            # only one branch ever runs, so each may use the same cells
            scrut = self.go(t.scrut)
            before = set(self.used)
            branches, uses = [], []
            for br in t.branches:
                self.used = set(before)
                branches.append(map_children(br, lambda c, _k: self.go(c)))
                uses.append(self.used - before)
            if any(u != uses[0] for u in uses[1:]):
                raise self.fail("match branches use different linear cells")
            self.used = before | (uses[0] if uses else set())
            return Match(t.motive, scrut, tuple(branches), name=t.name)
        sort = self.tagged(t)
        # closures hold code; pairs and constructors only constrain their
        # cells once every component has been computed
        if sort is U and (type(t) in (Lam0, Lam1) or is_value(t, self.sig)):
            before = set(self.used)
            out = map_children(t, lambda c, _k: self.go(c))
            if self.used != before:
                raise self.fail(f"a non-linear {type(t).__name__} holds linear cells")
            return out
        if not any(type(u) is Loc for u in subterms(t)):
            return t
        return map_children(t, lambda c, _k: self.go(c))


def resolve(h: Heap, m: Term, sig: Signature | None = None, strict: bool = False) -> Term:
    """Replace every location in ``m`` by the value it points to.

    Linear cells may be used at most once. With ``strict``, every linear
    cell of ``h`` must be used, which is well-resolvedness of the whole heap.
    """
    r = _Resolver(h, sig)
    out = r.go(m)
    if strict:
        left = sorted(k for k, c in h.cells.items() if c.sort is L and k not in r.used)
        if left:
            raise EvalError("unresolvable", f"linear cells {left} are not reachable from the term")
    return out


def wr_check(h: Heap, sig: Signature | None = None) -> bool:
    """Every cell holds a closed value form."""
    return all(is_closed(c.value) and is_heap_value(c.value, sig) for c in h.cells.values())


def reachable(h: Heap, roots: list[int]) -> set[int]:
    seen: set[int] = set()
    todo = list(roots)
    while todo:
        k = todo.pop()
        if k in seen or k not in h.cells:
            continue
        seen.add(k)
        todo.extend(u.l for u in subterms(h.cells[k].value) if type(u) is Loc)
    return seen


# -- whole runs -----------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRow:
    index: int
    rule: str
    heap_size: int
    live_linear: int


@dataclass(frozen=True)
class CellReport:
    loc: int
    sort: Sort
    head: str
    reachable: bool


@dataclass
class HeapRun:
    heap: Heap
    result: int | None
    value: Term
    steps: int
    allocations: int
    program_steps: int
    result_sort: Sort
    trace: list[TraceRow]
    census: list[CellReport]
    violations: list[str]

    @property
    def leaked(self) -> list[CellReport]:
        return [c for c in self.census if c.sort is L and not c.reachable]

    @property
    def live(self) -> list[CellReport]:
        return [c for c in self.census if c.sort is L and c.reachable]

    @property
    def clean(self) -> bool:
        if self.leaked or self.violations:
            return False
        return self.result_sort is L or not self.live


def run_heap(
    m: Term,
    a: Term,
    sig: Signature,
    fuel=None,
    verify: bool = True,
) -> HeapRun:
    """Run closed program ``m : a`` on the heap machine from the empty heap.

    With ``verify`` set, every state is checked to be a wr-heap whose control
    resolves (using all linear cells) to the erased term reached by the
    program semantics in lockstep.
    """
    fuel = _fuel(fuel)
    res = check_program(Ctx(), m, a, sig)
    erased = res.erased
    result_sort = Checker(sig).infer_sort(Ctx(), a)
    machine = Machine(sig)
    mirror = Stepper(sig, erased=True)
    st = MachineState(Heap(), erased)
    shadow = erased
    steps = allocs = 0
    trace: list[TraceRow] = []
    violations: list[str] = []
    while True:
        nxt = machine.step(st)
        if nxt is None:
            break
        fuel.tick()
        steps += 1
        rule = machine.rule or "congruence"
        if rule == "alloc":
            allocs += 1
        else:
            shadow2 = mirror.step(shadow)
            if shadow2 is None:
                violations.append(f"step {steps}: the program semantics cannot follow {rule}")
            else:
                shadow = shadow2
        st = nxt
        trace.append(TraceRow(steps, rule, len(st.heap), st.heap.live_linear()))
        if verify:
            if not wr_check(st.heap, sig):
                violations.append(f"step {steps}: heap is not well-formed")
            try:
                got = resolve(st.heap, st.ctrl, sig, strict=True)
                if got != shadow:
                    violations.append(f"step {steps}: control does not resolve to the program term")
            except EvalError as e:
                violations.append(f"step {steps}: {e.message}")
    if type(st.ctrl) is not Loc:
        raise EvalError("stuck-term", f"heap machine stopped at a non-location after {steps} steps")
    value = resolve(st.heap, st.ctrl, sig)
    result = st.ctrl.l
    live = reachable(st.heap, [result])
    census = [
        CellReport(k, c.sort, type(c.value).__name__ if type(c.value) is not CtorRef else c.value.name, k in live)
        for k, c in sorted(st.heap.cells.items())
    ]
    program_steps = ptrace(erased, sig, erased=True).steps
    return HeapRun(st.heap, result, value, steps, allocs, program_steps, result_sort, trace, census, violations)
