"""The acceptance criteria, one test each.

Every test records a single pass/fail line, printed at the end of the run.
"""

import time

import pytest

from tll.checker import check_program
from tll.errors import TLLError
from tll.evaluation import peval
from tll.heap import resolve, run_heap
from tll.meta import run_property
from tll.parser import parse_term
from tll.pretty import pretty
from tll.signature import load_file, prelude
from tll.syntax import DefRef, L, Loc, U

from conftest import ACCEPTANCE, CORPUS

TITLES = {
    1: "worked erasure example",
    2: "subset-pair erasure",
    3: "corpus check suite",
    4: "scheme pruning",
    5: "metatheory suite (1000 seeds, depth 6)",
    6: "heap cleanliness",
    7: "cross-semantics agreement",
    8: "step correspondence",
}


@pytest.fixture
def record(request):
    k = request.node.get_closest_marker("criterion").args[0]
    notes: list[str] = []
    yield notes
    failed = getattr(request.node, "failed", True)
    status = "FAIL" if failed else "pass"
    detail = f" ({'; '.join(notes)})" if notes else ""
    ACCEPTANCE[k] = f"[{status}] {k}. {TITLES[k]}{detail}"


POSITIVE = ["identity", "erasure", "llist", "lvec", "poly", "closure"]
NEGATIVE = {
    "bad_llen_program": "linear-unused",
    "bad_discard": "linear-unused",
    "bad_dup": "linear-duplicated",
    "bad_pack": "constraint-violation",
}


def mains():
    for stem in POSITIVE:
        sig = load_file(CORPUS / f"{stem}.tll")
        if "main" in sig.defs:
            yield stem, sig


@pytest.mark.criterion(1)
def test_worked_erasure_example(record):
    sig = load_file(CORPUS / "erasure.tll")
    text = pretty(sig.defs["example"].erased, sig=sig)
    record.append(text)
    assert text == "(lam0{L}(A:<>). lam1{L}(x:<>). x) <>"


@pytest.mark.criterion(2)
def test_subset_pair_erasure(record):
    sig = prelude()
    m = parse_term("<1, refl(2)>0{U}", sig)
    a = parse_term("sig0{U}(x : nat). Id(nat, x + 1, 2)", sig)
    text = pretty(check_program([], m, a, sig).erased, sig=sig)
    record.append(text)
    assert text == "<1, <>>0{U}"


@pytest.mark.criterion(3)
def test_corpus_check_suite(record):
    t0 = time.perf_counter()
    for stem in POSITIVE:
        load_file(CORPUS / f"{stem}.tll")
    for stem, code in NEGATIVE.items():
        with pytest.raises(TLLError) as e:
            load_file(CORPUS / f"{stem}.tll")
        assert e.value.code == code, stem
    seconds = time.perf_counter() - t0
    record.append(f"{len(POSITIVE)} accepted, {len(NEGATIVE)} rejected with their codes, {seconds:.2f}s")
    assert seconds < 5


@pytest.mark.criterion(4)
def test_scheme_pruning(record):
    sig = load_file(CORPUS / "poly.tll")
    lu = sig.schemes["list"].instances[(L, U)]
    ctors = {c.split("<")[0] for c in sig.inductives[lu].ctors}
    ids = sig.schemes["id"].kept()
    record.append(f"list<L,U> = {sorted(ctors)}, id has {len(ids)} instances")
    assert ctors == {"nil"}
    assert len(ids) == 2


PROPS = [
    "logical-subject-reduction",
    "program-subject-reduction",
    "confluence",
    "sort-uniqueness",
    "value-stability",
    "erasure-lockstep",
    "algorithmic-agreement",
]


@pytest.mark.criterion(5)
def test_metatheory_suite(record):
    failures = []
    for name in PROPS:
        res = run_property(name, seeds=1000, depth=6)
        record.append(f"{name} {'ok' if res.passed else 'FAIL'} {res.seconds:.0f}s")
        if not res.passed or res.seconds >= 60:
            failures.append(res.summary())
    assert not failures, "\n".join(failures)


@pytest.mark.criterion(6)
def test_heap_cleanliness(record):
    for stem, sig in mains():
        d = sig.defs["main"]
        run = run_heap(DefRef("main"), d.type, sig)
        assert run.violations == [], (stem, run.violations)
        assert run.leaked == [], stem
        if run.result_sort is U:
            assert run.live == [], stem
        else:
            remaining = {c.loc for c in run.census if c.sort is L}
            assert remaining == {c.loc for c in run.live}
            assert remaining, stem
        record.append(f"{stem}: {run.allocations} cells, {len(run.live)} live L")


@pytest.mark.criterion(7)
def test_cross_semantics_agreement(record):
    for stem, sig in mains():
        run = run_heap(DefRef("main"), sig.defs["main"].type, sig)
        want = peval(sig.defs["main"].erased, sig, erased=True)
        got = resolve(run.heap, Loc(run.result), sig)
        assert got == want, stem
        record.append(f"{stem}: {pretty(got, sig=sig)}")


@pytest.mark.criterion(8)
def test_step_correspondence(record):
    for stem, sig in mains():
        run = run_heap(DefRef("main"), sig.defs["main"].type, sig)
        assert run.steps == run.program_steps + run.allocations, stem
        record.append(f"{stem}: {run.steps} = {run.program_steps} + {run.allocations}")
