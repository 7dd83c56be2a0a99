import pytest

from tll.checker import check_logical, check_program, infer_sort
from tll.errors import TLLError
from tll.signature import check_source, load_file
from tll.syntax import L, U

from conftest import CORPUS

LLIST = """
inductive llist (A : L) : L =
| lnil
| lcons of (hd : A) (tl : llist A)
"""


def fails(src, code):
    with pytest.raises(TLLError) as e:
        check_source(src)
    assert e.value.code == code, e.value
    return e.value


def test_linear_lists():
    sig = check_source(LLIST)
    ind = sig.inductives["llist"]
    assert ind.arity is L
    assert ind.ctors == ("lnil", "lcons")


def test_nonlinear_type_with_linear_field():
    fails(LLIST.replace(": L =", ": U ="), "nonlinear-field-in-U-type")


def test_irrelevant_linear_fields_are_allowed_in_nonlinear_types():
    check_source("inductive tag (A : L) : U =\n| mk of {x : A}")


def test_empty_constructor_type():
    sig = check_source("inductive unit : U =\n| tt")
    assert sig.inductives["unit"].arity is U
    sig = check_source("inductive void : U =")
    assert sig.inductives["void"].ctors == ()


def test_negative_occurrence():
    fails("inductive bad : U =\n| mk of (f : bad -> nat)", "negative-occurrence")


def test_duplicate_names():
    fails("program k : nat = 0\nprogram k : nat = 1", "duplicate-name")
    fails("inductive t : U =\n| zero", "duplicate-name")


def test_no_self_reference_outside_matches():
    fails("program k : nat = k", "unbound-identifier")


def test_llen_is_logical_only():
    err = fails(LLIST + """
program llen {A : L} (xs : llist A) : nat =
  match xs with
  | lnil => 0
  | lcons hd tl => 1 + llen _ tl
  end
""", "linear-unused")
    assert "hd" in err.message


def test_identity_scheme_has_two_instances():
    sig = check_source("program id<s> {A : Type<s>} (x : A) : A = x")
    kept = sig.schemes["id"].kept()
    assert sorted(k for k, _ in kept) == [(L,), (U,)]
    assert {v for _, v in kept} == {"id<U>", "id<L>"}


def test_list_scheme_pruning(corpus):
    sig = corpus["poly"]
    sch = sig.schemes["list"]
    assert len(sch.instances) == 4
    for sorts, name in sch.instances.items():
        ctors = {c.split("<")[0] for c in sig.inductives[name].ctors}
        assert ctors == ({"nil"} if sorts == (L, U) else {"nil", "cons"}), sorts


def test_scheme_without_sort_variables():
    sig = check_source("program k<s> : nat = 0\nprogram use : nat = k")
    kept = sig.schemes["k"].kept()
    assert len(kept) == 2 and len({name for _, name in kept}) == 1
    assert [n for n in sig.defs if n.startswith("k<")] == ["k<U>"]


def test_kept_instances_recheck(corpus):
    for sig in corpus.values():
        for sch in sig.schemes.values():
            for _, name in sch.kept():
                if name in sig.defs:
                    d = sig.defs[name]
                    infer_sort([], d.type, sig)
                    if d.level == "program":
                        assert check_program([], d.body, d.type, sig).erased == d.erased
                    else:
                        check_logical([], d.body, d.type, sig)
                else:
                    for c in sig.inductives[name].ctors:
                        assert sig.ctors[c].ind == name


def test_negative_corpus():
    expected = {
        "bad_llen_program": "linear-unused",
        "bad_discard": "linear-unused",
        "bad_dup": "linear-duplicated",
        "bad_pack": "constraint-violation",
    }
    for stem, code in expected.items():
        with pytest.raises(TLLError) as e:
            load_file(CORPUS / f"{stem}.tll")
        assert e.value.code == code, stem
        assert e.value.span is not None and e.value.span.line > 1


def test_missing_file():
    with pytest.raises(TLLError) as e:
        load_file(CORPUS / "nope.tll")
    assert e.value.code == "file-not-found"


def test_export_records(corpus):
    recs = {r["name"]: r for r in corpus["poly"].export()}
    assert recs["id<L>"]["level"] == "program"
    assert recs["id<L>"]["sorts"] == ["L"]
    assert recs["list<L,U>"]["ctors"] == ["nil<L,U>"]
