import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tll.checker import check_logical, infer_logical, infer_sort
from tll.errors import FuelExhausted, TLLError
from tll.generate import generate
from tll.mltt import MType, mltt_model, msubst
from tll.parser import parse_term
from tll.reduction import conv, normalize, normalize_by, whnf
from tll.syntax import (
    App,
    Lam0,
    Lam1,
    Pi1,
    SortTerm,
    U,
    L,
    Var,
    subst,
)


def P(src, sig):
    return parse_term(src, sig)


def test_sorts_inhabit_u(sig):
    assert infer_logical([], SortTerm(U), sig) == SortTerm(U)
    assert infer_logical([], SortTerm(L), sig) == SortTerm(U)
    assert infer_sort([], SortTerm(L), sig) is U


def test_polymorphic_identity(sig):
    ty = infer_logical([], P("lam1{U}(A:U). lam1{U}(x:A). x", sig), sig)
    assert ty == P("pi1{U}(A:U). pi1{U}(x:A). A", sig)


def test_pi_sort_is_its_annotation(sig):
    assert infer_logical([], P("pi1{L}(x:U). U", sig), sig) == SortTerm(L)
    assert infer_sort([], P("pi0{L}(A:U). pi1{L}(x:A). A", sig), sig) is L


def test_infer_sort_rejects_non_types(sig):
    with pytest.raises(TLLError) as e:
        infer_sort([], P("lam1{U}(x:U). x", sig), sig)
    assert e.value.code == "not-a-type"


def test_mismatch_reports_both_types(sig):
    with pytest.raises(TLLError) as e:
        check_logical([], P("0", sig), SortTerm(U), sig)
    assert e.value.code == "type-mismatch"
    assert "nat" in e.value.message


def test_whnf_examples(sig):
    assert whnf(sig, P("(lam1{U}(x:U). x) U", sig)) == SortTerm(U)
    assert whnf(sig, P("(lam0{U}(x:U). U) nat", sig)) == SortTerm(U)
    h = P("3", sig)
    assert whnf(sig, P("rew [x, p => nat] 3 in refl(1)", sig)) == h


def test_whnf_stops_at_the_head(sig):
    t = P("lam1{U}(x:U). (lam1{U}(y:U). y) x", sig)
    assert whnf(sig, t) == t


def test_normalize_erasure_example(sig):
    t = P("(lam0{L}(A:U). lam1{L}(x:A). x) nat", sig)
    assert normalize(sig, t) == P("lam1{L}(x:nat). x", sig)


def test_normal_forms_are_fixed_points(sig):
    t = P("lam1{U}(f : nat -> nat). lam1{U}(x : nat). f (f x)", sig)
    assert normalize(sig, t) == t


def test_fuel_runs_out_on_omega(sig):
    # ill typed, but conversion must survive it
    w = Lam1(U, SortTerm(U), App(Var(0), Var(0)))
    with pytest.raises(FuelExhausted):
        normalize(sig, App(w, w), 500)


def test_conv_basics(sig):
    t = P("pi1{U}(x:nat). nat", sig)
    assert conv(sig, t, t)
    assert conv(sig, P("(lam1{U}(x:U).x) U", sig), SortTerm(U))
    assert not conv(sig, SortTerm(U), SortTerm(L))


# -- Church numerals against an independent interpreter -------------------------------

CHURCH = "pi0{U}(A : U). (A -> A) -> A -> A"


def church(n: int) -> str:
    body = "x"
    for _ in range(n):
        body = f"f ({body})"
    return f"lam0{{U}}(A : U). fn (f : A -> A) => fn (x : A) => {body}"


PLUS = (
    f"fn (m : {CHURCH}) => fn (n : {CHURCH}) => lam0{{U}}(A : U). fn (f : A -> A) => fn (x : A) => "
    "m A f (n A f x)"
)


def denote(t, env=()):
    """Read a pure lambda term as a Python closure, ignoring types."""
    match t:
        case Var(idx=i):
            return env[i]
        case Lam0() | Lam1():
            return lambda v: denote(t.body, (v, *env))
        case App():
            return denote(t.fun, env)(denote(t.arg, env))
    return None  # types are irrelevant to the denotation


def count(t) -> int:
    return denote(t)(None)(lambda k: k + 1)(0)


def test_church_two_plus_two(sig):
    sum_ = P(f"({PLUS}) ({church(2)}) ({church(2)})", sig)
    four = P(church(4), sig)
    check_logical([], sum_, P(CHURCH, sig), sig)
    assert count(sum_) == 4 == count(four)
    assert conv(sig, sum_, four)
    assert normalize(sig, sum_) == four
    assert not conv(sig, sum_, P(church(3), sig))


@given(st.integers(0, 4), st.integers(0, 4))
@settings(max_examples=25, deadline=None)
def test_church_addition(m, n):
    from tll.signature import prelude

    sig = prelude()
    t = P(f"({PLUS}) ({church(m)}) ({church(n)})", sig)
    nf = normalize(sig, t)
    assert count(nf) == m + n
    assert nf == P(church(m + n), sig)


# -- generated terms ------------------------------------------------------------------


def test_strategies_agree_and_types_are_valid(sig):
    for seed in range(60):
        gt = generate(seed, 4)
        a = infer_logical([], gt.term, sig)
        assert infer_logical([], a, sig) in (SortTerm(U), SortTerm(L))
        lo = normalize_by(sig, gt.term, "lo", 10_000)
        ri = normalize_by(sig, gt.term, "ri", 10_000)
        assert lo == ri == normalize(sig, gt.term)


def test_model_collapses_sorts_and_quantifiers(sig):
    assert mltt_model(SortTerm(L)) == MType() == mltt_model(SortTerm(U))
    a, b = P("pi0{L}(x:nat). nat", sig), P("pi1{U}(x:nat). nat", sig)
    assert mltt_model(a) == mltt_model(b)


def test_model_commutes_with_substitution(sig):
    for seed in range(100):
        arg = generate(seed, 3).term
        for src in ("fn (f : nat -> nat) => f 0", "fn (p : sig0{U}(y : nat). Id(nat, y, y)) => split0 p with <a, b> => a"):
            body = P(src, sig).body
            assert mltt_model(subst(body, arg)) == msubst(mltt_model(body), mltt_model(arg))


def test_pi_nondependent_arrow(sig):
    assert P("nat -> nat", sig) == Pi1(U, P("nat", sig), P("nat", sig))
