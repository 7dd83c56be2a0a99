import pytest

from tll.checker import check_logical, check_program, check_variable
from tll.declarative import declarative_check
from tll.errors import TLLError
from tll.meta import exhaustive_agreement
from tll.parser import parse_term
from tll.syntax import IndRef, L, Loc, SortTerm, U

NAT = IndRef("nat")
ERASURE_TERM = "lam0{L}(A:U). lam1{L}(x:A). x"
ERASURE_TYPE = "pi0{L}(A:U). pi1{L}(x:A). A"


def P(src, sig, scope=()):
    return parse_term(src, sig, scope=list(scope))


def fails_with(code, g, m, a, sig):
    with pytest.raises(TLLError) as e:
        check_program(g, m, a, sig)
    assert e.value.code == code, e.value
    return e.value


def test_erasure_example_is_a_program(sig):
    res = check_program([], P(ERASURE_TERM, sig), P(ERASURE_TYPE, sig), sig)
    assert res.consumed == frozenset()
    assert declarative_check([], P(ERASURE_TERM, sig), P(ERASURE_TYPE, sig), sig)


# A : L is logical only; the program context is empty
LIN = [("A", SortTerm(L), None)]


def test_unused_linear_binder(sig):
    m = P("lam1{L}(x:A). lam1{L}(y:A). x", sig, ["A"])
    a = P("pi1{L}(x:A). pi1{L}(y:A). A", sig, ["A"])
    err = fails_with("linear-unused", LIN, m, a, sig)
    assert "y" in err.message


def test_nonlinear_closure_cannot_capture(sig):
    g = LIN + [("B", SortTerm(U), None)]
    m = P("lam1{L}(x:A). lam1{U}(y:B). x", sig, ["A", "B"])
    a = P("pi1{L}(x:A). pi1{U}(y:B). A", sig, ["A", "B"])
    fails_with("constraint-violation", g, m, a, sig)
    assert not declarative_check(g, m, a, sig)


def test_duplicated_linear_argument(sig):
    g = [
        ("A", SortTerm(L), None),
        ("B", SortTerm(U), None),
        ("f", P("A -o A -o B", sig, ["A", "B"]), U),
        ("x", P("A", sig, ["A", "B", "f"]), L),
    ]
    names = ["A", "B", "f", "x"]
    err = fails_with("linear-duplicated", g, P("f x x", sig, names), P("B", sig, names), sig)
    assert "x" in err.message


def test_subset_pair_second_component_is_logical(sig):
    m = P("<1, refl(2)>0{U}", sig)
    a = P("sig0{U}(x : nat). Id(nat, x + 1, 2)", sig)
    res = check_program([], m, a, sig)
    assert res.consumed == frozenset()
    assert res.erased == P("<1, <>>0{U}", sig)


def test_additive_pair_shares_its_context(sig):
    g = [("x", P("nat -o nat", sig), L)]
    m = P("<x, x>&{L}", sig, ["x"])
    assert check_program(g, m, P("with{L}(nat -o nat, nat -o nat)", sig), sig).consumed == {"x"}
    # each side must consume the whole context
    m2 = P("<x, fn (n : nat) => n>&{L}", sig, ["x"])
    with pytest.raises(TLLError):
        check_program(g, m2, P("with{L}(nat -o nat, nat -> nat)", sig), sig)
    fails_with("constraint-violation", g, P("<x, x>&{U}", sig, ["x"]), P("with{U}(nat -o nat, nat -o nat)", sig), sig)


def test_rewrite_proof_is_checked_logically(sig):
    # the proof mentions a linear variable only in a logical position
    g = [("v", P("nat -o nat", sig), L)]
    m = P("rew [y, p => nat -o nat] v in refl(0)", sig, ["v"])
    res = check_program(g, m, P("nat -o nat", sig), sig)
    assert res.consumed == {"v"}


def test_check_variable(sig):
    ty, used = check_variable([("x", NAT, L)], "x", sig)
    assert ty == NAT and used == {"x"}
    ty, used = check_variable([("x", NAT, U)], "x", sig)
    assert used == frozenset()
    with pytest.raises(TLLError) as e:
        check_variable([("x", NAT, None)], "x", sig)
    assert e.value.code == "relevance-violation"


def test_irrelevant_argument_may_mention_logical_variables(sig):
    # A is only in Γ, yet may be the Π⁰ argument
    g = [("A", SortTerm(U), None), ("x", P("A", sig, ["A"]), U)]
    m = P("(lam0{U}(B : U). lam1{U}(y : B). y) A x", sig, ["A", "x"])
    assert check_program(g, m, P("A", sig, ["A", "x"]), sig).consumed == frozenset()


def test_locations_are_rejected(sig):
    with pytest.raises(TLLError) as e:
        check_logical([], Loc(0), NAT, sig)
    assert e.value.code == "location-in-source"


def test_program_reflection_on_generated_terms(sig):
    from tll.generate import generate, generate_open

    for seed in range(150):
        for gt in (generate(seed, 5), generate_open(seed)):
            res = check_program(gt.gamma(), gt.term, gt.type, sig)
            logical = [(n, t, None) for n, t, _ in gt.gamma()]
            check_logical(logical, gt.term, gt.type, sig)
            # consumption is exactly the linear entries
            assert res.consumed == {e.name for e in gt.ctx if e.psort is L}


def test_weakening(sig):
    from tll.generate import generate

    for seed in range(80):
        gt = generate(seed, 4)
        # closed terms: prefixing Γ or Δ with unused entries shifts nothing
        check_program([("w", NAT, None)], gt.term, gt.type, sig)
        check_program([("w", NAT, U)], gt.term, gt.type, sig)
        with pytest.raises(TLLError):
            check_program([("w", NAT, L)], gt.term, gt.type, sig)


def test_declarative_agreement_on_small_judgments(sig):
    cases, cex = exhaustive_agreement(sig, max_size=3)
    assert cex is None, cex
    assert cases > 1000
