import pytest

from tll.erasure import erase, is_erased
from tll.errors import TLLError
from tll.generate import generate, generate_open
from tll.parser import parse_term
from tll.pretty import pretty
from tll.checker import check_program
from tll.syntax import Box, IndRef, L, Match, Sig0Elim, Sig1Elim, U, Var, size, subterms

NAT = IndRef("nat")


def P(src, sig, scope=()):
    return parse_term(src, sig, scope=list(scope))


def test_worked_example(sig):
    m = P("(lam0{L}(A:U). lam1{L}(x:A). x) (pi0{U}(B:L). pi1{U}(x:B). B)", sig)
    t = "pi0{U}(B:L). pi1{U}(x:B). B"
    a = P(f"pi1{{L}}(x : {t}). {t}", sig)
    out = erase([], m, a, sig)
    assert pretty(out, sig=sig) == "(lam0{L}(A:<>). lam1{L}(x:<>). x) <>"


def test_variables_erase_to_themselves(sig):
    assert erase([("x", NAT, L)], Var(0, name="x"), NAT, sig) == Var(0)


def test_subset_pair(sig):
    out = erase([], P("<1, refl(2)>0{U}", sig), P("sig0{U}(x : nat). Id(nat, x + 1, 2)", sig), sig)
    assert pretty(out, sig=sig) == "<1, <>>0{U}"


def test_rewrite_keeps_only_the_body(sig):
    g = [("h", NAT, U)]
    out = erase(g, P("rew [y, p => nat] h in refl(0)", sig, ["h"]), NAT, sig)
    assert pretty(out, ["h"], sig=sig) == "rew[<>] h in <>"


def test_erasure_needs_a_well_typed_program(sig):
    with pytest.raises(TLLError):
        erase([], P("0", sig), P("nat -> nat", sig), sig)


def test_recogniser(sig):
    assert is_erased(Box())
    assert not is_erased(P("lam1{L}(x:nat). x", sig))
    assert is_erased(P("lam1{L}(x:<>). x", sig))
    assert not is_erased(P("<1, refl(1)>0{U}", sig))


def source_size(t) -> int:
    """Size with every omitted motive counted as one leaf, as erasure prints it."""
    omitted = sum(1 for u in subterms(t) if type(u) in (Sig0Elim, Sig1Elim, Match) and u.motive is None)
    return size(t) + omitted


def test_generated_programs(sig):
    for seed in range(200):
        for gt in (generate(seed, 5), generate_open(seed)):
            res = check_program(gt.gamma(), gt.term, gt.type, sig)
            assert is_erased(res.erased, sig)
            assert size(res.erased) <= source_size(res.term)


def test_corpus_erased_forms(corpus):
    for sig in corpus.values():
        for d in sig.defs.values():
            if d.level == "program" and d.erased is not None:
                assert is_erased(d.erased, sig), d.name
