from tll.checker import check_program
from tll.evaluation import Stepper, is_value, peval, pstep, ptrace
from tll.generate import generate
from tll.parser import parse_term
from tll.pretty import pretty
from tll.syntax import APair, CtorRef, DefRef, L, Lam1, ProjL, Var, Box, size


def P(src, sig, scope=()):
    return parse_term(src, sig, scope=list(scope))


def test_beta1_on_a_value(sig):
    m = P("(lam1{L}(x:<>). x) (lam1{U}(y:<>). y)", sig)
    assert pstep(m, sig) == P("lam1{U}(y:<>). y", sig)


def test_beta0_substitutes_without_evaluating(sig):
    m = P("(lam0{L}(A:<>). lam1{L}(x:<>). x) <>", sig)
    assert pstep(m, sig) == P("lam1{L}(x:<>). x", sig)


def test_rewrite_discards_its_proof(sig):
    # the proof position holds a non-value that would step if evaluated
    stuck = P("(lam1{U}(x:<>). x) ((lam1{U}(y:<>). y) 0)", sig)
    m = P("rew[<>] 0 in <>", sig)
    m = type(m)(m.motive, m.h, stuck, names=m.names)
    assert pstep(m, sig) == P("0", sig)


class Counting(Stepper):
    """Counts steps taken inside one watched subterm."""

    def __init__(self, sig, watched):
        super().__init__(sig, erased=True)
        self.watched = watched
        self.inside = 0

    def step(self, m):
        if m is self.watched:
            self.inside += 1
        return super().step(m)


def test_projection_never_touches_the_other_side(sig):
    busy = P("(lam1{U}(x:<>). x) ((lam1{U}(y:<>). y) 0)", sig)
    left = P("(lam1{U}(x:<>). x) 1", sig)
    m = ProjL(APair(L, left, busy))
    st = Counting(sig, busy)
    t, steps = m, 0
    while not st.value(t):
        t = st.step(t)
        steps += 1
    assert t == P("1", sig)
    assert steps == 2
    assert st.inside == 0


def test_values_take_no_steps(sig):
    v = P("lam1{L}(x:<>). x", sig)
    assert is_value(v, sig)
    tr = ptrace(v, sig)
    assert tr.steps == 0 and tr.result == v


def test_beta1_waits_for_its_argument(sig):
    m = P("(lam1{U}(x:<>). 7) ((lam1{U}(y:<>). y) 0)", sig)
    tr = ptrace(m, sig, erased=True)
    assert tr.rules == ["beta1", "beta1"]
    # the argument was reduced first
    assert tr.terms[1] == P("(lam1{U}(x:<>). 7) 0", sig)


def test_neutral_applications_are_values_only_by_choice(sig):
    m = P("f 0", sig, ["f"])
    assert is_value(m, sig)
    assert not is_value(m, sig, neutral=False)
    assert pstep(m, sig) is None


# -- linear lists ---------------------------------------------------------------------


def to_nat(t) -> int:
    n = 0
    while t.name == "S":
        n, t = n + 1, t.args[0]
    assert t.name == "zero"
    return n


def decode(v, sig) -> list[int]:
    out = []
    while v.name == "lcons":
        hd, tl = v.args[-2:]
        assert hd.name == "lbox_mk"
        out.append(to_nat(hd.args[0]))
        v = tl
    assert v.name == "lnil"
    return out


def encode(xs: list[int]) -> str:
    src = "lnil"
    for x in reversed(xs):
        src = f"lcons (lbox_mk {x}) ({src})"
    return src


def test_lappend_agrees_with_list_concatenation(corpus):
    sig = corpus["llist"]
    ty = P("llist lbox", sig)
    for xs, ys in [([1, 2], [3, 4]), ([0, 5], [7, 2]), ([], [1, 2]), ([3], [])]:
        m = P(f"lappend _ ({encode(xs)}) ({encode(ys)})", sig)
        res = check_program([], m, ty, sig)
        assert decode(peval(res.erased, sig, erased=True), sig) == xs + ys
        assert decode(peval(res.term, sig), sig) == xs + ys


def test_corpus_mains_evaluate(corpus):
    expected = {"llist": "6", "identity": "2", "closure": "lam1{L}(y:<>). y"}
    for name, sig in corpus.items():
        if "main" not in sig.defs:
            continue
        d = sig.defs["main"]
        v = peval(DefRef("main"), sig, erased=True)
        assert is_value(v, sig, neutral=False)
        # the source program reaches a value whose erasure is v
        w = peval(DefRef("main"), sig)
        assert check_program([], w, d.type, sig).erased == v
        if name in expected:
            assert pretty(v, sig=sig) == expected[name], name


def test_generated_programs_make_progress(sig):
    for seed in range(150):
        gt = generate(seed, 5)
        erased = check_program([], gt.term, gt.type, sig).erased
        for t in ptrace(erased, sig, erased=True).terms[:-1]:
            assert not is_value(t, sig, neutral=False)
        assert is_value(peval(gt.term, sig), sig, neutral=False)
