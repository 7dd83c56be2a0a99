from tll.generate import GenTerm, checks, generate, generate_open, generate_value, shrink
from tll.syntax import L, size


def test_every_generated_term_checks(sig):
    for seed in range(300):
        assert checks(generate(seed), sig), seed
        assert checks(generate_open(seed), sig), seed


def test_open_terms_use_their_linear_variables(sig):
    linear = 0
    for seed in range(200):
        gt = generate_open(seed)
        linear += sum(e.psort is L for e in gt.ctx)
    assert linear > 50


def test_generation_is_deterministic():
    for seed in range(20):
        assert generate(seed) == generate(seed)
        assert generate_value(seed) == generate_value(seed)
    assert any(generate(s).term != generate(s + 1).term for s in range(5))


def test_values_have_nonlinear_types(sig):
    from tll.checker import infer_sort
    from tll.syntax import U

    for seed in range(50):
        gt = generate_value(seed)
        assert infer_sort([(e.name, e.type) for e in gt.ctx], gt.type, sig) is U


def mentions_succ(gt: GenTerm) -> bool:
    from tll.syntax import CtorRef, subterms

    return any(type(u) is CtorRef and u.name == "S" for u in subterms(gt.term))


def test_shrinking_keeps_the_failure_and_the_type(sig):
    seeds = [s for s in range(40) if mentions_succ(generate(s)) and size(generate(s).term) > 10]
    assert seeds
    for seed in seeds[:5]:
        gt = generate(seed)
        small = shrink(gt, sig, mentions_succ)
        assert mentions_succ(small)
        assert checks(small, sig)
        assert small.type == gt.type
        assert size(small.term) < size(gt.term)
