"""Context merge and constraint, checked exhaustively on small contexts."""

import itertools

import pytest

from tll.contexts import PEntry, constrain, merge, restrict_others, splits
from tll.errors import TLLError
from tll.syntax import IndRef, L, U

NAT = IndRef("nat")
NAMES = "abcd"


def contexts(max_len=4):
    """Every context over distinct names a..d with either sort."""
    for n in range(max_len + 1):
        for names in itertools.combinations(NAMES, n):
            for sorts in itertools.product((U, L), repeat=n):
                yield tuple(PEntry(x, s, NAT, NAMES.index(x)) for x, s in zip(names, sorts))


def oracle_merge(d1, d2):
    """Merge read off the rules: shared entries must be identical and U."""
    m1, m2 = {e.name: e for e in d1}, {e.name: e for e in d2}
    for x in m1.keys() & m2.keys():
        if m1[x] != m2[x] or m1[x].sort is L:
            return None
    return tuple(sorted({**m1, **m2}.values(), key=lambda e: e.pos))


def try_merge(d1, d2):
    try:
        return merge(d1, d2)
    except TLLError as e:
        assert e.code == "undefined-merge"
        return None


ALL = list(contexts())
SMALL = list(contexts(3))


def test_merge_matches_oracle_exhaustively():
    for d1 in SMALL:
        for d2 in SMALL:
            assert try_merge(d1, d2) == oracle_merge(d1, d2)


def test_merge_is_commutative_and_associative():
    for d1, d2 in itertools.product(SMALL, repeat=2):
        assert try_merge(d1, d2) == try_merge(d2, d1)
    sample = list(contexts(2))
    for d1, d2, d3 in itertools.product(sample, repeat=3):
        left = try_merge(d1, d2)
        right = try_merge(d2, d3)
        a = None if left is None else try_merge(left, d3)
        b = None if right is None else try_merge(d1, right)
        if a is not None and b is not None:
            assert a == b


def test_self_merge_defined_iff_unrestricted():
    for d in ALL:
        assert (try_merge(d, d) is not None) == constrain(d, U)


def test_constraint():
    for d in ALL:
        assert constrain(d, L)
        assert constrain(d, U) == all(e.sort is U for e in d)


def test_splits_are_exactly_the_merges():
    for d in ALL:
        found = set(splits(d))
        assert len(found) == 2 ** sum(e.sort is L for e in d)
        for d1, d2 in found:
            assert merge(d1, d2) == d
        # conversely every merge back to d that keeps all U entries on both
        # sides is one of the enumerated splits
        shared = {e for e in d if e.sort is U}
        subs = [s for s in ALL if shared <= set(s) <= set(d)]
        for d1, d2 in itertools.product(subs, repeat=2):
            if try_merge(d1, d2) == d:
                assert (d1, d2) in found


def test_restrict_others():
    d = (PEntry("a", L, NAT, 0), PEntry("b", U, NAT, 1))
    assert restrict_others(d, "a")
    assert not restrict_others(d, "b")
    with pytest.raises(TLLError):
        restrict_others(d, "z")


def test_conflicting_annotations_do_not_merge():
    a = (PEntry("a", U, NAT, 0),)
    b = (PEntry("a", U, IndRef("other"), 0),)
    assert try_merge(a, b) is None
