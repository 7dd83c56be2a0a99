"""de Bruijn operations against a named-variable oracle."""

import itertools
import random

from tll.syntax import (
    App,
    Box,
    Lam1,
    Pair1,
    Sig1Elim,
    U,
    Var,
    free_vars,
    instantiate,
    is_closed,
    shift,
    size,
    subst,
)

# -- the oracle: terms with names, capture-avoiding substitution by renaming --------

_fresh = itertools.count()


def to_named(t, env):
    match t:
        case Var(idx=i):
            return ("var", env[len(env) - 1 - i])
        case Lam1():
            x = f"x{next(_fresh)}"
            return ("lam", x, to_named(t.body, env + [x]))
        case App():
            return ("app", to_named(t.fun, env), to_named(t.arg, env))
        case Pair1():
            return ("pair", to_named(t.fst, env), to_named(t.snd, env))
        case Sig1Elim():
            x, y = f"x{next(_fresh)}", f"y{next(_fresh)}"
            return ("split", to_named(t.scrut, env), x, y, to_named(t.branch, env + [x, y]))
        case Box():
            return ("box",)
    raise TypeError(t)


def to_db(n, env):
    match n:
        case ("var", x):
            return Var(len(env) - 1 - max(i for i, y in enumerate(env) if y == x))
        case ("lam", x, b):
            return Lam1(U, Box(), to_db(b, env + [x]))
        case ("app", f, a):
            return App(to_db(f, env), to_db(a, env))
        case ("pair", a, b):
            return Pair1(U, to_db(a, env), to_db(b, env))
        case ("split", s, x, y, b):
            return Sig1Elim(None, to_db(s, env), to_db(b, env + [x, y]))
        case ("box",):
            return Box()
    raise TypeError(n)


def fv(n):
    match n:
        case ("var", x):
            return {x}
        case ("lam", x, b):
            return fv(b) - {x}
        case ("app", f, a) | ("pair", f, a):
            return fv(f) | fv(a)
        case ("split", s, x, y, b):
            return fv(s) | (fv(b) - {x, y})
    return set()


def rename(n, old, new):
    return named_subst(n, old, ("var", new))


def named_subst(n, x, s):
    match n:
        case ("var", y):
            return s if y == x else n
        case ("lam", y, b):
            if y == x:
                return n
            if y in fv(s):
                z = f"r{next(_fresh)}"
                b, y = rename(b, y, z), z
            return ("lam", y, named_subst(b, x, s))
        case ("app", f, a):
            return ("app", named_subst(f, x, s), named_subst(a, x, s))
        case ("pair", a, b):
            return ("pair", named_subst(a, x, s), named_subst(b, x, s))
        case ("split", sc, y1, y2, b):
            sc = named_subst(sc, x, s)
            if x in (y1, y2):
                return ("split", sc, y1, y2, b)
            for y in (y1, y2):
                if y in fv(s):
                    z = f"r{next(_fresh)}"
                    b = rename(b, y, z)
                    y1, y2 = (z, y2) if y == y1 else (y1, z)
            return ("split", sc, y1, y2, named_subst(b, x, s))
    return n


def random_term(rng, scope, depth):
    if depth == 0 or rng.random() < 0.25:
        if scope and rng.random() < 0.85:
            return Var(rng.randrange(scope))
        return Box()
    k = rng.randrange(4)
    if k == 0:
        return Lam1(U, Box(), random_term(rng, scope + 1, depth - 1))
    if k == 1:
        return App(random_term(rng, scope, depth - 1), random_term(rng, scope, depth - 1))
    if k == 2:
        return Pair1(U, random_term(rng, scope, depth - 1), random_term(rng, scope, depth - 1))
    return Sig1Elim(None, random_term(rng, scope, depth - 1), random_term(rng, scope + 2, depth - 1))


def test_subst_agrees_with_named_substitution():
    rng = random.Random(7)
    outer = ["a", "b", "c"]
    for _ in range(1000):
        body = random_term(rng, len(outer) + 1, 5)
        arg = random_term(rng, len(outer), 3)
        want = to_db(named_subst(to_named(body, outer + ["hole"]), "hole", to_named(arg, outer)), outer)
        assert subst(body, arg) == want


def test_instantiate_is_iterated_subst():
    rng = random.Random(11)
    for _ in range(300):
        body = random_term(rng, 4, 4)
        a, b = random_term(rng, 2, 2), random_term(rng, 2, 2)
        # the last argument replaces Var(0)
        assert instantiate(body, (a, b)) == subst(subst(body, shift(b, 1)), a)


def test_shift_round_trip_and_free_vars():
    rng = random.Random(3)
    for _ in range(300):
        t = random_term(rng, 3, 4)
        up = shift(t, 2)
        assert free_vars(up) == {i + 2 for i in free_vars(t)}
        assert shift(up, -2) == t
        assert size(up) == size(t)


def test_closed_terms_are_fixed_by_shift_and_subst():
    t = Lam1(U, Box(), App(Var(0), Var(0)))
    assert is_closed(t)
    assert shift(t, 5) == t
    assert subst(Lam1(U, Box(), t), Box()) == Lam1(U, Box(), t)


def test_subst_under_binder_shifts_the_argument():
    # (λy. x y)[z/x] with z free one level out
    body = Lam1(U, Box(), App(Var(1), Var(0)))
    assert subst(body, Var(3)) == Lam1(U, Box(), App(Var(4), Var(0)))


def test_names_do_not_affect_equality():
    assert Var(0, name="x") == Var(0, name="y")
    assert Lam1(U, Box(), Var(0), name="a") == Lam1(U, Box(), Var(0), name="b")
