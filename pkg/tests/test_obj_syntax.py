"""Substitution, alpha-equivalence, and numeral helpers."""

import random

from wscalc.obj import (
    FieldGet,
    If,
    Invoke,
    Let,
    NULL,
    NewObject,
    Prin,
    Running,
    Val,
    Var,
    alpha_eq,
    num_value,
    substitute,
    value_as_int,
    values_equal,
)
from support.debruijn import (
    db_subst_body,
    obj_body_to_db,
    obj_value_to_db,
)
from support.gen import raw_body, raw_value


def test_substitute_value_positions():
    body = Invoke(Var("x"), "m", (Var("x"), Var("y")))
    out = substitute(body, "x", NULL)
    assert out == Invoke(NULL, "m", (NULL, Var("y")))


def test_substitute_respects_shadowing():
    body = Let("x", Val(Var("x")), Val(Var("x")))
    out = substitute(body, "x", Prin("Alice"))
    assert out == Let("x", Val(Prin("Alice")), Val(Var("x")))


def test_substitute_avoids_capture():
    # naive replacement of x by y under the binder y would capture
    body = Let("y", Val(NULL), Val(NewObject("C", (Var("x"), Var("y")))))
    out = substitute(body, "x", Var("y"))
    assert isinstance(out, Let)
    assert out.var != "y"
    inner = out.body
    assert inner == Val(NewObject("C", (Var("y"), Var(out.var))))


def test_substitute_no_op_when_absent():
    body = Let("x", Val(NULL), Val(Var("x")))
    assert substitute(body, "z", Prin("Bob")) is body


def test_alpha_eq_examples():
    a = Let("x", Val(NULL), Val(Var("x")))
    b = Let("y", Val(NULL), Val(Var("y")))
    c = Let("y", Val(NULL), Val(NULL))
    assert alpha_eq(a, b)
    assert not alpha_eq(a, c)
    assert not alpha_eq(a, Val(NULL))


def test_alpha_eq_free_vars_must_match():
    assert not alpha_eq(Val(Var("x")), Val(Var("y")))
    assert alpha_eq(Val(Var("x")), Val(Var("x")))


def test_alpha_eq_running_principal():
    assert alpha_eq(Running("p", Val(NULL)), Running("p", Val(NULL)))
    assert not alpha_eq(Running("p", Val(NULL)), Running("q", Val(NULL)))


def test_fv_cached_on_nodes():
    body = Let("x", Val(Var("y")), Val(Var("x")))
    assert body.fv == {"y"}
    assert Val(Var("x")).fv == {"x"}
    assert num_value(3).fv == frozenset()


def test_substitution_matches_debruijn_oracle():
    rng = random.Random(101)
    for _ in range(400):
        a = raw_body(rng, rng.randrange(1, 5))
        v = raw_value(rng, 2)
        x = rng.choice(["x", "y", "z"])
        got = obj_body_to_db(substitute(a, x, v), [])
        want = db_subst_body(obj_body_to_db(a, []), x, obj_value_to_db(v, []))
        assert got == want


def test_alpha_eq_matches_debruijn_oracle():
    rng = random.Random(102)
    bodies = [raw_body(rng, rng.randrange(0, 4)) for _ in range(120)]
    for i in range(0, len(bodies), 2):
        a, b = bodies[i], bodies[i + 1]
        assert alpha_eq(a, b) == (obj_body_to_db(a, []) == obj_body_to_db(b, []))
        assert alpha_eq(a, a)


def test_alpha_eq_after_binder_rename():
    rng = random.Random(103)
    for _ in range(200):
        a = raw_body(rng, 3)
        if not isinstance(a, Let):
            continue
        renamed = Let("q", a.bound, substitute(a.body, a.var, Var("q")))
        if "q" in a.body.fv or "q" == a.var:
            continue
        assert alpha_eq(a, renamed)


def test_numeral_encoding():
    assert num_value(0) == NewObject("Num", (NULL,))
    assert num_value(2) == NewObject("Num", (NewObject("Num", (NewObject("Num", (NULL,)),)),))
    for n in (0, 1, 7, 300):
        assert value_as_int(num_value(n)) == n
    assert value_as_int(NULL) is None
    assert value_as_int(NewObject("Num", (Prin("Alice"),))) is None


def test_values_equal_deep_shared_structure():
    big = num_value(50_000)
    assert values_equal(big, big)
    other = NewObject("Num", (big.args[0],))
    assert values_equal(big, other)
    assert not values_equal(big, num_value(50_001))


def test_values_equal_basics():
    assert values_equal(NULL, NULL)
    assert not values_equal(NULL, num_value(0))
    assert values_equal(Prin("Alice"), Prin("Alice"))
    assert not values_equal(Prin("Alice"), Prin("Bob"))
    assert not values_equal(NewObject("C", ()), NewObject("D", ()))


def test_field_and_if_are_bodies_not_values():
    body = If(Var("x"), NULL, Val(NULL), FieldGet(Var("x"), "f"))
    assert body.fv == {"x"}
