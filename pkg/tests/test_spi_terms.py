"""Spi message/process structure: equality, substitution, alpha, kinding."""

import random

from support.debruijn import db_subst_spi, spi_msg_to_db, spi_proc_to_db
from support.spigen import random_closed_proc, random_msg, random_proc

from wscalc.spi import (
    AsymDec,
    AsymEnc,
    Begin,
    Case,
    Cast,
    ChallengeType,
    CheckNonce,
    DepRecord,
    End,
    EndEffect,
    IfEq,
    In,
    KeyHalfType,
    KeyPairType,
    KeyPart,
    Match,
    NameRef,
    NewName,
    Out,
    Par,
    Record,
    RepIn,
    ResponseType,
    STOP,
    SharedKeyType,
    SpiName,
    Split,
    Stop,
    SymDec,
    SymEnc,
    TOP,
    Tagged,
    Trust,
    UN,
    UNIT,
    UnionType,
    Witness,
    alpha_eq_msg,
    alpha_eq_proc,
    fresh_binder,
    fresh_g,
    is_opponent,
    is_public,
    is_tainted,
    msg_equal,
    ref,
    subst_msg,
    subst_proc,
)

N = ref  # shorthand: ref(str) -> NameRef


def chain(tag: str, depth: int, core):
    for _ in range(depth):
        core = Tagged(tag, Record((core,)))
    return core


# ---------------------------------------------------------------------------
# Message equality

def test_msg_equal_basics():
    assert msg_equal(N("a"), N("a"))
    assert not msg_equal(N("a"), N("b"))
    assert not msg_equal(N("a"), NameRef(SpiName("a", "r1")))
    assert msg_equal(Record((N("a"), N("b"))), Record((N("a"), N("b"))))
    assert not msg_equal(Record((N("a"),)), Record((N("a"), N("a"))))
    assert not msg_equal(Tagged("t", N("a")), Tagged("u", N("a")))
    assert msg_equal(SymEnc(N("m"), N("k")), SymEnc(N("m"), N("k")))
    assert not msg_equal(SymEnc(N("m"), N("k")), AsymEnc(N("m"), N("k")))
    assert not msg_equal(KeyPart("enc", N("k")), KeyPart("dec", N("k")))
    assert Record(()) == UNIT


def test_msg_equal_deep_chains():
    a = chain("Num", 12_000, Tagged("null", UNIT))
    b = chain("Num", 12_000, Tagged("null", UNIT))
    c = chain("Num", 12_001, Tagged("null", UNIT))
    assert msg_equal(a, b)
    assert a == b
    assert not msg_equal(a, c)
    assert hash(a) == hash(b)  # shallow hash never recurses


def test_msg_in_hash_containers():
    a = Tagged("t", Record((N("x"), N("y"))))
    b = Tagged("t", Record((N("x"), N("y"))))
    assert len({a, b}) == 1
    assert {a: 1}[b] == 1


# ---------------------------------------------------------------------------
# Substitution

def test_subst_msg_examples():
    x = SpiName("x")
    m = Record((NameRef(x), SymEnc(NameRef(x), N("k"))))
    r = Tagged("t", UNIT)
    assert subst_msg(m, x, r) == Record((r, SymEnc(r, N("k"))))


def test_subst_msg_absent_is_identity_object():
    m = Record((N("a"), Tagged("t", N("b"))))
    assert subst_msg(m, SpiName("zz"), N("c")) is m


def test_subst_proc_no_free_occurrence_is_identity_object():
    p = In(N("net"), SpiName("x"), Out(N("net"), N("x")))
    assert subst_proc(p, SpiName("zz"), N("c")) is p


def test_subst_proc_respects_shadowing():
    x = SpiName("x")
    p = Par((
        Out(N("net"), NameRef(x)),
        In(N("net"), x, Out(N("net"), NameRef(x))),
    ))
    got = subst_proc(p, x, N("v"))
    assert got == Par((
        Out(N("net"), N("v")),
        In(N("net"), x, Out(N("net"), NameRef(x))),
    ))


def test_subst_proc_avoids_capture():
    x, y = SpiName("x"), SpiName("y")
    p = In(N("net"), y, Out(N("net"), Record((NameRef(x), NameRef(y)))))
    got = subst_proc(p, x, NameRef(y))
    want = In(N("net"), SpiName("w"),
              Out(N("net"), Record((NameRef(y), NameRef(SpiName("w"))))))
    assert alpha_eq_proc(got, want)
    assert got.var != y


def test_subst_proc_matches_oracle():
    rng = random.Random(20260815)
    x = SpiName("target")
    for _ in range(400):
        p = random_proc(rng, [x, SpiName("y")], depth=4)
        r = random_msg(rng, [SpiName("y")], depth=2)
        got = spi_proc_to_db(subst_proc(p, x, r), [])
        want = db_subst_spi(spi_proc_to_db(p, []),
                            ("fname", "target", ""), spi_msg_to_db(r, []))
        assert got == want


# ---------------------------------------------------------------------------
# Alpha equivalence and free names

def _rename_binders(p, fresh):
    """Rebuild p with every binder renamed, via subst_proc on the body."""
    def nxt():
        fresh[0] += 1
        return SpiName(f"rb{fresh[0]}")

    match p:
        case In(c, x, cont, a) | RepIn(c, x, cont, a):
            z = nxt()
            cont = _rename_binders(subst_proc(cont, x, NameRef(z)), fresh)
            return type(p)(c, z, cont, a)
        case NewName(x, cont, a):
            z = nxt()
            return NewName(z, _rename_binders(subst_proc(cont, x, NameRef(z)), fresh), a)
        case Par(procs):
            return Par(tuple(_rename_binders(q, fresh) for q in procs))
        case IfEq(l, r, t, e):
            return IfEq(l, r, _rename_binders(t, fresh), _rename_binders(e, fresh))
        case Begin(lab, cont):
            return Begin(lab, _rename_binders(cont, fresh))
        case End(lab, cont):
            return End(lab, _rename_binders(cont, fresh))
        case CheckNonce(r, c, cont):
            return CheckNonce(r, c, _rename_binders(cont, fresh))
        case Witness(f, cont):
            return Witness(f, _rename_binders(cont, fresh))
        case Trust(f, cont):
            return Trust(f, _rename_binders(cont, fresh))
        case Split(src, vs, cont, a):
            zs = tuple(nxt() for _ in vs)
            for old, new in zip(vs, zs):
                cont = subst_proc(cont, old, NameRef(new))
            return Split(src, zs, _rename_binders(cont, fresh), a)
        case Match(src, pat, x, cont, a):
            z = nxt()
            return Match(src, pat, z,
                         _rename_binders(subst_proc(cont, x, NameRef(z)), fresh), a)
        case Case(src, branches):
            out = []
            for tag, x, cont in branches:
                z = nxt()
                out.append((tag, z, _rename_binders(subst_proc(cont, x, NameRef(z)), fresh)))
            return Case(src, tuple(out))
        case SymDec(c, k, x, cont, a) | AsymDec(c, k, x, cont, a):
            z = nxt()
            return type(p)(c, k, z,
                           _rename_binders(subst_proc(cont, x, NameRef(z)), fresh), a)
        case Cast(src, x, cont, a):
            z = nxt()
            return Cast(src, z,
                        _rename_binders(subst_proc(cont, x, NameRef(z)), fresh), a)
        case _:
            return p


def test_alpha_eq_examples():
    x, y = SpiName("x"), SpiName("y")
    p = In(N("net"), x, Out(N("net"), NameRef(x)))
    q = In(N("net"), y, Out(N("net"), NameRef(y)))
    assert alpha_eq_proc(p, q)
    r = In(N("net"), y, Out(N("net"), N("net")))
    assert not alpha_eq_proc(p, r)
    assert alpha_eq_msg(Tagged("t", N("a")), Tagged("t", N("a")))
    assert not alpha_eq_msg(N("a"), N("b"))


def test_alpha_ignores_annotations():
    x = SpiName("x")
    p = NewName(x, STOP, UN)
    q = NewName(x, STOP, None)
    assert alpha_eq_proc(p, q)


def test_alpha_matches_oracle_after_binder_rename():
    rng = random.Random(7)
    for _ in range(200):
        p = random_closed_proc(rng, depth=4)
        q = _rename_binders(p, [0])
        assert alpha_eq_proc(p, q)
        assert spi_proc_to_db(p, []) == spi_proc_to_db(q, [])


def test_alpha_oracle_on_unrelated_pairs():
    rng = random.Random(8)
    for _ in range(200):
        p = random_closed_proc(rng, depth=3)
        q = random_closed_proc(rng, depth=3)
        assert alpha_eq_proc(p, q) == (spi_proc_to_db(p, []) == spi_proc_to_db(q, []))


def _db_free_names(t, acc):
    if isinstance(t, tuple):
        if len(t) == 3 and t[0] == "fname" and isinstance(t[1], str) \
                and isinstance(t[2], str):
            acc.add(SpiName(t[1], t[2]))
        else:
            for s in t:
                _db_free_names(s, acc)
    return acc


def test_fn_matches_oracle():
    rng = random.Random(9)
    for _ in range(200):
        p = random_closed_proc(rng, depth=4)
        assert p.fn == frozenset(_db_free_names(spi_proc_to_db(p, []), set()))


def test_fresh_names_are_distinct():
    a = fresh_g("k")
    b = fresh_g("k")
    assert a != b and a.ident == b.ident == "k"
    avoid = {SpiName("x"), a, b}
    c = fresh_binder("x", avoid)
    assert c not in avoid


# ---------------------------------------------------------------------------
# Opponent discipline

def test_opponent_accepts_plain_processes():
    p = In(N("net"), SpiName("x"),
           Par((Out(N("net"), N("x")), Out(N("net"), N("x")))))
    ok, reason = is_opponent(p)
    assert ok and reason == ""


def test_opponent_accepts_un_annotations():
    p = In(N("net"), SpiName("x"), Stop(), UN)
    assert is_opponent(p)[0]


def test_opponent_rejects_assertions_and_annotations():
    bad = [
        Begin(N("a"), STOP),
        End(N("a"), STOP),
        CheckNonce(N("a"), N("a"), STOP),
        Cast(N("a"), SpiName("x"), STOP, None),
        Witness(N("a"), STOP),
        Trust(N("a"), STOP),
        In(N("net"), SpiName("x"), Stop(), TOP),
        NewName(SpiName("k"), STOP, SharedKeyType(UN)),
    ]
    for p in bad:
        ok, reason = is_opponent(p)
        assert not ok and reason


def test_opponent_checks_nested_positions():
    p = Par((STOP, IfEq(N("a"), N("a"), End(N("a"), STOP), STOP)))
    assert not is_opponent(p)[0]


# ---------------------------------------------------------------------------
# Kinding: one check per clause

def test_kind_un_public_and_tainted():
    assert is_public(UN) and is_tainted(UN)


def test_kind_top_tainted_only():
    assert not is_public(TOP) and is_tainted(TOP)


def test_kind_record_all_fields():
    mixed = DepRecord(((SpiName("a"), UN), (SpiName("b"), TOP)))
    assert not is_public(mixed) and is_tainted(mixed)
    allun = DepRecord(((SpiName("a"), UN),))
    assert is_public(allun) and is_tainted(allun)


def test_kind_union_all_variants():
    mixed = UnionType((("l", UN), ("r", TOP)))
    assert not is_public(mixed) and is_tainted(mixed)
    assert is_public(UnionType((("l", UN),)))


def test_kind_shared_key_needs_both():
    assert is_public(SharedKeyType(UN)) and is_tainted(SharedKeyType(UN))
    assert not is_public(SharedKeyType(TOP))
    assert not is_tainted(SharedKeyType(TOP))


def test_kind_key_pair_needs_both():
    assert is_public(KeyPairType(UN)) and is_tainted(KeyPairType(UN))
    assert not is_public(KeyPairType(TOP))
    assert not is_tainted(KeyPairType(TOP))


def test_kind_enc_half_flips():
    enc_top = KeyHalfType("enc", TOP)
    assert is_public(enc_top)  # may publish: opponent can only encrypt tainted data
    assert not is_tainted(enc_top)
    enc_un = KeyHalfType("enc", UN)
    assert is_public(enc_un) and is_tainted(enc_un)


def test_kind_dec_half_follows_payload():
    dec_top = KeyHalfType("dec", TOP)
    assert not is_public(dec_top) and is_tainted(dec_top)
    dec_un = KeyHalfType("dec", UN)
    assert is_public(dec_un) and is_tainted(dec_un)


def test_kind_public_challenge_requires_no_effects():
    bare = ChallengeType("public")
    assert is_public(bare) and is_tainted(bare)
    laden = ChallengeType("public", (EndEffect(N("a")),))
    assert not is_public(laden) and not is_tainted(laden)


def test_kind_private_challenge_never_public():
    t = ChallengeType("private")
    assert not is_public(t) and is_tainted(t)
    laden = ChallengeType("private", (EndEffect(N("a")),))
    assert not is_public(laden) and is_tainted(laden)


def test_kind_response_mirrors_challenge():
    assert is_public(ResponseType("public")) and is_tainted(ResponseType("public"))
    laden = ResponseType("public", (EndEffect(N("a")),))
    assert not is_public(laden) and not is_tainted(laden)
    assert not is_public(ResponseType("private"))
    assert is_tainted(ResponseType("private"))


# ---------------------------------------------------------------------------
# Structural guards

def test_split_rejects_duplicate_binders():
    try:
        Split(N("m"), (SpiName("x"), SpiName("x")), STOP, (None, None))
        assert False
    except ValueError as e:
        assert "twice" in str(e)


def test_case_rejects_duplicate_tags():
    try:
        Case(N("m"), (("t", SpiName("x"), STOP), ("t", SpiName("y"), STOP)))
        assert False
    except ValueError as e:
        assert "duplicate" in str(e)


def test_keypart_rejects_unknown_kind():
    try:
        KeyPart("sign", N("k"))
        assert False
    except ValueError:
        pass
