"""Spi execution: normalization, communication, safety, exploration."""

import pytest

from wscalc.spi import (
    AsymDec,
    AsymEnc,
    Begin,
    Case,
    Cast,
    ChallengeType,
    CheckNonce,
    End,
    IfEq,
    In,
    KeyPart,
    Match,
    NameRef,
    NewName,
    Out,
    Par,
    Record,
    RepIn,
    STOP,
    SpiName,
    Split,
    SymDec,
    SymEnc,
    Tagged,
    check_safety,
    configure,
    enabled_steps,
    explore_all,
    normalize,
    parse_proc_text,
    parse_spi,
    pretty_msg,
    ref,
    run,
)
from wscalc.spi.runtime import Configuration

NET = ref("net")


def x(n):
    return SpiName(n)


def events(cfg):
    return [(k, pretty_msg(m)) for k, m in cfg.trace]


# ---------------------------------------------------------------------------
# Silent normalization

def test_split_destructures_records():
    p = Split(Record((ref("a"), ref("b"))), (x("u"), x("v")),
              Out(NET, Record((NameRef(x("v")), NameRef(x("u"))))), (None, None))
    cfg = configure(p)
    assert cfg.procs == (Out(NET, Record((ref("b"), ref("a")))),)


def test_split_arity_mismatch_kills_process():
    p = Split(Record((ref("a"),)), (x("u"), x("v")), Out(NET, ref("a")),
              (None, None))
    assert configure(p).procs == ()


def test_match_checks_first_component():
    good = Match(Record((ref("a"), ref("b"), ref("c"))), ref("a"), x("rest"),
                 Out(NET, NameRef(x("rest"))), None)
    cfg = configure(good)
    assert cfg.procs == (Out(NET, Record((ref("b"), ref("c")))),)
    pair = Match(Record((ref("a"), ref("b"))), ref("a"), x("rest"),
                 Out(NET, NameRef(x("rest"))), None)
    assert configure(pair).procs == (Out(NET, ref("b")),)
    bad = Match(Record((ref("z"), ref("b"))), ref("a"), x("rest"),
                Out(NET, NameRef(x("rest"))), None)
    assert configure(bad).procs == ()


def test_case_selects_branch_or_dies():
    m = Tagged("left", ref("v"))
    p = Case(m, (("left", x("y"), Out(NET, NameRef(x("y")))),
                 ("right", x("z"), STOP)))
    assert configure(p).procs == (Out(NET, ref("v")),)
    q = Case(Tagged("other", ref("v")), (("left", x("y"), STOP),))
    assert configure(q).procs == ()


def test_ifeq_picks_deterministic_branch():
    p = IfEq(ref("a"), ref("a"), Out(NET, ref("yes")), Out(NET, ref("no")))
    assert configure(p).procs == (Out(NET, ref("yes")),)
    q = IfEq(ref("a"), ref("b"), Out(NET, ref("yes")), Out(NET, ref("no")))
    assert configure(q).procs == (Out(NET, ref("no")),)


def test_new_names_get_distinct_runtime_stamps():
    p = Par((
        NewName(x("n"), Out(NET, NameRef(x("n"))), None),
        NewName(x("n"), Out(NET, NameRef(x("n"))), None),
    ))
    cfg = configure(p)
    payloads = [q.payload.name for q in cfg.procs]
    assert len(set(payloads)) == 2
    assert all(n.stamp.startswith("r") for n in payloads)
    assert all(n.ident == "n" for n in payloads)


def test_fresh_challenge_is_audited():
    p = NewName(x("np"), STOP, ChallengeType("private"))
    cfg = configure(p)
    assert [e.kind for e in cfg.audit] == ["fresh-challenge"]


def test_sym_decryption_success_and_failure():
    good = SymDec(SymEnc(ref("m"), ref("k")), ref("k"), x("y"),
                  Out(NET, NameRef(x("y"))), None)
    assert configure(good).procs == (Out(NET, ref("m")),)
    wrong_key = SymDec(SymEnc(ref("m"), ref("k")), ref("k2"), x("y"),
                       Out(NET, NameRef(x("y"))), None)
    assert configure(wrong_key).procs == ()
    not_cipher = SymDec(ref("m"), ref("k"), x("y"), STOP, None)
    assert configure(not_cipher).procs == ()


def test_asym_decryption_needs_complementary_half():
    cipher = AsymEnc(ref("m"), KeyPart("enc", ref("kp")))
    good = AsymDec(cipher, KeyPart("dec", ref("kp")), x("y"),
                   Out(NET, NameRef(x("y"))), None)
    assert configure(good).procs == (Out(NET, ref("m")),)
    same_half = AsymDec(cipher, KeyPart("enc", ref("kp")), x("y"), STOP, None)
    assert configure(same_half).procs == ()
    other_pair = AsymDec(cipher, KeyPart("dec", ref("other")), x("y"), STOP, None)
    assert configure(other_pair).procs == ()


def test_nonce_check_audit_states():
    n = NameRef(x("n"))
    cast_then_check = Cast(n, x("c"), CheckNonce(NameRef(x("c")), n, STOP), None)
    cfg = configure(cast_then_check)
    assert [e.kind for e in cfg.audit] == ["cast", "check"]

    unchecked = CheckNonce(n, n, STOP)
    cfg = configure(unchecked)
    assert [e.kind for e in cfg.audit] == ["check-without-cast"]

    double = Cast(n, x("c"),
                  CheckNonce(n, n, CheckNonce(n, n, STOP)), None)
    cfg = configure(double)
    assert [e.kind for e in cfg.audit] == ["cast", "check", "recheck"]


def test_nonce_check_mismatch_kills_process():
    p = CheckNonce(NameRef(x("a")), NameRef(x("b")), Out(NET, ref("leak")))
    assert configure(p).procs == ()


def test_stop_dropped_and_par_flattened():
    p = Par((STOP, Par((Out(NET, ref("a")), STOP)), Out(NET, ref("b"))))
    cfg = configure(p)
    assert cfg.procs == (Out(NET, ref("a")), Out(NET, ref("b")))


# ---------------------------------------------------------------------------
# Communication

def test_out_in_communication():
    p = Par((Out(NET, ref("payload")),
             In(NET, x("y"), Out(ref("done"), NameRef(x("y"))))))
    cfg = configure(p)
    steps = enabled_steps(cfg)
    assert len(steps) == 1 and steps[0].kind == "comm"
    r = run(cfg, seed=0)
    assert r.config.procs == (Out(ref("done"), ref("payload")),)


def test_no_communication_across_channels():
    p = Par((Out(ref("c1"), ref("m")), In(ref("c2"), x("y"), STOP)))
    assert enabled_steps(configure(p)) == []


def test_replicated_input_survives():
    p = Par((Out(NET, ref("m1")), Out(NET, ref("m2")),
             RepIn(NET, x("y"), Out(ref("sink"), NameRef(x("y"))))))
    r = run(configure(p), seed=1)
    sinks = sorted(pretty_msg(q.payload) for q in r.config.procs
                   if isinstance(q, Out) and q.channel == ref("sink"))
    assert sinks == ["m1", "m2"]
    assert any(isinstance(q, RepIn) for q in r.config.procs)


def test_unread_outputs_persist():
    cfg = configure(Out(ref("k"), ref("result")))
    assert enabled_steps(cfg) == []
    assert run(cfg, seed=0).config.procs == (Out(ref("k"), ref("result")),)


# ---------------------------------------------------------------------------
# Safety of traces

def label(s):
    return Tagged("send", ref(s))


def test_check_safety_accepts_matched_traces():
    t = (("begin", label("a")), ("end", label("a")))
    assert check_safety(t) is None
    t2 = (("begin", label("a")), ("begin", label("a")),
          ("end", label("a")), ("end", label("a")))
    assert check_safety(t2) is None


def test_check_safety_flags_unmatched_end():
    v = check_safety((("end", label("a")),))
    assert v is not None and v.index == 0 and v.begins_before == 0

    v = check_safety((("begin", label("a")), ("end", label("a")),
                      ("end", label("a"))))
    assert v is not None and v.index == 2 and v.begins_before == 1


def test_check_safety_labels_must_match_exactly():
    v = check_safety((("begin", label("a")), ("end", label("b"))))
    assert v is not None and pretty_msg(v.label) == "send(b)"


def test_begin_end_are_branching_steps():
    cfg = configure(Par((Begin(label("a"), STOP), End(label("a"), STOP))))
    res = explore_all(cfg, max_states=50, stop_on_violation=True)
    assert res.violation is not None  # the bad interleaving is reachable
    traces = {tuple(k for k, _ in t) for t in res.terminal_traces}
    assert ("begin", "end") in traces or res.violation


# ---------------------------------------------------------------------------
# Simulation and exploration

NAIVE = """
free net hello a b
process
new kAB : Key((m: Un));
( begin send(a, b, hello);
  out net {greeting(hello)}kAB
| repeat in net (x);
  decrypt x as {y}kAB;
  case y of greeting(m) -> { end send(a, b, m); stop }
)
"""

REPLAY = "in net (x); (out net x | out net x)"


def naive_config(with_opponent=False):
    f = parse_spi(NAIVE)
    procs = [f.process]
    if with_opponent:
        procs.append(parse_proc_text(REPLAY))
    return configure(Par(tuple(procs)))


def test_run_is_deterministic_per_seed():
    a = run(naive_config(), seed=7)
    b = run(naive_config(), seed=7)
    assert events(a.config) == events(b.config)
    assert a.steps == b.steps


def test_naive_system_runs_safe_alone():
    for seed in range(10):
        r = run(naive_config(), seed=seed)
        assert r.violation is None
        assert events(r.config) == [("begin", "send(a, b, hello)"),
                                    ("end", "send(a, b, hello)")]


def test_naive_system_exhaustive_alone():
    res = explore_all(naive_config(), max_states=200)
    assert res.violation is None
    assert not res.truncated
    assert len(res.terminal_traces) == 1
    only = res.terminal_traces[0]
    assert [k for k, _ in only] == ["begin", "end"]


def test_replay_opponent_breaks_naive_system():
    res = explore_all(naive_config(with_opponent=True), max_states=500)
    assert res.violation is not None
    assert res.violation.begins_before == 1
    assert pretty_msg(res.violation.label) == "send(a, b, hello)"


def test_replay_found_by_random_runs_too():
    found = False
    for seed in range(30):
        r = run(naive_config(with_opponent=True), seed=seed, fuel=200)
        if r.violation is not None:
            found = True
            break
    assert found


def test_out_of_fuel_reported():
    ping = parse_proc_text(
        "( out net tick() | repeat in net (x); out net x )")
    r = run(configure(ping), seed=0, fuel=25)
    assert r.out_of_fuel and r.steps == 25


def test_explore_truncation_flag():
    ping = parse_proc_text(
        "( out net tick() | repeat in net (x); ( out net x | out net x ) )")
    res = explore_all(configure(ping), max_states=40)
    assert res.truncated


def test_explore_watch_collects_deliveries():
    src = "( out k result(alice) | out net noise() )"
    res = explore_all(configure(parse_proc_text(src)), max_states=50,
                      watch=SpiName("k"))
    assert list(res.deliveries) == ["result(alice)"]


def test_canonical_dedup_merges_fresh_name_orderings():
    # two producers mint fresh names and race to a shared sink; states
    # differing only in mint order collapse under canonicalization
    src = """
( in go1 (u); new n; out sink n
| in go2 (u); new n; out sink n
| out go1 () | out go2 ()
)
"""
    res = explore_all(configure(parse_proc_text(src)), max_states=200)
    assert not res.truncated
    assert res.states <= 8
