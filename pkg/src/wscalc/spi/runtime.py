"""Execution of spi processes.

A configuration is a soup of processes plus the trace of begin/end
events committed so far. Purely local steps (destructuring, equality
tests, decryption, fresh-name minting, nonce bookkeeping) are
deterministic and independent across processes, so they are applied
eagerly; only communications and the trace-writing begin/end steps
branch. `run` walks one random interleaving; `explore_all` walks all of
them with duplicate states pruned by a canonical serialization that
renumbers runtime-fresh names (imperfect canonicalization only costs
extra states, never results).

Safety: a trace is safe when every end event is preceded by a distinct
begin with the same label. The audit stream separately records nonce
casts and checks, flagging nonces checked without (or more often than)
a cast; it is diagnostic and never affects reduction.
"""

from __future__ import annotations

import random
import re
from collections import deque
from dataclasses import dataclass, replace
from typing import Optional

from .printer import pretty_msg, pretty_proc
from .terms import (
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
    Message,
    NameRef,
    NewName,
    Out,
    Par,
    Process,
    Record,
    RepIn,
    SpiName,
    Split,
    Stop,
    SymDec,
    SymEnc,
    Tagged,
    Trust,
    Witness,
    msg_equal,
    subst_proc,
)


@dataclass(frozen=True)
class AuditEvent:
    kind: str  # fresh-challenge | cast | check | check-without-cast | recheck | witness | trust
    detail: str


@dataclass(frozen=True)
class Configuration:
    procs: tuple[Process, ...]
    trace: tuple[tuple[str, Message], ...] = ()
    audit: tuple[AuditEvent, ...] = ()
    next_fresh: int = 1
    casts: frozenset[SpiName] = frozenset()
    checked: frozenset[SpiName] = frozenset()


def configure(*procs: Process) -> Configuration:
    return normalize(Configuration(procs=tuple(procs)))


@dataclass(frozen=True)
class Violation:
    index: int  # offset of the offending end event in the trace
    label: Message
    begins_before: int  # same-label begins seen earlier (all already matched)

    def __str__(self) -> str:
        return (f"end {pretty_msg(self.label)!s} at trace position {self.index} "
                f"has no unmatched begin ({self.begins_before} earlier begins)")


def check_safety(trace) -> Optional[Violation]:
    """First end event without a distinct earlier begin, or None."""
    outstanding: dict[str, int] = {}
    seen: dict[str, int] = {}
    for i, (kind, label) in enumerate(trace):
        key = pretty_msg(label)
        if kind == "begin":
            outstanding[key] = outstanding.get(key, 0) + 1
            seen[key] = seen.get(key, 0) + 1
        else:
            if outstanding.get(key, 0) > 0:
                outstanding[key] -= 1
            else:
                return Violation(i, label, seen.get(key, 0))
    return None


# ---------------------------------------------------------------------------
# Silent (local, deterministic) steps

def _match_remainder(items: tuple[Message, ...]) -> Message:
    return items[1] if len(items) == 2 else Record(items[1:])


def _silent(p: Process, cfg_state: dict) -> tuple[str, object]:
    """One silent step of p: ('cont', process) to continue with,
    ('dead', reason) to drop p, or ('blocked', None) when p only has
    communication or trace steps left."""
    match p:
        case Split(src, vs, cont, _):
            if isinstance(src, Record) and len(src.items) == len(vs):
                for x, m in zip(vs, src.items):
                    cont = subst_proc(cont, x, m)
                return "cont", cont
            return "dead", f"split arity on {pretty_msg(src)}"
        case Match(src, pat, v, cont, _):
            if (isinstance(src, Record) and len(src.items) >= 2
                    and msg_equal(src.items[0], pat)):
                return "cont", subst_proc(cont, v, _match_remainder(src.items))
            return "dead", "match failure"
        case Case(src, branches):
            if isinstance(src, Tagged):
                for tag, x, cont in branches:
                    if tag == src.tag:
                        return "cont", subst_proc(cont, x, src.body)
            return "dead", "case without matching tag"
        case IfEq(l, r, then, orelse):
            return "cont", then if msg_equal(l, r) else orelse
        case NewName(n, cont, annot):
            fresh = SpiName(n.ident, f"r{cfg_state['next_fresh']}")
            cfg_state["next_fresh"] += 1
            if isinstance(annot, ChallengeType):
                cfg_state["audit"].append(
                    AuditEvent("fresh-challenge", str(fresh)))
            return "cont", subst_proc(cont, n, NameRef(fresh))
        case SymDec(c, k, v, cont, _):
            if isinstance(c, SymEnc) and msg_equal(c.key, k):
                return "cont", subst_proc(cont, v, c.body)
            return "dead", "symmetric decryption failure"
        case AsymDec(c, k, v, cont, _):
            if (isinstance(c, AsymEnc) and isinstance(c.key, KeyPart)
                    and isinstance(k, KeyPart) and c.key.kind != k.kind
                    and msg_equal(c.key.pair, k.pair)):
                return "cont", subst_proc(cont, v, c.body)
            return "dead", "asymmetric decryption failure"
        case CheckNonce(resp, chal, cont):
            if (isinstance(resp, NameRef) and isinstance(chal, NameRef)
                    and resp.name == chal.name):
                n = chal.name
                if n not in cfg_state["casts"]:
                    cfg_state["audit"].append(
                        AuditEvent("check-without-cast", str(n)))
                elif n in cfg_state["checked"]:
                    cfg_state["audit"].append(AuditEvent("recheck", str(n)))
                else:
                    cfg_state["audit"].append(AuditEvent("check", str(n)))
                cfg_state["checked"].add(n)
                return "cont", cont
            return "dead", "nonce check failure"
        case Cast(src, v, cont, _):
            if isinstance(src, NameRef):
                cfg_state["casts"].add(src.name)
                cfg_state["audit"].append(AuditEvent("cast", str(src.name)))
                return "cont", subst_proc(cont, v, src)
            return "dead", "cast of a non-name"
        case Witness(fact, cont):
            cfg_state["audit"].append(AuditEvent("witness", pretty_msg(fact)))
            return "cont", cont
        case Trust(fact, cont):
            cfg_state["audit"].append(AuditEvent("trust", pretty_msg(fact)))
            return "cont", cont
        case _:
            return "blocked", None


def normalize(cfg: Configuration) -> Configuration:
    """Run all silent steps to completion; drop Stop and flatten Par."""
    state = {
        "next_fresh": cfg.next_fresh,
        "audit": list(cfg.audit),
        "casts": set(cfg.casts),
        "checked": set(cfg.checked),
    }
    out: list[Process] = []
    work = deque(cfg.procs)
    while work:
        p = work.popleft()
        match p:
            case Stop():
                continue
            case Par(procs):
                work.extendleft(reversed(procs))
                continue
        verdict, payload = _silent(p, state)
        if verdict == "cont":
            work.appendleft(payload)
        elif verdict == "blocked":
            out.append(p)
        # dead processes vanish
    return Configuration(
        procs=tuple(out),
        trace=cfg.trace,
        audit=tuple(state["audit"]),
        next_fresh=state["next_fresh"],
        casts=frozenset(state["casts"]),
        checked=frozenset(state["checked"]),
    )


# ---------------------------------------------------------------------------
# Branching steps

@dataclass(frozen=True)
class StepDescriptor:
    kind: str  # "assert" | "comm"
    i: int
    j: int = -1

    def describe(self, cfg: Configuration) -> str:
        p = cfg.procs[self.i]
        if self.kind == "assert":
            word = "begin" if isinstance(p, Begin) else "end"
            return f"{word} {pretty_msg(p.label)}"
        return f"comm {pretty_msg(p.channel)}: {pretty_msg(p.payload)}"


def enabled_steps(cfg: Configuration) -> list[StepDescriptor]:
    steps: list[StepDescriptor] = []
    for i, p in enumerate(cfg.procs):
        if isinstance(p, (Begin, End)):
            steps.append(StepDescriptor("assert", i))
        elif isinstance(p, Out):
            for j, q in enumerate(cfg.procs):
                if i != j and isinstance(q, (In, RepIn)) \
                        and msg_equal(p.channel, q.channel):
                    steps.append(StepDescriptor("comm", i, j))
    return steps


def apply_step(cfg: Configuration, step: StepDescriptor) -> Configuration:
    procs = list(cfg.procs)
    trace = cfg.trace
    if step.kind == "assert":
        p = procs[step.i]
        word = "begin" if isinstance(p, Begin) else "end"
        trace = trace + ((word, p.label),)
        procs[step.i] = p.cont
    else:
        sender = procs[step.i]
        receiver = procs[step.j]
        body = subst_proc(receiver.cont, receiver.var, sender.payload)
        if isinstance(receiver, RepIn):
            procs[step.j] = receiver
            procs[step.i] = body  # replaces the consumed output
        else:
            procs[step.j] = body
            procs[step.i] = Stop()
    return normalize(replace(cfg, procs=tuple(procs), trace=trace))


def reduce_step(cfg: Configuration) -> list[Configuration]:
    return [apply_step(cfg, s) for s in enabled_steps(cfg)]


# ---------------------------------------------------------------------------
# Random simulation

@dataclass
class RunResult:
    config: Configuration
    steps: int
    violation: Optional[Violation]
    out_of_fuel: bool = False


def run(cfg: Configuration, seed: int = 0, fuel: int = 10_000,
        stop_on_violation: bool = True) -> RunResult:
    rng = random.Random(seed)
    cfg = normalize(cfg)
    for n in range(fuel):
        steps = enabled_steps(cfg)
        if not steps:
            return RunResult(cfg, n, check_safety(cfg.trace))
        cfg = apply_step(cfg, rng.choice(steps))
        if stop_on_violation:
            v = check_safety(cfg.trace)
            if v is not None:
                return RunResult(cfg, n + 1, v)
    return RunResult(cfg, fuel, check_safety(cfg.trace), out_of_fuel=True)


# ---------------------------------------------------------------------------
# Exhaustive exploration

_R_STAMP = re.compile(r"@r\d+")


def _canonical_key(cfg: Configuration) -> str:
    proc_strs = sorted(
        _R_STAMP.sub("@r*", pretty_proc(p)) for p in cfg.procs)
    raw_procs = sorted(pretty_proc(p) for p in cfg.procs)
    trace_str = ";".join(f"{k} {pretty_msg(m)}" for k, m in cfg.trace)
    blob = trace_str + "\n" + "\n".join(raw_procs)
    mapping: dict[str, str] = {}

    def renumber(mo: re.Match) -> str:
        s = mo.group(0)
        if s not in mapping:
            mapping[s] = f"@r{len(mapping) + 1}"
        return mapping[s]

    return _R_STAMP.sub(renumber, blob) + "||" + "\n".join(proc_strs)


@dataclass
class ExplorationResult:
    states: int
    violation: Optional[Violation]
    violating_config: Optional[Configuration]
    truncated: bool
    terminal_traces: list[tuple[tuple[str, Message], ...]]
    deliveries: dict[str, Message]


def explore_all(cfg: Configuration, max_states: int = 10_000,
                stop_on_violation: bool = True,
                watch: Optional[SpiName] = None) -> ExplorationResult:
    """Breadth-first search over all interleavings.

    `watch` collects every payload pending on the given channel in any
    reachable state (used to observe results delivered on a fresh
    channel nobody reads).
    """
    cfg = normalize(cfg)
    seen = {_canonical_key(cfg)}
    queue = deque([cfg])
    states = 0
    truncated = False
    terminal: dict[str, tuple] = {}
    deliveries: dict[str, Message] = {}
    first_violation: Optional[Violation] = None
    first_violating: Optional[Configuration] = None

    def note_deliveries(c: Configuration) -> None:
        if watch is None:
            return
        for p in c.procs:
            if isinstance(p, Out) and isinstance(p.channel, NameRef) \
                    and p.channel.name == watch:
                deliveries.setdefault(pretty_msg(p.payload), p.payload)

    while queue:
        current = queue.popleft()
        states += 1
        note_deliveries(current)
        v = check_safety(current.trace)
        if v is not None:
            if stop_on_violation:
                return ExplorationResult(states, v, current, False,
                                         list(terminal.values()), deliveries)
            if first_violation is None:
                first_violation = v
                first_violating = current
        succs = reduce_step(current)
        if not succs:
            key = ";".join(f"{k} {pretty_msg(m)}" for k, m in current.trace)
            terminal.setdefault(key, current.trace)
            continue
        if states + len(queue) >= max_states:
            truncated = True
            continue
        for s in succs:
            k = _canonical_key(s)
            if k not in seen:
                seen.add(k)
                queue.append(s)
    return ExplorationResult(states, first_violation, first_violating,
                             truncated, list(terminal.values()), deliveries)
