"""Attackers for translated systems and the harness that runs them.

The attacker owns the network: every public channel is as much its as the
honest parties'. It can store, replay, reorder, redirect, and recombine
anything it sees, and can encrypt with any key it has learned, but cannot
open a ciphertext without the key. Canned opponents encode the classic
moves (replay, drop, reflect, reroute, impersonation, nonce reuse); random
opponents sample the same space more blindly. A campaign composes a system
with each opponent, collects verdicts, and keeps enough detail that any
violation replays exactly.
"""

import random
from dataclasses import dataclass, field as _field
from typing import Iterable, Optional, Sequence

from .spi.terms import (
    AsymEnc,
    Case,
    IfEq,
    In,
    KeyPart,
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
    UNIT,
    fresh_g,
    is_opponent,
)
from .spi.runtime import (
    Configuration,
    RunResult,
    Violation,
    configure,
    explore_all,
    run,
)
from .spi.printer import pretty_msg


# ---------------------------------------------------------------------------
# What an attacker can derive from what it has seen

@dataclass
class KnowledgeBase:
    """Messages the attacker holds, closed under taking things apart.

    Records unpair, tags peel, and ciphertexts open when the matching key
    is already known. close() runs that to a fixpoint under a size budget;
    derivable() additionally allows building a target bottom-up from known
    parts, which models what the attacker can forge.
    """

    known: set[Message] = _field(default_factory=set)
    budget_hit: bool = False

    def learn(self, m: Message) -> bool:
        if m in self.known:
            return False
        self.known.add(m)
        return True

    def knows(self, m: Message) -> bool:
        return m in self.known

    def close(self, max_size: int = 10_000) -> None:
        work = list(self.known)
        while work:
            if len(self.known) >= max_size:
                self.budget_hit = True
                return
            m = work.pop()
            parts: list[Message] = []
            match m:
                case Record(items):
                    parts.extend(items)
                case Tagged(_, body):
                    parts.append(body)
                case SymEnc(body, key):
                    if self.knows(key):
                        parts.append(body)
                case AsymEnc(body, key):
                    if (isinstance(key, KeyPart) and key.kind == "enc"
                            and self.knows(KeyPart("dec", key.pair))):
                        parts.append(body)
                case _:
                    pass
            for part in parts:
                if self.learn(part):
                    work.append(part)
        # a key learned late can open ciphertexts seen early
        for m in list(self.known):
            if isinstance(m, SymEnc) and self.knows(m.key):
                if self.learn(m.body):
                    self.close(max_size)
                    return

    def derivable(self, target: Message, depth: int = 6) -> bool:
        if self.knows(target):
            return True
        if depth <= 0:
            return False
        match target:
            case Record(items):
                return all(self.derivable(i, depth - 1) for i in items)
            case Tagged(_, body):
                return self.derivable(body, depth - 1)
            case SymEnc(body, key) | AsymEnc(body, key):
                return (self.derivable(key, depth - 1)
                        and self.derivable(body, depth - 1))
            case KeyPart(_, pair):
                return self.derivable(pair, depth - 1)
            case _:
                return False


def observe_run(cfg: Configuration, public: Sequence[SpiName], seed: int = 0,
                fuel: int = 2_000) -> KnowledgeBase:
    """Everything sitting on a public channel at any point of one run."""
    from .spi.runtime import apply_step, enabled_steps

    rng = random.Random(seed)
    kb = KnowledgeBase()
    pub = set(public)
    for _ in range(fuel):
        for p in cfg.procs:
            if (isinstance(p, Out) and isinstance(p.channel, NameRef)
                    and p.channel.name in pub):
                kb.learn(p.payload)
        steps = enabled_steps(cfg)
        if not steps:
            break
        cfg = apply_step(cfg, rng.choice(steps))
    return kb


# ---------------------------------------------------------------------------
# Canned opponents

def _replay(chan: NameRef) -> Process:
    x = fresh_g("x")
    return In(chan, x, Par((Out(chan, NameRef(x)), Out(chan, NameRef(x)))))


def canned_opponents(channel: SpiName,
                     principals: Sequence[str] = ()) -> dict[str, Process]:
    """The classic network moves, aimed at one public channel.

    Each is a plain process: no events, no nonce operations. Against a
    correct system every one of them leaves all traces safe; their role is
    to catch weakened systems.
    """
    c = NameRef(channel)
    out: dict[str, Process] = {}

    out["replay"] = _replay(c)
    out["double_replay"] = Par((_replay(c), _replay(c)))

    x = fresh_g("x")
    out["drop"] = In(c, x, Stop())

    # bounce a request ciphertext straight back as if it were the response
    z, p, ci, np, k2 = (fresh_g(s) for s in ("z", "p", "ci", "np", "k2"))
    out["reflect"] = In(c, z, Split(
        NameRef(z), (p, ci, np, k2),
        Out(NameRef(k2), Record((NameRef(p), NameRef(ci))))))

    # swap the reply channels of two concurrent requests
    z1, p1, c1, n1, k1 = (fresh_g(s) for s in ("z1", "p1", "c1", "n1", "k1"))
    z2, p2, c2, n2, k2b = (fresh_g(s) for s in ("z2", "p2", "c2", "n2", "k2"))
    out["reroute"] = In(c, z1, Split(
        NameRef(z1), (p1, c1, n1, k1),
        In(c, z2, Split(
            NameRef(z2), (p2, c2, n2, k2b),
            Par((
                Out(c, Record((NameRef(p1), NameRef(c1), NameRef(n1),
                               NameRef(k2b)))),
                Out(c, Record((NameRef(p2), NameRef(c2), NameRef(n2),
                               NameRef(k1)))),
            ))))))

    # resend a request under every other identity
    z, p, ci, np, k2 = (fresh_g(s) for s in ("z", "p", "ci", "np", "k2"))
    forged = tuple(
        Out(c, Record((NameRef(SpiName(other)), NameRef(ci), NameRef(np),
                       NameRef(k2))))
        for other in principals
    ) or (Out(c, Record((c, NameRef(ci), NameRef(np), NameRef(k2)))),)
    out["impersonate"] = In(c, z, Split(
        NameRef(z), (p, ci, np, k2),
        forged[0] if len(forged) == 1 else Par(forged)))

    # serve the first session's nonce response to a second session
    za, ba, ka = fresh_g("za"), fresh_g("ba"), fresh_g("ka")
    nr = fresh_g("nr")
    zb, bb, kb = fresh_g("zb"), fresh_g("bb"), fresh_g("kb")
    out["nonce_reuse"] = In(c, za, Split(NameRef(za), (ba, ka), Par((
        Out(c, NameRef(za)),
        In(NameRef(ka), nr, Par((
            Out(NameRef(ka), NameRef(nr)),
            In(c, zb, Split(NameRef(zb), (bb, kb),
                            Out(NameRef(kb), NameRef(nr)))),
        ))),
    ))))

    # capture a response, let its call finish, then feed the copy to the
    # next call after swallowing that call's real request
    z1, p1, c1, n1, k1 = (fresh_g(s) for s in ("z1", "p1", "c1", "n1", "k1"))
    resp = fresh_g("resp")
    z2, p2, c2, n2, k2b = (fresh_g(s) for s in ("z2", "p2", "c2", "n2", "k2"))
    out["response_replay"] = In(c, z1, Split(
        NameRef(z1), (p1, c1, n1, k1), Par((
            Out(c, NameRef(z1)),
            In(NameRef(k1), resp, Par((
                Out(NameRef(k1), NameRef(resp)),
                In(c, z2, Split(NameRef(z2), (p2, c2, n2, k2b),
                                Out(NameRef(k2b), NameRef(resp)))),
            ))),
        ))))

    for name, proc in out.items():
        ok, why = is_opponent(proc)
        if not ok:
            raise AssertionError(f"canned opponent {name} broke discipline: {why}")
    return out


# ---------------------------------------------------------------------------
# Random opponents

_TAGS = ("req", "res", "getnonce", "null")


def random_opponent(seed: int, public: Sequence[SpiName],
                    budget: int = 14) -> Process:
    """A small random eavesdrop-and-inject process over public names.

    Messages are composed from public names and anything received so far;
    received values double as channels and as encryption keys, which is
    all a network attacker can do without breaking a cipher.
    """
    rng = random.Random(seed)
    atoms: list[Message] = [NameRef(n) for n in public] or [UNIT]

    def msg(depth: int = 2) -> Message:
        if depth <= 0 or rng.random() < 0.45:
            return rng.choice(atoms)
        match rng.randrange(4):
            case 0:
                return Record(tuple(msg(depth - 1)
                                    for _ in range(rng.randrange(2, 5))))
            case 1:
                return Tagged(rng.choice(_TAGS), msg(depth - 1))
            case 2:
                return SymEnc(msg(depth - 1), rng.choice(atoms))
            case _:
                return UNIT

    def chan() -> Message:
        return rng.choice(atoms)

    def scoped(binders: tuple[SpiName, ...], fuel: int) -> Process:
        """Build a continuation with the binders in scope, then retract
        them so siblings cannot reference names they never bound."""
        mark = len(atoms)
        atoms.extend(NameRef(x) for x in binders)
        cont = proc(fuel)
        del atoms[mark:]
        return cont

    def proc(fuel: int) -> Process:
        if fuel <= 0:
            return Stop()
        roll = rng.random()
        if roll < 0.30:
            return Par((Out(chan(), msg()), proc(fuel - 1)))
        if roll < 0.52:
            x = fresh_g("o")
            return In(chan(), x, scoped((x,), fuel - 1))
        if roll < 0.60:
            return Par((proc(fuel // 2), proc(fuel // 2)))
        if roll < 0.68:
            x = fresh_g("n")
            return NewName(x, scoped((x,), fuel - 1))
        if roll < 0.76:
            xs = tuple(fresh_g("s") for _ in range(rng.randrange(2, 5)))
            src = rng.choice(atoms)
            return Split(src, xs, scoped(xs, fuel - 1))
        if roll < 0.84:
            x = fresh_g("c")
            src = rng.choice(atoms)
            return Case(src, ((rng.choice(_TAGS), x, scoped((x,), fuel - 1)),))
        if roll < 0.91:
            x = fresh_g("d")
            return SymDec(rng.choice(atoms), rng.choice(atoms), x,
                          scoped((x,), fuel - 1))
        if roll < 0.97:
            return IfEq(msg(1), msg(1), proc(fuel - 1), Stop())
        x = fresh_g("r")
        return RepIn(chan(), x, Out(chan(), NameRef(x)))

    built = proc(budget)
    ok, why = is_opponent(built)
    if not ok:
        raise AssertionError(f"random opponent broke discipline: {why}")
    return built


# ---------------------------------------------------------------------------
# Campaigns

@dataclass(frozen=True)
class CampaignCell:
    """One opponent against one system, with enough detail to replay."""

    opponent: str
    mode: str  # "explore" | "run"
    seed: Optional[int]
    states: int
    truncated: bool
    violation: Optional[Violation]
    trace: tuple

    def describe(self) -> str:
        verdict = "SAFE" if self.violation is None else f"VIOLATION {self.violation}"
        where = f"seed={self.seed}" if self.seed is not None else f"{self.states} states"
        extra = " (budget hit)" if self.truncated else ""
        return f"{self.opponent:>18} [{self.mode}, {where}]{extra}: {verdict}"


@dataclass
class CampaignReport:
    cells: list[CampaignCell] = _field(default_factory=list)

    @property
    def violations(self) -> list[CampaignCell]:
        return [c for c in self.cells if c.violation is not None]

    @property
    def clean(self) -> bool:
        return not self.violations

    def counterexample(self) -> Optional[CampaignCell]:
        return self.violations[0] if self.violations else None

    def to_text(self) -> str:
        lines = [c.describe() for c in self.cells]
        lines.append(f"{len(self.cells)} cells, "
                     f"{len(self.violations)} violations")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "cells": [
                {
                    "opponent": c.opponent,
                    "mode": c.mode,
                    "seed": c.seed,
                    "states": c.states,
                    "truncated": c.truncated,
                    "violation": None if c.violation is None else {
                        "index": c.violation.index,
                        "label": pretty_msg(c.violation.label),
                    },
                    "trace": [f"{kind} {pretty_msg(label)}"
                              for kind, label in c.trace],
                }
                for c in self.cells
            ],
            "violations": len(self.violations),
        }


def _shrunk_trace(trace: tuple, violation: Optional[Violation]) -> tuple:
    """The prefix that already exhibits the violation."""
    if violation is None:
        return ()
    return tuple(trace[: violation.index + 1])


def compose(system: Process, opponent: Process) -> Configuration:
    return configure(Par((system, opponent)))


def explore_cell(name: str, system: Process, opponent: Process,
                 max_states: int = 50_000) -> CampaignCell:
    res = explore_all(compose(system, opponent), max_states=max_states,
                      stop_on_violation=True)
    trace = ()
    if res.violation is not None and res.violating_config is not None:
        trace = _shrunk_trace(res.violating_config.trace, res.violation)
    return CampaignCell(opponent=name, mode="explore", seed=None,
                        states=res.states, truncated=res.truncated,
                        violation=res.violation, trace=trace)


def run_cell(name: str, system: Process, opponent: Process, seed: int,
             fuel: int = 600) -> CampaignCell:
    res: RunResult = run(compose(system, opponent), seed=seed, fuel=fuel)
    trace = _shrunk_trace(res.config.trace, res.violation)
    return CampaignCell(opponent=name, mode="run", seed=seed,
                        states=res.steps, truncated=res.out_of_fuel,
                        violation=res.violation, trace=trace)


def robust_safety_campaign(system: Process, channel: SpiName,
                           principals: Sequence[str] = (),
                           public: Sequence[SpiName] = (),
                           random_seeds: Iterable[int] = range(100),
                           max_states: int = 50_000,
                           fuel: int = 600) -> CampaignReport:
    """Every canned opponent exhaustively, then seeded random opponents."""
    report = CampaignReport()
    for name, opp in canned_opponents(channel, principals).items():
        report.cells.append(explore_cell(name, system, opp, max_states))
    names = tuple(public) or (channel,)
    for seed in random_seeds:
        opp = random_opponent(seed, names)
        report.cells.append(run_cell(f"random[{seed}]", system, opp,
                                     seed=seed, fuel=fuel))
    return report
