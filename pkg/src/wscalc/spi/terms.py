"""Terms of the assertion-carrying spi calculus.

Messages are names, records, tagged values, and symmetric or asymmetric
ciphertexts. Processes exchange messages on channels and may declare
correspondence assertions: `begin L` records an intention and `end L`
asserts that a matching begin already happened. Challenge/response types
plus cast and check-nonce track how effects ride on fresh nonces.

Names carry a stamp separating three namespaces: source names (empty
stamp), names minted during translation (g-stamps), and names minted by
the runtime (r-stamps). The namespaces are disjoint, so substituting
runtime data into a process can never capture a binder and reduction
needs no on-the-fly renaming.

Type annotations are carried for documentation, kinding checks, and the
printer; substitution and alpha-equivalence treat them as opaque.
"""

from __future__ import annotations

from dataclasses import dataclass, field as _field
from typing import Optional, Union

_EMPTY: frozenset["SpiName"] = frozenset()


@dataclass(frozen=True)
class SpiName:
    ident: str
    stamp: str = ""

    def __str__(self) -> str:
        return self.ident if not self.stamp else f"{self.ident}@{self.stamp}"


def name(ident: str) -> SpiName:
    return SpiName(ident)


def ref(ident: str) -> "NameRef":
    return NameRef(SpiName(ident))


# ---------------------------------------------------------------------------
# Messages

@dataclass(frozen=True)
class NameRef:
    name: SpiName
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", frozenset((self.name,)))


@dataclass(frozen=True, eq=False)
class Record:
    items: tuple["Message", ...]
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        fn = _EMPTY
        for m in self.items:
            if m.fn:
                fn = fn | m.fn
        object.__setattr__(self, "fn", fn)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Record):
            return NotImplemented
        return msg_equal(self, other)

    def __hash__(self) -> int:
        return hash(("rec", len(self.items)))


@dataclass(frozen=True, eq=False)
class Tagged:
    tag: str
    body: "Message"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", self.body.fn)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Tagged):
            return NotImplemented
        return msg_equal(self, other)

    def __hash__(self) -> int:
        return hash(("tag", self.tag))


@dataclass(frozen=True, eq=False)
class SymEnc:
    """{body}key: symmetric encryption."""

    body: "Message"
    key: "Message"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", self.body.fn | self.key.fn)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, SymEnc):
            return NotImplemented
        return msg_equal(self, other)

    def __hash__(self) -> int:
        return hash("senc")


@dataclass(frozen=True, eq=False)
class AsymEnc:
    """{|body|}key: encryption under a key-pair half."""

    body: "Message"
    key: "Message"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", self.body.fn | self.key.fn)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, AsymEnc):
            return NotImplemented
        return msg_equal(self, other)

    def __hash__(self) -> int:
        return hash("aenc")


@dataclass(frozen=True, eq=False)
class KeyPart:
    """ek(pair) or dk(pair): one half of a key pair."""

    kind: str  # "enc" | "dec"
    pair: "Message"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("enc", "dec"):
            raise ValueError(f"bad key part {self.kind!r}")
        object.__setattr__(self, "fn", self.pair.fn)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, KeyPart):
            return NotImplemented
        return msg_equal(self, other)

    def __hash__(self) -> int:
        return hash(("part", self.kind))


Message = Union[NameRef, Record, Tagged, SymEnc, AsymEnc, KeyPart]

UNIT = Record(())


def msg_equal(a: Message, b: Message) -> bool:
    """Structural message equality, iterative: payloads nest deep."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        if type(x) is not type(y):
            return False
        match x:
            case NameRef(n):
                if n != y.name:
                    return False
            case Record(items):
                if len(items) != len(y.items):
                    return False
                stack.extend(zip(items, y.items))
            case Tagged(tag, body):
                if tag != y.tag:
                    return False
                stack.append((body, y.body))
            case SymEnc(body, key):
                stack.append((body, y.body))
                stack.append((key, y.key))
            case AsymEnc(body, key):
                stack.append((body, y.body))
                stack.append((key, y.key))
            case KeyPart(kind, pair):
                if kind != y.kind:
                    return False
                stack.append((pair, y.pair))
            case _:
                return False
    return True


def subst_msg(m: Message, x: SpiName, r: Message) -> Message:
    if x not in m.fn:
        return m
    match m:
        case NameRef(n):
            return r if n == x else m
        case Record(items):
            return Record(tuple(subst_msg(i, x, r) for i in items))
        case Tagged(tag, body):
            return Tagged(tag, subst_msg(body, x, r))
        case SymEnc(body, key):
            return SymEnc(subst_msg(body, x, r), subst_msg(key, x, r))
        case AsymEnc(body, key):
            return AsymEnc(subst_msg(body, x, r), subst_msg(key, x, r))
        case KeyPart(kind, pair):
            return KeyPart(kind, subst_msg(pair, x, r))
        case _:
            raise TypeError(f"not a message: {m!r}")


# ---------------------------------------------------------------------------
# Types and effects

@dataclass(frozen=True)
class EndEffect:
    """Obligation to end (or permission to have begun) the labelled event."""

    label: Message

    def __str__(self) -> str:
        from .printer import pretty_msg
        return f"end {pretty_msg(self.label)}"


@dataclass(frozen=True)
class CheckEffect:
    """Permission to check the named nonce once."""

    nonce: SpiName

    def __str__(self) -> str:
        return f"check {self.nonce}"


@dataclass(frozen=True)
class TrustEffect:
    """An assumption injected by an explicit trust step."""

    fact: Message

    def __str__(self) -> str:
        from .printer import pretty_msg
        return f"trust {pretty_msg(self.fact)}"


Effect = Union[EndEffect, CheckEffect, TrustEffect]


@dataclass(frozen=True)
class UnType:
    def __str__(self) -> str:
        return "Un"


@dataclass(frozen=True)
class TopType:
    def __str__(self) -> str:
        return "Top"


@dataclass(frozen=True)
class DepRecord:
    """(x1:T1, ..., xn:Tn); later effects may mention earlier fields."""

    fields: tuple[tuple[SpiName, "SpiType"], ...]


@dataclass(frozen=True)
class UnionType:
    variants: tuple[tuple[str, "SpiType"], ...]


@dataclass(frozen=True)
class SharedKeyType:
    payload: "SpiType"


@dataclass(frozen=True)
class KeyPairType:
    payload: "SpiType"


@dataclass(frozen=True)
class KeyHalfType:
    kind: str  # "enc" | "dec"
    payload: "SpiType"


@dataclass(frozen=True)
class ChallengeType:
    visibility: str  # "public" | "private"
    effects: tuple[Effect, ...] = ()


@dataclass(frozen=True)
class ResponseType:
    visibility: str
    effects: tuple[Effect, ...] = ()


SpiType = Union[UnType, TopType, DepRecord, UnionType, SharedKeyType,
                KeyPairType, KeyHalfType, ChallengeType, ResponseType]

UN = UnType()
TOP = TopType()


def is_public(t: SpiType) -> bool:
    """May data of this type flow to the opponent?"""
    match t:
        case UnType():
            return True
        case TopType():
            return False
        case DepRecord(fields):
            return all(is_public(ft) for _, ft in fields)
        case UnionType(variants):
            return all(is_public(vt) for _, vt in variants)
        case SharedKeyType(payload) | KeyPairType(payload):
            return is_public(payload) and is_tainted(payload)
        case KeyHalfType("enc", payload):
            return is_tainted(payload)
        case KeyHalfType("dec", payload):
            return is_public(payload)
        case ChallengeType("public", effects) | ResponseType("public", effects):
            return effects == ()
        case ChallengeType() | ResponseType():
            return False
        case _:
            raise TypeError(f"not a type: {t!r}")


def is_tainted(t: SpiType) -> bool:
    """May data of this type be received from the opponent?"""
    match t:
        case UnType() | TopType():
            return True
        case DepRecord(fields):
            return all(is_tainted(ft) for _, ft in fields)
        case UnionType(variants):
            return all(is_tainted(vt) for _, vt in variants)
        case SharedKeyType(payload) | KeyPairType(payload):
            return is_public(payload) and is_tainted(payload)
        case KeyHalfType("enc", payload):
            return is_public(payload)
        case KeyHalfType("dec", payload):
            return is_tainted(payload)
        case ChallengeType("public", effects) | ResponseType("public", effects):
            return effects == ()
        case ChallengeType() | ResponseType():
            return True
        case _:
            raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# Processes

@dataclass(frozen=True)
class Out:
    """Asynchronous output: send payload on channel, no continuation."""

    channel: Message
    payload: Message
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", self.channel.fn | self.payload.fn)


@dataclass(frozen=True)
class In:
    channel: Message
    var: SpiName
    cont: "Process"
    annot: Optional[SpiType] = None
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fn", self.channel.fn | (self.cont.fn - {self.var}))


@dataclass(frozen=True)
class RepIn:
    """Replicated input: each message spawns a fresh copy of cont."""

    channel: Message
    var: SpiName
    cont: "Process"
    annot: Optional[SpiType] = None
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fn", self.channel.fn | (self.cont.fn - {self.var}))


@dataclass(frozen=True)
class Split:
    """Destructure a record of exactly len(vars) fields."""

    source: Message
    vars: tuple[SpiName, ...]
    cont: "Process"
    annots: tuple[Optional[SpiType], ...] = ()
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("split binds a variable twice")
        object.__setattr__(
            self, "fn", self.source.fn | (self.cont.fn - set(self.vars)))


@dataclass(frozen=True)
class Match:
    """Check the first record component, bind the rest.

    The source must be a record whose first field equals `pattern`; the
    remainder bound to `var` is the second field for pairs, otherwise the
    record of the remaining fields.
    """

    source: Message
    pattern: Message
    var: SpiName
    cont: "Process"
    annot: Optional[SpiType] = None
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fn",
            self.source.fn | self.pattern.fn | (self.cont.fn - {self.var}))


@dataclass(frozen=True)
class Case:
    """Tag dispatch: case source of t1(x1) -> P1 | ... (no fallthrough)."""

    source: Message
    branches: tuple[tuple[str, SpiName, "Process"], ...]
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        tags = [t for t, _, _ in self.branches]
        if len(set(tags)) != len(tags):
            raise ValueError(f"duplicate case tags: {tags}")
        fn = self.source.fn
        for _, x, p in self.branches:
            fn = fn | (p.fn - {x})
        object.__setattr__(self, "fn", fn)


@dataclass(frozen=True)
class IfEq:
    """Deterministic branch on message equality."""

    left: Message
    right: Message
    then: "Process"
    orelse: "Process"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fn",
            self.left.fn | self.right.fn | self.then.fn | self.orelse.fn)


@dataclass(frozen=True)
class NewName:
    name: SpiName
    cont: "Process"
    annot: Optional[SpiType] = None
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", self.cont.fn - {self.name})


@dataclass(frozen=True)
class Par:
    procs: tuple["Process", ...]
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        fn = _EMPTY
        for p in self.procs:
            if p.fn:
                fn = fn | p.fn
        object.__setattr__(self, "fn", fn)


@dataclass(frozen=True)
class Stop:
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False,
                                    default=_EMPTY)


@dataclass(frozen=True)
class SymDec:
    """decrypt cipher as {var}key; cont."""

    cipher: Message
    key: Message
    var: SpiName
    cont: "Process"
    annot: Optional[SpiType] = None
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fn",
            self.cipher.fn | self.key.fn | (self.cont.fn - {self.var}))


@dataclass(frozen=True)
class AsymDec:
    """decrypt cipher as {|var|}key; cont, with the complementary key half."""

    cipher: Message
    key: Message
    var: SpiName
    cont: "Process"
    annot: Optional[SpiType] = None
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fn",
            self.cipher.fn | self.key.fn | (self.cont.fn - {self.var}))


@dataclass(frozen=True)
class CheckNonce:
    """Proceed only when response and challenge are the same fresh name."""

    response: Message
    challenge: Message
    cont: "Process"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fn", self.response.fn | self.challenge.fn | self.cont.fn)


@dataclass(frozen=True)
class Begin:
    label: Message
    cont: "Process"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", self.label.fn | self.cont.fn)


@dataclass(frozen=True)
class End:
    label: Message
    cont: "Process"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", self.label.fn | self.cont.fn)


@dataclass(frozen=True)
class Cast:
    """Retype a challenge nonce as a response carrying effects."""

    source: Message
    var: SpiName
    cont: "Process"
    annot: Optional[SpiType] = None
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fn", self.source.fn | (self.cont.fn - {self.var}))


@dataclass(frozen=True)
class Witness:
    """Audit-only marker justifying a later trust step."""

    fact: Message
    cont: "Process"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", self.fact.fn | self.cont.fn)


@dataclass(frozen=True)
class Trust:
    """Audit-only assumption; soundness is checked by the audit stream."""

    fact: Message
    cont: "Process"
    fn: frozenset[SpiName] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", self.fact.fn | self.cont.fn)


Process = Union[Out, In, RepIn, Split, Match, Case, IfEq, NewName, Par, Stop,
                SymDec, AsymDec, CheckNonce, Begin, End, Cast, Witness, Trust]

STOP = Stop()


# ---------------------------------------------------------------------------
# Substitution

_g_counter = 0
_r_counter = 0


def fresh_g(ident: str) -> SpiName:
    """A translation-time fresh name; never collides with source names."""
    global _g_counter
    _g_counter += 1
    return SpiName(ident, f"g{_g_counter}")


def fresh_binder(base: "SpiName | str", avoid) -> SpiName:
    global _g_counter
    ident = base if isinstance(base, str) else base.ident
    while True:
        _g_counter += 1
        cand = SpiName(ident, f"g{_g_counter}")
        if cand not in avoid:
            return cand


def subst_proc(p: Process, x: SpiName, r: Message) -> Process:
    """Capture-avoiding substitution of message r for name x."""
    if x not in p.fn:
        return p

    def under(var: SpiName, cont: Process) -> tuple[SpiName, Process]:
        # binder namespaces keep runtime data capture-free; renaming only
        # triggers for hand-built terms
        if var in r.fn and x in cont.fn:
            var2 = fresh_binder(var, r.fn | cont.fn)
            cont = subst_proc(cont, var, NameRef(var2))
            return var2, cont
        return var, cont

    match p:
        case Out(c, m):
            return Out(subst_msg(c, x, r), subst_msg(m, x, r))
        case In(c, v, cont, annot):
            c2 = subst_msg(c, x, r)
            if v == x:
                return In(c2, v, cont, annot)
            v2, cont = under(v, cont)
            return In(c2, v2, subst_proc(cont, x, r), annot)
        case RepIn(c, v, cont, annot):
            c2 = subst_msg(c, x, r)
            if v == x:
                return RepIn(c2, v, cont, annot)
            v2, cont = under(v, cont)
            return RepIn(c2, v2, subst_proc(cont, x, r), annot)
        case Split(src, vs, cont, annots):
            src2 = subst_msg(src, x, r)
            if x in vs:
                return Split(src2, vs, cont, annots)
            out_vs = []
            for v in vs:
                v2, cont = under(v, cont)
                out_vs.append(v2)
            return Split(src2, tuple(out_vs), subst_proc(cont, x, r), annots)
        case Match(src, pat, v, cont, annot):
            src2 = subst_msg(src, x, r)
            pat2 = subst_msg(pat, x, r)
            if v == x:
                return Match(src2, pat2, v, cont, annot)
            v2, cont = under(v, cont)
            return Match(src2, pat2, v2, subst_proc(cont, x, r), annot)
        case Case(src, branches):
            out_branches = []
            for tag, v, cont in branches:
                if v == x:
                    out_branches.append((tag, v, cont))
                    continue
                v2, cont2 = under(v, cont)
                out_branches.append((tag, v2, subst_proc(cont2, x, r)))
            return Case(subst_msg(src, x, r), tuple(out_branches))
        case IfEq(l, rr, then, orelse):
            return IfEq(subst_msg(l, x, r), subst_msg(rr, x, r),
                        subst_proc(then, x, r), subst_proc(orelse, x, r))
        case NewName(n, cont, annot):
            if n == x:
                return p
            n2, cont = under(n, cont)
            return NewName(n2, subst_proc(cont, x, r), annot)
        case Par(procs):
            return Par(tuple(subst_proc(q, x, r) for q in procs))
        case Stop():
            return p
        case SymDec(c, k, v, cont, annot):
            c2, k2 = subst_msg(c, x, r), subst_msg(k, x, r)
            if v == x:
                return SymDec(c2, k2, v, cont, annot)
            v2, cont = under(v, cont)
            return SymDec(c2, k2, v2, subst_proc(cont, x, r), annot)
        case AsymDec(c, k, v, cont, annot):
            c2, k2 = subst_msg(c, x, r), subst_msg(k, x, r)
            if v == x:
                return AsymDec(c2, k2, v, cont, annot)
            v2, cont = under(v, cont)
            return AsymDec(c2, k2, v2, subst_proc(cont, x, r), annot)
        case CheckNonce(resp, chal, cont):
            return CheckNonce(subst_msg(resp, x, r), subst_msg(chal, x, r),
                              subst_proc(cont, x, r))
        case Begin(label, cont):
            return Begin(subst_msg(label, x, r), subst_proc(cont, x, r))
        case End(label, cont):
            return End(subst_msg(label, x, r), subst_proc(cont, x, r))
        case Cast(src, v, cont, annot):
            src2 = subst_msg(src, x, r)
            if v == x:
                return Cast(src2, v, cont, annot)
            v2, cont = under(v, cont)
            return Cast(src2, v2, subst_proc(cont, x, r), annot)
        case Witness(fact, cont):
            return Witness(subst_msg(fact, x, r), subst_proc(cont, x, r))
        case Trust(fact, cont):
            return Trust(subst_msg(fact, x, r), subst_proc(cont, x, r))
        case _:
            raise TypeError(f"not a process: {p!r}")


# ---------------------------------------------------------------------------
# Alpha-equivalence (annotations ignored)

def _alpha_msg(a: Message, b: Message, la: dict, lb: dict) -> bool:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y and not x.fn:
            continue
        if type(x) is not type(y):
            return False
        match x:
            case NameRef(n):
                da, db = la.get(n), lb.get(y.name)
                if da is None and db is None:
                    if n != y.name:
                        return False
                elif da != db:
                    return False
            case Record(items):
                if len(items) != len(y.items):
                    return False
                stack.extend(zip(items, y.items))
            case Tagged(tag, body):
                if tag != y.tag:
                    return False
                stack.append((body, y.body))
            case SymEnc(body, key) | AsymEnc(body, key):
                stack.append((body, y.body))
                stack.append((key, y.key))
            case KeyPart(kind, pair):
                if kind != y.kind:
                    return False
                stack.append((pair, y.pair))
            case _:
                return False
    return True


def _alpha_proc(p: Process, q: Process, lp: dict, lq: dict, depth: int) -> bool:
    if type(p) is not type(q):
        return False

    def bind(x: SpiName, y: SpiName, d: int) -> tuple[dict, dict]:
        lp2 = dict(lp); lp2[x] = d
        lq2 = dict(lq); lq2[y] = d
        return lp2, lq2

    match p:
        case Out(c, m):
            return _alpha_msg(c, q.channel, lp, lq) and _alpha_msg(m, q.payload, lp, lq)
        case In(c, v, cont, _) | RepIn(c, v, cont, _):
            if not _alpha_msg(c, q.channel, lp, lq):
                return False
            lp2, lq2 = bind(v, q.var, depth)
            return _alpha_proc(cont, q.cont, lp2, lq2, depth + 1)
        case Split(src, vs, cont, _):
            if len(vs) != len(q.vars) or not _alpha_msg(src, q.source, lp, lq):
                return False
            lp2, lq2 = dict(lp), dict(lq)
            d = depth
            for x, y in zip(vs, q.vars):
                lp2[x] = d; lq2[y] = d
                d += 1
            return _alpha_proc(cont, q.cont, lp2, lq2, d)
        case Match(src, pat, v, cont, _):
            if not (_alpha_msg(src, q.source, lp, lq)
                    and _alpha_msg(pat, q.pattern, lp, lq)):
                return False
            lp2, lq2 = bind(v, q.var, depth)
            return _alpha_proc(cont, q.cont, lp2, lq2, depth + 1)
        case Case(src, branches):
            if len(branches) != len(q.branches) or not _alpha_msg(src, q.source, lp, lq):
                return False
            for (t1, v1, p1), (t2, v2, p2) in zip(branches, q.branches):
                if t1 != t2:
                    return False
                lp2, lq2 = bind(v1, v2, depth)
                if not _alpha_proc(p1, p2, lp2, lq2, depth + 1):
                    return False
            return True
        case IfEq(l, r, t, e):
            return (_alpha_msg(l, q.left, lp, lq) and _alpha_msg(r, q.right, lp, lq)
                    and _alpha_proc(t, q.then, lp, lq, depth)
                    and _alpha_proc(e, q.orelse, lp, lq, depth))
        case NewName(n, cont, _):
            lp2, lq2 = bind(n, q.name, depth)
            return _alpha_proc(cont, q.cont, lp2, lq2, depth + 1)
        case Par(procs):
            return len(procs) == len(q.procs) and all(
                _alpha_proc(a, b, lp, lq, depth) for a, b in zip(procs, q.procs))
        case Stop():
            return True
        case SymDec(c, k, v, cont, _) | AsymDec(c, k, v, cont, _):
            if not (_alpha_msg(c, q.cipher, lp, lq) and _alpha_msg(k, q.key, lp, lq)):
                return False
            lp2, lq2 = bind(v, q.var, depth)
            return _alpha_proc(cont, q.cont, lp2, lq2, depth + 1)
        case CheckNonce(resp, chal, cont):
            return (_alpha_msg(resp, q.response, lp, lq)
                    and _alpha_msg(chal, q.challenge, lp, lq)
                    and _alpha_proc(cont, q.cont, lp, lq, depth))
        case Begin(label, cont) | End(label, cont):
            return (_alpha_msg(label, q.label, lp, lq)
                    and _alpha_proc(cont, q.cont, lp, lq, depth))
        case Cast(src, v, cont, _):
            if not _alpha_msg(src, q.source, lp, lq):
                return False
            lp2, lq2 = bind(v, q.var, depth)
            return _alpha_proc(cont, q.cont, lp2, lq2, depth + 1)
        case Witness(fact, cont) | Trust(fact, cont):
            return (_alpha_msg(fact, q.fact, lp, lq)
                    and _alpha_proc(cont, q.cont, lp, lq, depth))
        case _:
            return False


def alpha_eq_proc(p: Process, q: Process) -> bool:
    return _alpha_proc(p, q, {}, {}, 0)


def alpha_eq_msg(a: Message, b: Message) -> bool:
    return _alpha_msg(a, b, {}, {})


# ---------------------------------------------------------------------------
# Opponent discipline

def _annot_ok(t: Optional[SpiType]) -> bool:
    return t is None or isinstance(t, UnType)


def is_opponent(p: Process) -> tuple[bool, str]:
    """Whether p follows opponent discipline.

    Opponents may not assert (begin/end), may not manipulate effects
    (cast/witness/trust/check), and may only annotate at Un. Returns a
    (verdict, reason) pair; the reason names the first offending form.
    """
    work = [p]
    while work:
        q = work.pop()
        match q:
            case Out():
                pass
            case In(_, _, cont, annot) | RepIn(_, _, cont, annot):
                if not _annot_ok(annot):
                    return False, f"annotation {annot} is not Un"
                work.append(cont)
            case Split(_, _, cont, annots):
                if not all(_annot_ok(t) for t in annots):
                    return False, "split annotation is not Un"
                work.append(cont)
            case Match(_, _, _, cont, annot):
                if not _annot_ok(annot):
                    return False, f"annotation {annot} is not Un"
                work.append(cont)
            case Case(_, branches):
                work.extend(cont for _, _, cont in branches)
            case IfEq(_, _, then, orelse):
                work.append(then)
                work.append(orelse)
            case NewName(_, cont, annot):
                if not _annot_ok(annot):
                    return False, f"annotation {annot} is not Un"
                work.append(cont)
            case Par(procs):
                work.extend(procs)
            case Stop():
                pass
            case SymDec(_, _, _, cont, annot) | AsymDec(_, _, _, cont, annot):
                if not _annot_ok(annot):
                    return False, f"annotation {annot} is not Un"
                work.append(cont)
            case Begin() | End():
                return False, "opponents cannot assert begin or end"
            case CheckNonce():
                return False, "opponents cannot check nonces"
            case Cast():
                return False, "opponents cannot cast nonces"
            case Witness() | Trust():
                return False, "opponents cannot witness or trust"
            case _:
                return False, f"not a process: {q!r}"
    return True, ""
