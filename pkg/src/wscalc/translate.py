"""Translation from typed object programs to spi calculus processes.

A body running as a principal becomes a process that delivers the message
encoding of its result on a designated channel. Constructed objects become
tagged records, field projection and method dispatch become case analysis
and channel communication, and every service call expands into a four
message nonce handshake between caller and owner. The handshake brackets
each request and each response with begin/end events, so trace safety of
the translated system states exactly that every accepted request and
response was really issued by the principal it claims.

Deliberate protocol weakenings used by the attack demos are switched on
through TranslationOptions; the default translation has none of them.
"""

from dataclasses import dataclass, field as _field
from typing import Callable, Optional

from .obj.syntax import (
    Body,
    ExecutionEnvironment,
    FieldGet,
    ID_TYPE,
    If,
    Invoke,
    Let,
    NewObject,
    Null,
    Prin,
    Running,
    ServiceCall,
    Val,
    Value,
    Var,
    fresh_var,
    substitute,
)
from .obj.typing import (
    Annotations,
    ClassType,
    IdType,
    NullClass,
    TypeCheckError,
    ValueType,
    type_of_body,
)
from .spi.terms import (
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
    Match,
    Message,
    NameRef,
    NewName,
    Out,
    Par,
    Process,
    Record,
    RepIn,
    ResponseType,
    SharedKeyType,
    SpiName,
    SpiType,
    Split,
    Stop,
    SymDec,
    SymEnc,
    Tagged,
    UN,
    UNIT,
    UnionType,
    fresh_g,
)
from .spi.runtime import Configuration, configure


class TranslationError(Exception):
    pass


@dataclass(frozen=True)
class TranslationOptions:
    """Deliberate defects, off by default, for the mutation campaign.

    drop_nonce_check: the service omits the request-nonce comparison, so a
    replayed request ciphertext is accepted by a second service session.
    reuse_session: the client draws its session tag and response nonce once
    for the whole system instead of once per call, so a captured response
    also satisfies a later call's checks.
    swap_keys: the service looks up the key for caller p and owner q in the
    reversed order q,p; the client side is unchanged.
    """

    drop_nonce_check: bool = False
    reuse_session: bool = False
    swap_keys: bool = False


UNMUTATED = TranslationOptions()

MUTATIONS: dict[str, TranslationOptions] = {
    "drop_nonce_check": TranslationOptions(drop_nonce_check=True),
    "reuse_session": TranslationOptions(reuse_session=True),
    "swap_keys": TranslationOptions(swap_keys=True),
}


# ---------------------------------------------------------------------------
# Types and values

def translate_type(t: ValueType) -> SpiType:
    match t:
        case IdType() | NullClass():
            return UN
        case ClassType(name):
            return UnionType((("null", UN), (name, UN)))
        case _:
            raise TranslationError(f"untranslatable type {t!r}")


def tag_apply(tag: str, parts: tuple[Message, ...]) -> Tagged:
    """Apply a tag to zero or more messages.

    One part tags the message itself; any other count tags the record of
    the parts. Receivers destructure with the same arity convention.
    """
    if len(parts) == 1:
        return Tagged(tag, parts[0])
    return Tagged(tag, Record(parts))


def translate_value(v: Value) -> Message:
    # numerals nest constructors thousands deep, so build post-order with
    # an explicit stack instead of recursing
    done: dict[int, Message] = {}
    todo: list[Value] = [v]
    while todo:
        cur = todo[-1]
        if id(cur) in done:
            todo.pop()
            continue
        match cur:
            case Var(x):
                done[id(cur)] = NameRef(SpiName(x))
            case Null():
                done[id(cur)] = Tagged("null", UNIT)
            case Prin(p):
                done[id(cur)] = NameRef(SpiName(p))
            case NewObject(cls, args):
                pending = [a for a in args if id(a) not in done]
                if pending:
                    todo.extend(pending)
                    continue
                parts = tuple(done[id(a)] for a in args)
                done[id(cur)] = tag_apply(cls, parts)
            case _:
                raise TranslationError(f"untranslatable value {cur!r}")
        todo.pop()
    return done[id(v)]


def _ref(ident: str) -> NameRef:
    return NameRef(SpiName(ident))


def _req_label(p: Message, q: Message, w: Message, a: Message,
               t: Message) -> Message:
    return Tagged("req", Record((p, q, w, a, t)))


def _res_label(p: Message, q: Message, w: Message, r: Message,
               t: Message) -> Message:
    return Tagged("res", Record((p, q, w, r, t)))


def cs_key_type(p: str, q: str) -> SpiType:
    """The type of the key shared by caller p and owner q.

    Its payloads are tagged either as requests or as responses; in both
    the final component is a response nonce whose effect discharges the
    matching end-event, which is what lets each side end after a
    successful nonce check.
    """
    w, a, r, t = (SpiName(x) for x in ("w", "a", "r", "t"))
    nq, np = SpiName("nq"), SpiName("np")
    pr, qr = _ref(p), _ref(q)
    req = DepRecord((
        (w, UN), (a, UN), (t, UN),
        (nq, ResponseType("public", (EndEffect(
            _req_label(pr, qr, NameRef(w), NameRef(a), NameRef(t))),))),
    ))
    res = DepRecord((
        (w, UN), (r, UN), (t, UN),
        (np, ResponseType("public", (EndEffect(
            _res_label(pr, qr, NameRef(w), NameRef(r), NameRef(t))),))),
    ))
    return SharedKeyType(UnionType((("req", req), ("res", res))))


# ---------------------------------------------------------------------------
# The translator

RESULT = SpiName("result")


@dataclass(frozen=True)
class SysBuild:
    """A complete translated system plus the names tests need to reach."""

    process: Process
    result: SpiName
    public_names: tuple[SpiName, ...]
    key_names: dict[tuple[str, str], SpiName]
    method_channels: dict[tuple[str, str], SpiName]

    def config(self) -> Configuration:
        return configure(self.process)


class Translator:
    """Translates bodies, classes, and services over one environment."""

    def __init__(self, env: ExecutionEnvironment,
                 options: TranslationOptions = UNMUTATED):
        self.env = env
        self.options = options
        self.ann: Annotations = {}
        self.keys: dict[tuple[str, str], SpiName] = {
            (p, q): SpiName(f"K_{p}_{q}")
            for p in env.principals for q in env.principals
        }
        self.chans: dict[tuple[str, str], SpiName] = {
            (c, l): SpiName(f"{c}_{l}")
            for c in sorted(env.classes) for l in sorted(env.methods.get(c, {}))
        }
        self.shared_t = fresh_g("t_shared")
        self.shared_np = fresh_g("np_shared")
        # object binders that would collide with these get renamed first
        self.reserved = (
            set(env.principals) | set(env.services) | {RESULT.ident}
            | {k.ident for k in self.keys.values()}
            | {c.ident for c in self.chans.values()}
        )
        for c in sorted(env.classes):
            for l, (sig, body) in sorted(env.methods.get(c, {}).items()):
                scope = ((("this", ClassType(c)),) + sig.params)
                try:
                    type_of_body(scope, body, env, self.ann)
                except TypeCheckError as e:
                    raise TranslationError(f"method {c}.{l}: {e}") from e

    # -- helpers ------------------------------------------------------------

    def key_for(self, caller: str, owner: str, serving: bool = False) -> SpiName:
        swapped = serving and self.options.swap_keys
        pair = (owner, caller) if swapped else (caller, owner)
        key = self.keys.get(pair)
        if key is None:
            raise TranslationError(f"no key for principals {pair}")
        return key

    def chan_for(self, cls: str, method: str) -> SpiName:
        chan = self.chans.get((cls, method))
        if chan is None:
            raise TranslationError(f"no channel for {cls}.{method}")
        return chan

    def _info(self, node: Body):
        info = self.ann.get(id(node))
        if info is None or info.target_class is None:
            raise TranslationError("body node lacks a typed target class")
        return info

    def _safe_binder(self, x: str, body: Body) -> tuple[str, Body]:
        """Rename an object binder that would collide with a system name."""
        if x in self.reserved:
            fresh = fresh_var(x)
            return fresh, substitute(body, x, Var(fresh))
        return x, body

    # -- bodies -------------------------------------------------------------

    def translate_body(self, a: Body, p: str, k: SpiName = RESULT) -> Process:
        """The process form of body a running as principal p.

        The result of a is delivered as a message on channel k.
        """
        if p not in self.env.principals:
            raise TranslationError(f"unknown principal {p!r}")
        try:
            type_of_body((), a, self.env, self.ann)
        except TypeCheckError as e:
            raise TranslationError(str(e)) from e
        return self._body(a, _ref(p), p, k)

    def _body(self, a: Body, pm: Message, pk: Optional[str],
              k: SpiName) -> Process:
        """pm names the running principal; pk is its static identity when
        known, None inside class implementations where it is a variable."""
        match a:
            case Val(v):
                return Out(NameRef(k), translate_value(v))
            case Let(x, bound, body):
                x, body = self._safe_binder(x, body)
                kx = fresh_g("k")
                return NewName(kx, Par((
                    self._body(bound, pm, pk, kx),
                    In(NameRef(kx), SpiName(x), self._body(body, pm, pk, k)),
                )), annot=UN)
            case If(left, right, then, orelse):
                return IfEq(translate_value(left), translate_value(right),
                            self._body(then, pm, pk, k),
                            self._body(orelse, pm, pk, k))
            case FieldGet(target, fname):
                cls = self._info(a).target_class
                return self._field_get(target, cls, fname, k)
            case Invoke(target, method, args):
                cls = self._info(a).target_class
                y = fresh_g("obj")
                packet = Record(
                    (pm, translate_value(target))
                    + tuple(translate_value(u) for u in args)
                    + (NameRef(k),))
                return Case(translate_value(target), (
                    ("null", fresh_g("nil"), Stop()),
                    (cls, y, Out(NameRef(self.chan_for(cls, method)), packet)),
                ))
            case ServiceCall():
                return self._service_call(a, pm, pk, k)
            case Running():
                raise TranslationError("runtime-only body form")
            case _:
                raise TranslationError(f"untranslatable body {a!r}")

    def _field_get(self, target: Value, cls: str, fname: str,
                   k: SpiName) -> Process:
        fields = self.env.fields[cls]
        idx = self.env.field_index(cls, fname)
        if idx is None:
            raise TranslationError(f"unknown field {cls}.{fname}")
        y = fresh_g("obj")
        if len(fields) == 1:
            project: Process = Out(NameRef(k), NameRef(y))
        else:
            binders = tuple(SpiName(f) for f, _ in fields)
            project = Split(NameRef(y), binders,
                            Out(NameRef(k), NameRef(binders[idx])))
        return Case(translate_value(target), (
            ("null", fresh_g("nil"), Stop()),
            (cls, y, project),
        ))

    # -- the client side of a service call ----------------------------------

    def _service_call(self, a: ServiceCall, pm: Message, pk: Optional[str],
                      k: SpiName) -> Process:
        if a.service not in self.env.owner:
            raise TranslationError(f"unknown service {a.service!r}")
        if pk is not None:
            return self._client(a, pk, k)
        # the caller is a variable here, so select the branch whose
        # concrete principal it names; at most one guard can succeed
        branches = tuple(
            IfEq(_ref(p), pm, self._client(a, p, k), Stop())
            for p in self.env.principals
        )
        return branches[0] if len(branches) == 1 else Par(branches)

    def _client(self, a: ServiceCall, caller: str, k: SpiName) -> Process:
        w = a.service
        owner = self.env.owner[w]
        key = NameRef(self.key_for(caller, owner))
        wref, pref, qref = _ref(w), _ref(caller), _ref(owner)
        arg_msg = tag_apply(a.method, tuple(translate_value(u) for u in a.args))

        if self.options.reuse_session:
            t, np = self.shared_t, self.shared_np
        else:
            t, np = fresh_g("t"), fresh_g("np")
        k1, k2 = fresh_g("k1"), fresh_g("k2")
        req_label = _req_label(pref, qref, wref, arg_msg, NameRef(t))

        z = fresh_g("z")
        g = fresh_g("g")
        nq = fresh_g("nq")
        nq2 = fresh_g("nq2")
        z4 = fresh_g("z4")
        q2, bdy, tmp = fresh_g("q2"), fresh_g("bdy"), fresh_g("tmp")
        plain, rest = fresh_g("plain"), fresh_g("rest")
        r, t2, np2 = fresh_g("r"), fresh_g("t2"), fresh_g("np2")
        x = fresh_g("x")

        res_label = _res_label(pref, qref, wref, NameRef(r), NameRef(t))
        accept = CheckNonce(NameRef(np2), NameRef(np), End(res_label, Case(
            NameRef(r), ((a.method, x, Out(NameRef(k), NameRef(x))),))))
        finish = In(NameRef(k2), z4, Split(NameRef(z4), (q2, bdy), SymDec(
            NameRef(bdy), key, tmp, Case(NameRef(tmp), (("res", plain, Match(
                NameRef(plain), wref, rest, Split(
                    NameRef(rest), (r, t2, np2),
                    IfEq(NameRef(t2), NameRef(t), accept, Stop())))),)))))
        request_cipher = SymEnc(
            Tagged("req", Record((wref, arg_msg, NameRef(t), NameRef(nq2)))),
            key)
        send_request = Cast(
            NameRef(nq), nq2,
            Par((Out(wref, Record((pref, request_cipher, NameRef(np),
                                   NameRef(k2)))), finish)),
            annot=ResponseType("public", (EndEffect(req_label),)))
        handshake = Begin(req_label, Par((
            Out(wref, Record((Tagged("req", Tagged("getnonce", UNIT)),
                              NameRef(k1)))),
            In(NameRef(k1), z, Case(NameRef(z), (("res", g, Case(
                NameRef(g), (("getnonce", nq, send_request),))),))),
        )))
        proc = NewName(k1, NewName(k2, handshake, annot=UN), annot=UN)
        if not self.options.reuse_session:
            proc = NewName(t, NewName(
                np, proc, annot=ChallengeType("public")), annot=UN)
        return proc

    # -- class and service implementations ----------------------------------

    def class_impl(self, cls: str, method: str) -> Process:
        entry = self.env.method(cls, method)
        if entry is None:
            raise TranslationError(f"unknown method {cls}.{method}")
        sig, body = entry
        params = []
        for pname, _ in sig.params:
            pname, body = self._safe_binder(pname, body)
            params.append(SpiName(pname))
        caller = fresh_g("caller")
        kvar = fresh_g("k")
        z = fresh_g("z")
        binders = (caller, SpiName("this"), *params, kvar)
        return RepIn(
            NameRef(self.chan_for(cls, method)), z,
            Split(NameRef(z), binders,
                  self._body(body, NameRef(caller), None, kvar)))

    def _dispatch(self, w: str, request: SpiName, caller: str,
                  after: Callable[[SpiName], Process]) -> Process:
        """Run the method a request names, as the service owner, and hand
        the tagged result to the continuation."""
        owner = self.env.owner[w]
        cls = self.env.service_class[w]
        instance = tag_apply(cls, (_ref(caller),))
        kk = fresh_g("kk")
        branches = []
        for method, (sig, _) in sorted(self.env.methods.get(cls, {}).items()):
            argrec = fresh_g("args")
            kr = fresh_g("kr")
            r0 = fresh_g("r0")
            xs = tuple(fresh_g(pn) for pn, _ in sig.params)
            arg_refs: tuple[Message, ...]
            if len(xs) == 1:
                arg_refs = (NameRef(argrec),)
            else:
                arg_refs = tuple(NameRef(x) for x in xs)
            call = NewName(kr, Par((
                Out(NameRef(self.chan_for(cls, method)),
                    Record((_ref(owner), instance) + arg_refs
                           + (NameRef(kr),))),
                In(NameRef(kr), r0,
                   Out(NameRef(kk), tag_apply(method, (NameRef(r0),)))),
            )), annot=UN)
            if len(xs) >= 2:
                call = Split(NameRef(argrec), xs, call)
            branches.append((method, argrec, call))
        r = fresh_g("r")
        return NewName(kk, Par((
            Case(NameRef(request), tuple(branches)),
            In(NameRef(kk), r, after(r)),
        )), annot=UN)

    def service_impl(self, w: str) -> Process:
        if w not in self.env.owner:
            raise TranslationError(f"unknown service {w!r}")
        owner = self.env.owner[w]
        cls = self.env.service_class[w]
        fields = self.env.fields.get(cls, ())
        if len(fields) != 1 or fields[0] != ("CallerId", ID_TYPE):
            raise TranslationError(
                f"service class {cls} must have exactly the CallerId field")
        wref, qref = _ref(w), _ref(owner)

        z = fresh_g("z")
        bdy, k1 = fresh_g("bdy"), fresh_g("k1")
        g, u = fresh_g("g"), fresh_g("u")
        nq = fresh_g("nq")
        z3 = fresh_g("z3")
        p2, cipher, np, k2 = (fresh_g(x) for x in ("p2", "cipher", "np", "k2"))

        def caller_branch(caller: str) -> Process:
            pref = _ref(caller)
            key = NameRef(self.key_for(caller, owner, serving=True))
            tmp, plain, rest = fresh_g("tmp"), fresh_g("plain"), fresh_g("rest")
            a, t, nq2 = fresh_g("a"), fresh_g("t"), fresh_g("nq2")
            np2 = fresh_g("np2")

            def respond(r: SpiName) -> Process:
                res_label = _res_label(pref, qref, wref, NameRef(r), NameRef(t))
                payload = Tagged("res", Record(
                    (wref, NameRef(r), NameRef(t), NameRef(np2))))
                return Begin(res_label, Cast(
                    NameRef(np), np2,
                    Out(NameRef(k2), Record((qref, SymEnc(payload, key)))),
                    annot=ResponseType("public", (EndEffect(res_label),))))

            accept: Process = End(
                _req_label(pref, qref, wref, NameRef(a), NameRef(t)),
                self._dispatch(w, a, caller, respond))
            if not self.options.drop_nonce_check:
                accept = CheckNonce(NameRef(nq2), NameRef(nq), accept)
            return IfEq(pref, NameRef(p2), SymDec(
                NameRef(cipher), key, tmp,
                Case(NameRef(tmp), (("req", plain, Match(
                    NameRef(plain), wref, rest,
                    Split(NameRef(rest), (a, t, nq2), accept))),))), Stop())

        branches = tuple(caller_branch(p) for p in self.env.principals)
        fan_out = branches[0] if len(branches) == 1 else Par(branches)
        session = NewName(nq, Par((
            Out(NameRef(k1), Tagged("res", Tagged("getnonce", NameRef(nq)))),
            In(wref, z3,
               Split(NameRef(z3), (p2, cipher, np, k2), fan_out)),
        )), annot=ChallengeType("public"))
        return RepIn(wref, z, Split(NameRef(z), (bdy, k1), Case(
            NameRef(bdy), (("req", g, Case(
                NameRef(g), (("getnonce", u, session),))),))))

    # -- whole systems -------------------------------------------------------

    def build_system(self, a: Body, p: str) -> SysBuild:
        """Everything needed to run body a as principal p: all class and
        service implementations composed with the translated body, with
        keys and method channels restricted. Service names, principal
        names, and the result channel stay public."""
        parts: list[Process] = []
        for (cls, method) in sorted(self.chans):
            parts.append(self.class_impl(cls, method))
        for w in sorted(self.env.services):
            parts.append(self.service_impl(w))
        parts.append(self.translate_body(a, p, RESULT))
        proc: Process = Par(tuple(parts)) if len(parts) != 1 else parts[0]
        if self.options.reuse_session:
            proc = NewName(self.shared_t, NewName(
                self.shared_np, proc,
                annot=ChallengeType("public")), annot=UN)
        for pair in sorted(self.keys, reverse=True):
            proc = NewName(self.keys[pair], proc,
                           annot=cs_key_type(*pair))
        for key in sorted(self.chans, reverse=True):
            proc = NewName(self.chans[key], proc, annot=UN)
        public = tuple(SpiName(x) for x in
                       (*self.env.services, *self.env.principals)) + (RESULT,)
        return SysBuild(
            process=proc,
            result=RESULT,
            public_names=public,
            key_names=dict(self.keys),
            method_channels=dict(self.chans),
        )
