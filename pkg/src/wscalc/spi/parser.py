"""Parser for `.spi` source files.

A file is an optional `free` preamble naming the public free names,
then `process` followed by one process:

    free net a b
    process
      new k : Key((m: Un));
      ( out net {greeting(a)}k
      | repeat in net (x); decrypt x as {y}k; stop
      )

See the printer module for the message conventions (parentheses build
records; `t(M)` tags one message; `c^n(M)` repeats a one-field tag
wrapper n times). Names may carry an `@stamp` suffix, which round-trips
runtime-generated names. Comments run from `#` to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import (
    AsymDec,
    AsymEnc,
    Begin,
    Case,
    Cast,
    ChallengeType,
    CheckEffect,
    CheckNonce,
    DepRecord,
    Effect,
    End,
    EndEffect,
    IfEq,
    In,
    KeyHalfType,
    KeyPairType,
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
    ResponseType,
    SharedKeyType,
    SpiName,
    SpiType,
    Split,
    STOP,
    SymDec,
    SymEnc,
    Tagged,
    TOP,
    Trust,
    TrustEffect,
    UN,
    UNIT,
    UnionType,
    Witness,
)

KEYWORDS = {
    "free", "process", "out", "in", "repeat", "split", "match", "case", "of",
    "if", "then", "else", "new", "stop", "decrypt", "as", "check", "is",
    "begin", "end", "cast", "witness", "trust", "union", "public", "private",
    "challenge", "response", "ek", "dk",
}

_PUNCT2 = ("{|", "|}", "->")
_PUNCT1 = "(){}[],;:=|^@"


class SpiParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, col {col}: {msg}" if line else msg)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # kw | ident | int | punct | eof
    text: str
    line: int
    col: int


def _lex(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1; line += 1; col = 1
            continue
        if c in " \t\r":
            i += 1; col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text[i:i + 2] in _PUNCT2:
            toks.append(Token("punct", text[i:i + 2], line, col))
            i += 2; col += 2
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1]); j += 2
                else:
                    buf.append(text[j]); j += 1
            if j >= n:
                raise SpiParseError("unterminated string", line, col)
            toks.append(Token("ident", "".join(buf), line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i; i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "kw" if word in KEYWORDS else "ident"
            toks.append(Token(kind, word, line, col))
            col += j - i; i = j
            continue
        if c in _PUNCT1:
            toks.append(Token("punct", c, line, col))
            i += 1; col += 1
            continue
        raise SpiParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


@dataclass(frozen=True)
class SpiFile:
    free_names: tuple[SpiName, ...]
    process: Process


class _P:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise SpiParseError(
                f"expected {want!r}, found {t.text or t.kind!r}", t.line, t.col)
        return self.next()

    def fail(self, msg: str) -> SpiParseError:
        t = self.peek()
        return SpiParseError(msg, t.line, t.col)

    # -- names

    def parse_name(self) -> SpiName:
        if not (self.at("ident") or self.at("kw")):
            raise self.fail("expected a name")
        ident = self.next().text
        stamp = ""
        if self.at("punct", "@"):
            self.next()
            stamp = self.expect("ident").text
        return SpiName(ident, stamp)

    # -- messages

    def parse_msg(self) -> Message:
        t = self.peek()
        if t.kind == "punct" and t.text == "(":
            self.next()
            items: list[Message] = []
            if not self.at("punct", ")"):
                while True:
                    items.append(self.parse_msg())
                    if self.at("punct", ","):
                        self.next()
                    else:
                        break
            self.expect("punct", ")")
            return Record(tuple(items))
        if t.kind == "punct" and t.text == "{":
            self.next()
            body = self.parse_msg()
            self.expect("punct", "}")
            key = self.parse_msg()
            return SymEnc(body, key)
        if t.kind == "punct" and t.text == "{|":
            self.next()
            body = self.parse_msg()
            self.expect("punct", "|}")
            key = self.parse_msg()
            return AsymEnc(body, key)
        if t.kind == "kw" and t.text in ("ek", "dk"):
            self.next()
            self.expect("punct", "(")
            pair = self.parse_msg()
            self.expect("punct", ")")
            return KeyPart("enc" if t.text == "ek" else "dec", pair)
        nxt = self.peek(1)
        if t.kind == "ident" or (t.kind == "kw" and nxt.kind == "punct"
                                 and nxt.text == "("):
            # keywords may appear as tags (always applied), never bare names
            ident = self.next().text
            if self.at("punct", "^"):
                self.next()
                count = int(self.expect("int").text)
                self.expect("punct", "(")
                core = self.parse_msg()
                self.expect("punct", ")")
                for _ in range(count):
                    core = Tagged(ident, core)
                return core
            if self.at("punct", "("):
                self.next()
                parts: list[Message] = []
                if not self.at("punct", ")"):
                    while True:
                        parts.append(self.parse_msg())
                        if self.at("punct", ","):
                            self.next()
                        else:
                            break
                self.expect("punct", ")")
                # a single part tags that message; otherwise tag the record
                if len(parts) == 1:
                    return Tagged(ident, parts[0])
                return Tagged(ident, Record(tuple(parts)))
            stamp = ""
            if self.at("punct", "@"):
                self.next()
                stamp = self.expect("ident").text
            return NameRef(SpiName(ident, stamp))
        raise self.fail(f"expected a message, found {t.text or t.kind!r}")

    # -- types

    def parse_effects(self) -> tuple[Effect, ...]:
        self.expect("punct", "[")
        effects: list[Effect] = []
        if not self.at("punct", "]"):
            while True:
                if self.at("kw", "end"):
                    self.next()
                    effects.append(EndEffect(self.parse_msg()))
                elif self.at("kw", "check"):
                    self.next()
                    effects.append(CheckEffect(self.parse_name()))
                elif self.at("kw", "trust"):
                    self.next()
                    effects.append(TrustEffect(self.parse_msg()))
                else:
                    raise self.fail("expected an effect (end, check, trust)")
                if self.at("punct", ","):
                    self.next()
                else:
                    break
        self.expect("punct", "]")
        return tuple(effects)

    def parse_type(self) -> SpiType:
        t = self.peek()
        if t.kind == "ident" and t.text == "Un":
            self.next()
            return UN
        if t.kind == "ident" and t.text == "Top":
            self.next()
            return TOP
        if t.kind == "ident" and t.text in ("Key", "KeyPair", "EncKey", "DecKey"):
            word = self.next().text
            self.expect("punct", "(")
            payload = self.parse_type()
            self.expect("punct", ")")
            if word == "Key":
                return SharedKeyType(payload)
            if word == "KeyPair":
                return KeyPairType(payload)
            return KeyHalfType("enc" if word == "EncKey" else "dec", payload)
        if t.kind == "kw" and t.text == "union":
            self.next()
            self.expect("punct", "(")
            variants: list[tuple[str, SpiType]] = []
            while True:
                tag = self.next().text
                self.expect("punct", ":")
                variants.append((tag, self.parse_type()))
                if self.at("punct", ","):
                    self.next()
                else:
                    break
            self.expect("punct", ")")
            return UnionType(tuple(variants))
        if t.kind == "kw" and t.text in ("public", "private"):
            vis = self.next().text
            shape = self.peek()
            if shape.kind == "kw" and shape.text in ("challenge", "response"):
                self.next()
                effects = self.parse_effects() if self.at("punct", "[") else ()
                if shape.text == "challenge":
                    return ChallengeType(vis, effects)
                return ResponseType(vis, effects)
            raise self.fail("expected 'challenge' or 'response'")
        if t.kind == "punct" and t.text == "(":
            self.next()
            fields: list[tuple[SpiName, SpiType]] = []
            if not self.at("punct", ")"):
                while True:
                    x = self.parse_name()
                    self.expect("punct", ":")
                    fields.append((x, self.parse_type()))
                    if self.at("punct", ","):
                        self.next()
                    else:
                        break
            self.expect("punct", ")")
            return DepRecord(tuple(fields))
        raise self.fail(f"expected a type, found {t.text or t.kind!r}")

    def parse_binder(self) -> tuple[SpiName, SpiType | None]:
        x = self.parse_name()
        if self.at("punct", ":"):
            self.next()
            return x, self.parse_type()
        return x, None

    def _branch_head_follows(self) -> bool:
        """True when the tokens after the current '|' spell tag(x) ->."""
        def punct(i, text):
            t = self.peek(i)
            return t.kind == "punct" and t.text == text

        if self.peek(1).kind not in ("ident", "kw") or not punct(2, "("):
            return False
        if self.peek(3).kind != "ident":
            return False
        i = 4
        if punct(i, "@"):
            if self.peek(i + 1).kind != "ident":
                return False
            i += 2
        return punct(i, ")") and punct(i + 1, "->")

    # -- processes

    def parse_block(self) -> Process:
        if self.at("punct", "{"):
            self.next()
            p = self.parse_proc()
            self.expect("punct", "}")
            return p
        if self.at("kw", "stop"):
            self.next()
            return STOP
        if self.at("kw", "out"):
            self.next()
            c = self.parse_msg()
            return Out(c, self.parse_msg())
        raise self.fail("expected a braced process, 'stop', or 'out'")

    def parse_proc(self) -> Process:
        t = self.peek()
        if t.kind == "punct" and t.text == "(":
            self.next()
            procs = [self.parse_proc()]
            while self.at("punct", "|"):
                self.next()
                procs.append(self.parse_proc())
            self.expect("punct", ")")
            return procs[0] if len(procs) == 1 else Par(tuple(procs))
        if t.kind != "kw":
            raise self.fail(f"expected a process, found {t.text or t.kind!r}")
        word = t.text
        if word == "stop":
            self.next()
            return STOP
        if word == "out":
            self.next()
            # channel position admits only a plain name, so the payload
            # that follows is never swallowed as a tag application
            c = NameRef(self.parse_name())
            return Out(c, self.parse_msg())
        if word == "in" or (word == "repeat"):
            rep = word == "repeat"
            self.next()
            if rep:
                self.expect("kw", "in")
            c = NameRef(self.parse_name())
            self.expect("punct", "(")
            x, annot = self.parse_binder()
            self.expect("punct", ")")
            self.expect("punct", ";")
            cont = self.parse_proc()
            return (RepIn if rep else In)(c, x, cont, annot)
        if word == "split":
            self.next()
            src = self.parse_msg()
            self.expect("kw", "as")
            self.expect("punct", "(")
            vs: list[SpiName] = []
            annots: list[SpiType | None] = []
            while True:
                x, annot = self.parse_binder()
                vs.append(x)
                annots.append(annot)
                if self.at("punct", ","):
                    self.next()
                else:
                    break
            self.expect("punct", ")")
            self.expect("punct", ";")
            cont = self.parse_proc()
            try:
                return Split(src, tuple(vs), cont, tuple(annots))
            except ValueError as e:
                raise self.fail(str(e)) from None
        if word == "match":
            self.next()
            src = self.parse_msg()
            self.expect("kw", "as")
            self.expect("punct", "(")
            self.expect("punct", "=")
            pat = self.parse_msg()
            self.expect("punct", ",")
            x, annot = self.parse_binder()
            self.expect("punct", ")")
            self.expect("punct", ";")
            return Match(src, pat, x, self.parse_proc(), annot)
        if word == "case":
            self.next()
            src = self.parse_msg()
            self.expect("kw", "of")
            branches: list[tuple[str, SpiName, Process]] = []
            while True:
                if not (self.at("ident") or self.at("kw")):
                    raise self.fail("expected a case tag")
                tag = self.next().text
                self.expect("punct", "(")
                x = self.parse_name()
                self.expect("punct", ")")
                self.expect("punct", "->")
                branches.append((tag, x, self.parse_block()))
                # a '|' continues the case only when a full branch head
                # 'tag(x) ->' follows; otherwise the '|' belongs to an
                # enclosing parallel composition
                if self.at("punct", "|") and self._branch_head_follows():
                    self.next()
                else:
                    break
            try:
                return Case(src, tuple(branches))
            except ValueError as e:
                raise self.fail(str(e)) from None
        if word == "if":
            self.next()
            left = self.parse_msg()
            self.expect("punct", "=")
            right = self.parse_msg()
            self.expect("kw", "then")
            then = self.parse_block()
            self.expect("kw", "else")
            return IfEq(left, right, then, self.parse_block())
        if word == "new":
            self.next()
            x, annot = self.parse_binder()
            self.expect("punct", ";")
            return NewName(x, self.parse_proc(), annot)
        if word == "decrypt":
            self.next()
            cipher = self.parse_msg()
            self.expect("kw", "as")
            asym = self.at("punct", "{|")
            self.next()  # { or {|
            x, annot = self.parse_binder()
            self.expect("punct", "|}" if asym else "}")
            key = self.parse_msg()
            self.expect("punct", ";")
            cont = self.parse_proc()
            return (AsymDec if asym else SymDec)(cipher, key, x, cont, annot)
        if word == "check":
            self.next()
            resp = self.parse_msg()
            self.expect("kw", "is")
            chal = self.parse_msg()
            self.expect("punct", ";")
            return CheckNonce(resp, chal, self.parse_proc())
        if word == "begin":
            self.next()
            label = self.parse_msg()
            self.expect("punct", ";")
            return Begin(label, self.parse_proc())
        if word == "end":
            self.next()
            label = self.parse_msg()
            self.expect("punct", ";")
            return End(label, self.parse_proc())
        if word == "cast":
            self.next()
            src = self.parse_msg()
            self.expect("kw", "as")
            self.expect("punct", "(")
            x, annot = self.parse_binder()
            self.expect("punct", ")")
            self.expect("punct", ";")
            return Cast(src, x, self.parse_proc(), annot)
        if word == "witness":
            self.next()
            fact = self.parse_msg()
            self.expect("punct", ";")
            return Witness(fact, self.parse_proc())
        if word == "trust":
            self.next()
            fact = self.parse_msg()
            self.expect("punct", ";")
            return Trust(fact, self.parse_proc())
        raise self.fail(f"expected a process, found {word!r}")


def parse_msg_text(text: str) -> Message:
    p = _P(text)
    m = p.parse_msg()
    if not p.at("eof"):
        raise p.fail("trailing input")
    return m


def parse_proc_text(text: str) -> Process:
    p = _P(text)
    proc = p.parse_proc()
    if not p.at("eof"):
        raise p.fail("trailing input")
    return proc


def parse_spi(text: str) -> SpiFile:
    p = _P(text)
    free: list[SpiName] = []
    while p.at("kw", "free"):
        p.next()
        while p.at("ident"):
            free.append(p.parse_name())
    p.expect("kw", "process")
    proc = p.parse_proc()
    if not p.at("eof"):
        raise p.fail("trailing input")
    return SpiFile(tuple(free), proc)
