"""Parser for `.obc` source files.

A program is a sequence of declarations:

    principal NAME ...
    class NAME
      TYPE FIELD
      TYPE METHOD(TYPE PARAM, ...) EXPR
    end
    service NAME owner PRINCIPAL class CLASS
    body NAME = EXPR

Types are `Id` or a class name. Expressions use the liberal surface syntax:
`let x = e in e`, `if e = e then e else e`, field and method chains on
arbitrary subexpressions, `new C(e, ...)`, service calls `w:method(e, ...)`,
`null`, integer literals, and parentheses. Anything appearing where the core
calculus requires a value is lifted into a fresh `let`, so chains like
`this.add(x.pred).succ()` desugar to nested lets. Integer literals denote
unary numerals over the class `Num` and parse to their value form directly.

Principals must be declared before any expression that mentions them; the
lexical principal preamble is what distinguishes a principal literal from a
variable. Comments run from `#` to end of line. Service names may be quoted
strings (URLs). The runtime-only "principal[body]" form is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field as _field

from .syntax import (
    Body,
    ClassType,
    EMPTY_ENVIRONMENT,
    ExecutionEnvironment,
    FieldGet,
    ID_TYPE,
    If,
    Invoke,
    Let,
    MethodSig,
    NewObject,
    NULL,
    ObjType,
    Prin,
    ServiceCall,
    Val,
    Value,
    Var,
    num_value,
)

KEYWORDS = {
    "principal", "class", "end", "service", "owner", "body",
    "let", "in", "if", "then", "else", "new", "null",
}

_PUNCT = {"(", ")", ",", ".", ":", "=", "[", "]"}


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, string, punct, kw, eof
    text: str
    line: int
    col: int


def _lex(text: str) -> list[Token]:
    toks: list[Token] = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            i += 1
            col += 1
        elif c == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif c.isalpha() or c == "_":
            start, scol = i, col
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
                col += 1
            word = text[start:i]
            toks.append(Token("kw" if word in KEYWORDS else "ident", word, line, scol))
        elif c.isdigit():
            start, scol = i, col
            while i < n and text[i].isdigit():
                i += 1
                col += 1
            toks.append(Token("int", text[start:i], line, scol))
        elif c == '"':
            scol = col
            i += 1
            col += 1
            start = i
            while i < n and text[i] != '"':
                if text[i] == "\n":
                    raise ParseError("unterminated string", line, scol)
                i += 1
                col += 1
            if i >= n:
                raise ParseError("unterminated string", line, scol)
            toks.append(Token("string", text[start:i], line, scol))
            i += 1
            col += 1
        elif c in _PUNCT:
            toks.append(Token("punct", c, line, col))
            i += 1
            col += 1
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


@dataclass
class Program:
    env: ExecutionEnvironment
    bodies: dict[str, Body] = _field(default_factory=dict)

    def main(self) -> Body | None:
        if "main" in self.bodies:
            return self.bodies["main"]
        if len(self.bodies) == 1:
            return next(iter(self.bodies.values()))
        return None


class _Parser:
    def __init__(self, text: str, principals: tuple[str, ...] = (),
                 services: tuple[str, ...] = ()):
        self.toks = _lex(text)
        self.pos = 0
        self.principals: dict[str, None] = dict.fromkeys(principals)
        self.known_services: set[str] = set(services)
        self.used_idents = {t.text for t in self.toks if t.kind == "ident"}
        self._temp_n = 0
        self._numerals: dict[int, Value] = {}
        self._call_sites: list[tuple[str, Token]] = []

    # -- token plumbing

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {t.text or t.kind!r}", t.line, t.col)
        return self.next()

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def fail(self, msg: str, tok: Token | None = None) -> ParseError:
        t = tok or self.peek()
        return ParseError(msg, t.line, t.col)

    # -- helpers

    def temp(self) -> str:
        while True:
            self._temp_n += 1
            name = f"_t{self._temp_n}"
            if name not in self.used_idents:
                return name

    def numeral(self, n: int) -> Value:
        v = self._numerals.get(n)
        if v is None:
            v = num_value(n)
            self._numerals[n] = v
        return v

    def parse_type(self) -> ObjType:
        t = self.expect("ident")
        return ID_TYPE if t.text == "Id" else ClassType(t.text)

    # -- expressions

    def parse_full_expr(self) -> Body:
        lifts: list[tuple[str, Body]] = []
        core = self.parse_expr(lifts)
        for name, bound in reversed(lifts):
            core = Let(name, bound, core)
        return core

    def parse_expr(self, lifts: list[tuple[str, Body]]) -> Body:
        if self.at("kw", "let"):
            self.next()
            name = self.expect("ident").text
            self.expect("punct", "=")
            bound = self.parse_full_expr()
            self.expect("kw", "in")
            body = self.parse_full_expr()
            return Let(name, bound, body)
        if self.at("kw", "if"):
            self.next()
            left = self.force_value(self.parse_postfix(lifts), lifts)
            self.expect("punct", "=")
            right = self.force_value(self.parse_postfix(lifts), lifts)
            self.expect("kw", "then")
            then = self.parse_full_expr()
            self.expect("kw", "else")
            orelse = self.parse_full_expr()
            return If(left, right, then, orelse)
        return self.parse_postfix(lifts)

    def force_value(self, b: Body, lifts: list[tuple[str, Body]]) -> Value:
        if isinstance(b, Val):
            return b.value
        t = self.temp()
        lifts.append((t, b))
        return Var(t)

    def parse_args(self, lifts: list[tuple[str, Body]]) -> tuple[Value, ...]:
        self.expect("punct", "(")
        args: list[Value] = []
        if not self.at("punct", ")"):
            while True:
                args.append(self.force_value(self.parse_expr(lifts), lifts))
                if self.at("punct", ","):
                    self.next()
                else:
                    break
        self.expect("punct", ")")
        return tuple(args)

    def parse_postfix(self, lifts: list[tuple[str, Body]]) -> Body:
        b = self.parse_primary(lifts)
        while self.at("punct", "."):
            self.next()
            if not self.at("ident"):
                raise self.fail("expected a field or method name after '.'")
            name = self.next().text
            target = self.force_value(b, lifts)
            if self.at("punct", "("):
                b = Invoke(target, name, self.parse_args(lifts))
            else:
                b = FieldGet(target, name)
        return b

    def parse_primary(self, lifts: list[tuple[str, Body]]) -> Body:
        t = self.peek()
        if t.kind == "kw" and t.text == "null":
            self.next()
            return Val(NULL)
        if t.kind == "kw" and t.text == "new":
            self.next()
            if not self.at("ident"):
                raise self.fail("expected a class name after 'new'")
            cls = self.next().text
            return Val(NewObject(cls, self.parse_args(lifts)))
        if t.kind == "int":
            self.next()
            return Val(self.numeral(int(t.text)))
        if t.kind == "string":
            self.next()
            self.expect("punct", ":")
            return self.parse_service_call(t)
        if t.kind == "ident":
            self.next()
            if self.at("punct", ":"):
                self.next()
                return self.parse_service_call(t)
            if self.at("punct", "["):
                raise self.fail(
                    "principal-tagged bodies like p[...] are runtime-only and "
                    "cannot appear in source", t)
            if t.text in self.principals:
                return Val(Prin(t.text))
            return Val(Var(t.text))
        if t.kind == "punct" and t.text == "(":
            self.next()
            b = self.parse_full_expr()
            self.expect("punct", ")")
            return b
        raise self.fail(f"expected an expression, found {t.text or t.kind!r}")

    def parse_service_call(self, name_tok: Token) -> Body:
        method = self.expect("ident").text
        inner: list[tuple[str, Body]] = []
        args = self.parse_args(inner)
        call: Body = ServiceCall(name_tok.text, method, args)
        for name, bound in reversed(inner):
            call = Let(name, bound, call)
        self._call_sites.append((name_tok.text, name_tok))
        return call

    # -- declarations

    def parse_program(self) -> Program:
        fields: dict[str, tuple[tuple[str, ObjType], ...]] = {}
        methods: dict[str, dict[str, tuple[MethodSig, Body]]] = {}
        owner: dict[str, str] = {}
        service_class: dict[str, str] = {}
        bodies: dict[str, Body] = {}
        service_toks: dict[str, Token] = {}

        while not self.at("eof"):
            t = self.peek()
            if self.at("kw", "principal"):
                self.next()
                if not self.at("ident"):
                    raise self.fail("expected a principal name")
                while self.at("ident"):
                    p = self.next()
                    if p.text in self.principals:
                        raise self.fail(f"duplicate principal {p.text!r}", p)
                    self.principals[p.text] = None
            elif self.at("kw", "class"):
                self.next()
                cname = self.expect("ident")
                if cname.text in fields:
                    raise self.fail(f"duplicate class {cname.text!r}", cname)
                flds: list[tuple[str, ObjType]] = []
                mths: dict[str, tuple[MethodSig, Body]] = {}
                while not self.at("kw", "end"):
                    if self.at("eof"):
                        raise self.fail(f"class {cname.text!r} is missing 'end'")
                    mtype = self.parse_type()
                    mname = self.expect("ident")
                    if self.at("punct", "("):
                        self.next()
                        params: list[tuple[str, ObjType]] = []
                        if not self.at("punct", ")"):
                            while True:
                                ptype = self.parse_type()
                                pname = self.expect("ident")
                                if any(pname.text == q for q, _ in params):
                                    raise self.fail(
                                        f"duplicate parameter {pname.text!r}", pname)
                                params.append((pname.text, ptype))
                                if self.at("punct", ","):
                                    self.next()
                                else:
                                    break
                        self.expect("punct", ")")
                        if mname.text in mths:
                            raise self.fail(f"duplicate method {mname.text!r}", mname)
                        mbody = self.parse_full_expr()
                        mths[mname.text] = (MethodSig(mtype, tuple(params)), mbody)
                    else:
                        if any(mname.text == q for q, _ in flds):
                            raise self.fail(f"duplicate field {mname.text!r}", mname)
                        flds.append((mname.text, mtype))
                self.expect("kw", "end")
                fields[cname.text] = tuple(flds)
                methods[cname.text] = mths
            elif self.at("kw", "service"):
                self.next()
                if self.at("ident") or self.at("string"):
                    sname = self.next()
                else:
                    raise self.fail("expected a service name")
                if sname.text in owner:
                    raise self.fail(f"duplicate service {sname.text!r}", sname)
                self.expect("kw", "owner")
                sowner = self.expect("ident")
                self.expect("kw", "class")
                scls = self.expect("ident")
                owner[sname.text] = sowner.text
                service_class[sname.text] = scls.text
                service_toks[sname.text] = sname
                self.known_services.add(sname.text)
                if sowner.text not in self.principals:
                    raise self.fail(
                        f"service {sname.text!r} owner {sowner.text!r} is an "
                        "unknown principal", sowner)
            elif self.at("kw", "body"):
                self.next()
                bname = self.expect("ident")
                if bname.text in bodies:
                    raise self.fail(f"duplicate body {bname.text!r}", bname)
                self.expect("punct", "=")
                bodies[bname.text] = self.parse_full_expr()
            else:
                raise self.fail(
                    f"expected a declaration, found {t.text or t.kind!r}")

        for sname, tok in service_toks.items():
            if service_class[sname] not in fields:
                raise ParseError(
                    f"service {sname!r} names unknown class {service_class[sname]!r}",
                    tok.line, tok.col)
        for called, tok in self._call_sites:
            if called not in self.known_services:
                raise ParseError(f"call on unknown service {called!r}", tok.line, tok.col)

        env = ExecutionEnvironment(
            fields=fields,
            methods=methods,
            owner=owner,
            service_class=service_class,
            principals=tuple(self.principals),
            services=tuple(owner.keys()),
        )
        return Program(env=env, bodies=bodies)


def parse_program(text: str) -> Program:
    return _Parser(text).parse_program()


def parse_body(text: str, env: ExecutionEnvironment = EMPTY_ENVIRONMENT) -> Body:
    """Parse a single expression against an existing environment."""
    p = _Parser(text, principals=env.principals, services=env.services)
    body = p.parse_full_expr()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    for called, t in p._call_sites:
        if called not in env.services:
            raise ParseError(f"call on unknown service {called!r}", t.line, t.col)
    return body
