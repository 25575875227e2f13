"""Concrete syntax output for spi terms.

Message grammar notes: parentheses always build records, so `(M)` is a
one-field record. `t(M)` applies tag t to the single message M, and
`t(M1, ..., Mn)` with n != 1 applies it to the record of the Mi, so a
tag over a one-field record needs doubled parens: `t((M))`. Long chains
of one-field tag wrappers (the translated unary numerals) compress to
`c^n(M)`, which both keeps output readable and keeps printing and
parsing iterative.
"""

from __future__ import annotations

from .terms import (
    AsymDec,
    AsymEnc,
    Begin,
    Case,
    Cast,
    ChallengeType,
    CheckNonce,
    DepRecord,
    End,
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
    Stop,
    SymDec,
    SymEnc,
    Tagged,
    TopType,
    Trust,
    UnionType,
    UnType,
    UNIT,
    Witness,
)

_IDENT_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


def pretty_name(n: SpiName) -> str:
    base = n.ident
    if not base or base[0].isdigit() or any(c not in _IDENT_OK for c in base):
        base = '"' + base.replace('"', '\\"') + '"'
    return base if not n.stamp else f"{base}@{n.stamp}"


def _chain(m: Message) -> tuple[str, int, Message] | None:
    """Longest run of a tag applied directly to itself: (tag, count, core)."""
    if not isinstance(m, Tagged):
        return None
    tag = m.tag
    count = 0
    cur: Message = m
    while isinstance(cur, Tagged) and cur.tag == tag:
        count += 1
        cur = cur.body
    return (tag, count, cur) if count >= 3 else None


def pretty_msg(m: Message) -> str:
    # messages are immutable and widely shared across configurations, so
    # the printed form is cached on the object itself, like fn
    cached = m.__dict__.get("_printed")
    if cached is not None:
        return cached
    # explicit work stack: translated numerals nest very deep
    out: list[str] = []
    work: list[object] = [m]
    while work:
        item = work.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        sub = item.__dict__.get("_printed")
        if sub is not None:
            out.append(sub)
            continue
        match item:
            case NameRef(n):
                out.append(pretty_name(n))
            case Record(items):
                parts: list[object] = ["("]
                for i, sub in enumerate(items):
                    if i:
                        parts.append(", ")
                    parts.append(sub)
                parts.append(")")
                work.extend(reversed(parts))
            case Tagged(tag, body):
                packed = _chain(item)
                if packed is not None:
                    t, n, core = packed
                    work.extend([")", core, f"{t}^{n}("])
                elif isinstance(body, Record) and len(body.items) != 1:
                    parts = [f"{tag}("]
                    for i, sub in enumerate(body.items):
                        if i:
                            parts.append(", ")
                        parts.append(sub)
                    parts.append(")")
                    work.extend(reversed(parts))
                else:
                    work.extend([")", body, f"{tag}("])
            case SymEnc(body, key):
                work.extend([key, "}", body, "{"])
            case AsymEnc(body, key):
                work.extend([key, "|}", body, "{|"])
            case KeyPart(kind, pair):
                word = "ek" if kind == "enc" else "dk"
                work.extend([")", pair, f"{word}("])
            case _:
                raise TypeError(f"not a message: {item!r}")
    text = "".join(out)
    object.__setattr__(m, "_printed", text)
    return text


def pretty_effects(effects) -> str:
    return "[" + ", ".join(str(e) for e in effects) + "]"


def pretty_type(t: SpiType) -> str:
    match t:
        case UnType():
            return "Un"
        case TopType():
            return "Top"
        case DepRecord(fields):
            inner = ", ".join(f"{pretty_name(x)}: {pretty_type(ft)}"
                              for x, ft in fields)
            return f"({inner})"
        case SharedKeyType(payload):
            return f"Key({pretty_type(payload)})"
        case KeyPairType(payload):
            return f"KeyPair({pretty_type(payload)})"
        case KeyHalfType(kind, payload):
            word = "EncKey" if kind == "enc" else "DecKey"
            return f"{word}({pretty_type(payload)})"
        case ChallengeType(vis, effects):
            fx = pretty_effects(effects) if effects else ""
            return f"{vis} challenge{fx}"
        case ResponseType(vis, effects):
            fx = pretty_effects(effects) if effects else ""
            return f"{vis} response{fx}"
        case UnionType(variants):
            inner = ", ".join(f"{tag}: {pretty_type(vt)}" for tag, vt in variants)
            return f"union({inner})"
        case _:
            raise TypeError(f"not a type: {t!r}")


def _binder(x: SpiName, annot) -> str:
    if annot is None:
        return pretty_name(x)
    return f"{pretty_name(x)}: {pretty_type(annot)}"


def pretty_proc(p: Process, indent: int = 0) -> str:
    pad = "  " * indent
    match p:
        case Out(c, m):
            return f"{pad}out {pretty_msg(c)} {pretty_msg(m)}"
        case In(c, v, cont, annot):
            return (f"{pad}in {pretty_msg(c)} ({_binder(v, annot)});\n"
                    + pretty_proc(cont, indent))
        case RepIn(c, v, cont, annot):
            return (f"{pad}repeat in {pretty_msg(c)} ({_binder(v, annot)});\n"
                    + pretty_proc(cont, indent))
        case Split(src, vs, cont, annots):
            pads = annots if annots else (None,) * len(vs)
            inner = ", ".join(_binder(v, t) for v, t in zip(vs, pads))
            return (f"{pad}split {pretty_msg(src)} as ({inner});\n"
                    + pretty_proc(cont, indent))
        case Match(src, pat, v, cont, annot):
            return (f"{pad}match {pretty_msg(src)} as "
                    f"(={pretty_msg(pat)}, {_binder(v, annot)});\n"
                    + pretty_proc(cont, indent))
        case Case(src, branches):
            lines = [f"{pad}case {pretty_msg(src)} of"]
            for i, (tag, v, cont) in enumerate(branches):
                bar = "| " if i else "  "
                lines.append(f"{pad}{bar}{tag}({pretty_name(v)}) -> {{")
                lines.append(pretty_proc(cont, indent + 1))
                lines.append(f"{pad}  }}")
            return "\n".join(lines)
        case IfEq(l, r, then, orelse):
            return (f"{pad}if {pretty_msg(l)} = {pretty_msg(r)} then {{\n"
                    + pretty_proc(then, indent + 1)
                    + f"\n{pad}}} else {{\n"
                    + pretty_proc(orelse, indent + 1)
                    + f"\n{pad}}}")
        case NewName(n, cont, annot):
            return f"{pad}new {_binder(n, annot)};\n" + pretty_proc(cont, indent)
        case Par(procs):
            if not procs:
                return f"{pad}stop"
            lines = [f"{pad}("]
            for i, q in enumerate(procs):
                if i:
                    lines.append(f"{pad}|")
                lines.append(pretty_proc(q, indent + 1))
            lines.append(f"{pad})")
            return "\n".join(lines)
        case Stop():
            return f"{pad}stop"
        case SymDec(c, k, v, cont, annot):
            return (f"{pad}decrypt {pretty_msg(c)} as "
                    f"{{{_binder(v, annot)}}}{pretty_msg(k)};\n"
                    + pretty_proc(cont, indent))
        case AsymDec(c, k, v, cont, annot):
            return (f"{pad}decrypt {pretty_msg(c)} as "
                    f"{{|{_binder(v, annot)}|}}{pretty_msg(k)};\n"
                    + pretty_proc(cont, indent))
        case CheckNonce(resp, chal, cont):
            return (f"{pad}check {pretty_msg(resp)} is {pretty_msg(chal)};\n"
                    + pretty_proc(cont, indent))
        case Begin(label, cont):
            return f"{pad}begin {pretty_msg(label)};\n" + pretty_proc(cont, indent)
        case End(label, cont):
            return f"{pad}end {pretty_msg(label)};\n" + pretty_proc(cont, indent)
        case Cast(src, v, cont, annot):
            return (f"{pad}cast {pretty_msg(src)} as ({_binder(v, annot)});\n"
                    + pretty_proc(cont, indent))
        case Witness(fact, cont):
            return f"{pad}witness {pretty_msg(fact)};\n" + pretty_proc(cont, indent)
        case Trust(fact, cont):
            return f"{pad}trust {pretty_msg(fact)};\n" + pretty_proc(cont, indent)
        case _:
            raise TypeError(f"not a process: {p!r}")


def pretty_spi_file(free_names: tuple[SpiName, ...], proc: Process) -> str:
    lines = []
    if free_names:
        lines.append("free " + " ".join(pretty_name(n) for n in free_names))
        lines.append("")
    lines.append("process")
    lines.append(pretty_proc(proc, 1))
    return "\n".join(lines) + "\n"
