"""Pretty-printing and tree dumps for object-calculus terms.

`pretty_body` emits the surface syntax accepted by the parser (numerals are
compressed back to integer literals), so parse -> print -> parse is identity
up to renaming of let-bound variables. The runtime-only form prints as
`p[body]` for traces; the parser rejects it by design.

`body_to_tree` produces a canonical JSON-ready dict per node:

    {"node": "var", "name": str}
    {"node": "null"}
    {"node": "new", "class": str, "args": [value...]}
    {"node": "principal", "name": str}
    {"node": "val", "value": value}
    {"node": "let", "var": str, "bound": body, "body": body}
    {"node": "if", "left": value, "right": value, "then": body, "else": body}
    {"node": "field", "target": value, "field": str}
    {"node": "invoke", "target": value, "method": str, "args": [value...]}
    {"node": "call", "service": str, "method": str, "args": [value...]}
    {"node": "running", "principal": str, "body": body}
"""

from __future__ import annotations

from .syntax import (
    Body,
    ExecutionEnvironment,
    FieldGet,
    IdType,
    If,
    Invoke,
    Let,
    NewObject,
    Null,
    ObjType,
    Prin,
    Running,
    ServiceCall,
    Val,
    Value,
    Var,
    value_as_int,
)


def pretty_value(v: Value) -> str:
    n = value_as_int(v)
    if n is not None:
        return str(n)
    match v:
        case Var(name):
            return name
        case Null():
            return "null"
        case Prin(name):
            return name
        case NewObject(cls, args):
            return f"new {cls}({', '.join(pretty_value(a) for a in args)})"
        case _:
            raise TypeError(f"not a value: {v!r}")


def pretty_body(a: Body) -> str:
    match a:
        case Val(v):
            return pretty_value(v)
        case Let(x, bound, body):
            return f"let {x} = {pretty_body(bound)} in {pretty_body(body)}"
        case If(l, r, t, e):
            return (f"if {pretty_value(l)} = {pretty_value(r)} "
                    f"then ({pretty_body(t)}) else ({pretty_body(e)})")
        case FieldGet(target, f):
            return f"{_atom(target)}.{f}"
        case Invoke(target, m, args):
            return f"{_atom(target)}.{m}({', '.join(pretty_value(u) for u in args)})"
        case ServiceCall(w, m, args):
            name = w if _plain_name(w) else f'"{w}"'
            return f"{name}:{m}({', '.join(pretty_value(u) for u in args)})"
        case Running(p, body):
            return f"{p}[{pretty_body(body)}]"
        case _:
            raise TypeError(f"not a body: {a!r}")


def _atom(v: Value) -> str:
    s = pretty_value(v)
    return s if not s.startswith("new ") else f"({s})"


def _plain_name(s: str) -> bool:
    return s.isidentifier()


def _type_name(t: ObjType) -> str:
    return "Id" if isinstance(t, IdType) else t.name


def pretty_program(env, bodies: dict[str, Body] | None = None) -> str:
    """Render an environment (or a whole parsed program) back to source."""
    if bodies is None and hasattr(env, "env"):
        env, bodies = env.env, env.bodies
    lines: list[str] = []
    if env.principals:
        lines.append("principal " + " ".join(env.principals))
        lines.append("")
    for cls in env.fields:
        lines.append(f"class {cls}")
        for fname, ftype in env.fields[cls]:
            lines.append(f"  {_type_name(ftype)} {fname}")
        for mname, (sig, mbody) in env.methods.get(cls, {}).items():
            params = ", ".join(f"{_type_name(pt)} {pn}" for pn, pt in sig.params)
            lines.append(f"  {_type_name(sig.result)} {mname}({params})")
            lines.append(f"    {pretty_body(mbody)}")
        lines.append("end")
        lines.append("")
    for w in env.services:
        name = w if _plain_name(w) else f'"{w}"'
        lines.append(f"service {name} owner {env.owner[w]} class {env.service_class[w]}")
    if env.services:
        lines.append("")
    for name, body in (bodies or {}).items():
        lines.append(f"body {name} = {pretty_body(body)}")
    return "\n".join(lines).rstrip() + "\n"


def value_to_tree(v: Value) -> dict:
    match v:
        case Var(name):
            return {"node": "var", "name": name}
        case Null():
            return {"node": "null"}
        case Prin(name):
            return {"node": "principal", "name": name}
        case NewObject(cls, args):
            return {"node": "new", "class": cls,
                    "args": [value_to_tree(a) for a in args]}
        case _:
            raise TypeError(f"not a value: {v!r}")


def body_to_tree(a: Body) -> dict:
    match a:
        case Val(v):
            return {"node": "val", "value": value_to_tree(v)}
        case Let(x, bound, body):
            return {"node": "let", "var": x,
                    "bound": body_to_tree(bound), "body": body_to_tree(body)}
        case If(l, r, t, e):
            return {"node": "if", "left": value_to_tree(l), "right": value_to_tree(r),
                    "then": body_to_tree(t), "else": body_to_tree(e)}
        case FieldGet(target, f):
            return {"node": "field", "target": value_to_tree(target), "field": f}
        case Invoke(target, m, args):
            return {"node": "invoke", "target": value_to_tree(target), "method": m,
                    "args": [value_to_tree(u) for u in args]}
        case ServiceCall(w, m, args):
            return {"node": "call", "service": w, "method": m,
                    "args": [value_to_tree(u) for u in args]}
        case Running(p, body):
            return {"node": "running", "principal": p, "body": body_to_tree(body)}
        case _:
            raise TypeError(f"not a body: {a!r}")
