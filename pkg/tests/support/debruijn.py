"""Independent locally-nameless oracles for substitution and alpha-equivalence.

Terms convert to nested tuples where bound variables are de Bruijn indices
('bvar', k) and free variables stay named ('fvar', name). The converted form
is canonical, so tuple equality is alpha-equivalence, and substitution for a
free variable needs no capture avoidance at all: the inserted term contains
only free variables, which can never collide with an index.

Used only by tests, as an oracle the library code cannot share bugs with.
"""

from __future__ import annotations

from wscalc.obj import syntax as obj


# ---------------------------------------------------------------------------
# Object-calculus bodies

def obj_value_to_db(v, ctx: list[str]):
    match v:
        case obj.Var(name):
            for i, n in enumerate(reversed(ctx)):
                if n == name:
                    return ("bvar", i)
            return ("fvar", name)
        case obj.Null():
            return ("null",)
        case obj.Prin(name):
            return ("prin", name)
        case obj.NewObject(cls, args):
            return ("new", cls, tuple(obj_value_to_db(a, ctx) for a in args))
    raise TypeError(v)


def obj_body_to_db(a, ctx: list[str]):
    match a:
        case obj.Val(v):
            return ("val", obj_value_to_db(v, ctx))
        case obj.Let(x, bound, body):
            return ("let", obj_body_to_db(bound, ctx), obj_body_to_db(body, ctx + [x]))
        case obj.If(l, r, t, e):
            return ("if", obj_value_to_db(l, ctx), obj_value_to_db(r, ctx),
                    obj_body_to_db(t, ctx), obj_body_to_db(e, ctx))
        case obj.FieldGet(target, f):
            return ("field", obj_value_to_db(target, ctx), f)
        case obj.Invoke(target, m, args):
            return ("invoke", obj_value_to_db(target, ctx), m,
                    tuple(obj_value_to_db(u, ctx) for u in args))
        case obj.ServiceCall(w, m, args):
            return ("call", w, m, tuple(obj_value_to_db(u, ctx) for u in args))
        case obj.Running(p, body):
            return ("running", p, obj_body_to_db(body, ctx))
    raise TypeError(a)


def db_subst_value(t, x: str, dv):
    """Replace ('fvar', x) by dv inside a converted value."""
    match t:
        case ("fvar", name):
            return dv if name == x else t
        case ("new", cls, args):
            return ("new", cls, tuple(db_subst_value(a, x, dv) for a in args))
        case _:
            return t


def db_subst_body(t, x: str, dv):
    """Replace ('fvar', x) by the converted value dv inside a converted body."""
    kind = t[0]
    if kind == "val":
        return ("val", db_subst_value(t[1], x, dv))
    if kind == "let":
        return ("let", db_subst_body(t[1], x, dv), db_subst_body(t[2], x, dv))
    if kind == "if":
        return ("if", db_subst_value(t[1], x, dv), db_subst_value(t[2], x, dv),
                db_subst_body(t[3], x, dv), db_subst_body(t[4], x, dv))
    if kind == "field":
        return ("field", db_subst_value(t[1], x, dv), t[2])
    if kind == "invoke":
        return ("invoke", db_subst_value(t[1], x, dv), t[2],
                tuple(db_subst_value(u, x, dv) for u in t[3]))
    if kind == "call":
        return ("call", t[1], t[2], tuple(db_subst_value(u, x, dv) for u in t[3]))
    if kind == "running":
        return ("running", t[1], db_subst_body(t[2], x, dv))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Spi processes

def spi_msg_to_db(m, ctx: list):
    from wscalc.spi import terms as spi
    match m:
        case spi.NameRef(n):
            for i, b in enumerate(reversed(ctx)):
                if b == n:
                    return ("bvar", i)
            return ("fname", n.ident, n.stamp)
        case spi.Record(items):
            return ("rec", tuple(spi_msg_to_db(s, ctx) for s in items))
        case spi.Tagged(tag, body):
            return ("tag", tag, spi_msg_to_db(body, ctx))
        case spi.SymEnc(body, key):
            return ("senc", spi_msg_to_db(body, ctx), spi_msg_to_db(key, ctx))
        case spi.AsymEnc(body, key):
            return ("aenc", spi_msg_to_db(body, ctx), spi_msg_to_db(key, ctx))
        case spi.KeyPart(kind, pair):
            return ("part", kind, spi_msg_to_db(pair, ctx))
    raise TypeError(m)


def spi_proc_to_db(p, ctx: list):
    """Convert a process, erasing binder names and type annotations,
    which substitution and alpha-equivalence both ignore."""
    from wscalc.spi import terms as spi
    msg = spi_msg_to_db
    match p:
        case spi.Out(c, m):
            return ("out", msg(c, ctx), msg(m, ctx))
        case spi.In(c, x, cont, _):
            return ("in", msg(c, ctx), spi_proc_to_db(cont, ctx + [x]))
        case spi.RepIn(c, x, cont, _):
            return ("repin", msg(c, ctx), spi_proc_to_db(cont, ctx + [x]))
        case spi.Split(src, vs, cont, _):
            return ("split", msg(src, ctx), len(vs),
                    spi_proc_to_db(cont, ctx + list(vs)))
        case spi.Match(src, pat, v, cont, _):
            return ("matchp", msg(src, ctx), msg(pat, ctx),
                    spi_proc_to_db(cont, ctx + [v]))
        case spi.Case(src, branches):
            return ("case", msg(src, ctx),
                    tuple((tag, spi_proc_to_db(cont, ctx + [x]))
                          for tag, x, cont in branches))
        case spi.IfEq(l, r, t, e):
            return ("ifeq", msg(l, ctx), msg(r, ctx),
                    spi_proc_to_db(t, ctx), spi_proc_to_db(e, ctx))
        case spi.NewName(n, cont, _):
            return ("new", spi_proc_to_db(cont, ctx + [n]))
        case spi.Par(procs):
            return ("par", tuple(spi_proc_to_db(q, ctx) for q in procs))
        case spi.Stop():
            return ("stop",)
        case spi.SymDec(c, k, v, cont, _):
            return ("sdec", msg(c, ctx), msg(k, ctx),
                    spi_proc_to_db(cont, ctx + [v]))
        case spi.AsymDec(c, k, v, cont, _):
            return ("adec", msg(c, ctx), msg(k, ctx),
                    spi_proc_to_db(cont, ctx + [v]))
        case spi.CheckNonce(r, c, cont):
            return ("checkn", msg(r, ctx), msg(c, ctx),
                    spi_proc_to_db(cont, ctx))
        case spi.Begin(label, cont):
            return ("begin", msg(label, ctx), spi_proc_to_db(cont, ctx))
        case spi.End(label, cont):
            return ("end", msg(label, ctx), spi_proc_to_db(cont, ctx))
        case spi.Cast(src, v, cont, _):
            return ("cast", msg(src, ctx), spi_proc_to_db(cont, ctx + [v]))
        case spi.Witness(fact, cont):
            return ("witness", msg(fact, ctx), spi_proc_to_db(cont, ctx))
        case spi.Trust(fact, cont):
            return ("trust", msg(fact, ctx), spi_proc_to_db(cont, ctx))
    raise TypeError(p)


def db_subst_spi(t, key: tuple, dm):
    """Replace the leaf ('fname', ident, stamp) == key by dm anywhere in a
    converted message or process. Every other tuple node is rebuilt
    structurally, so no constructor-specific cases are needed."""
    if t == key:
        return dm
    if isinstance(t, tuple):
        return tuple(db_subst_spi(s, key, dm) if isinstance(s, tuple) else s
                     for s in t)
    return t
