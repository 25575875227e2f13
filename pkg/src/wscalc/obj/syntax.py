"""Object-calculus core: types, values, method bodies, execution environments.

Values are variables, null, object constructions, and principal literals;
bodies are values, lets, conditionals, field lookups, method invocations,
remote service calls, and the runtime-only "running at principal" form.
Everything is an immutable tree compared structurally.

Every value and body caches its free-variable set at construction, so
substitution skips closed subtrees in O(1). That matters because numerals
are unary encodings (the literal 12345 is a 12346-deep value); helpers here
build and inspect those iteratively, and `values_equal` walks pairs with an
explicit stack plus an identity fast path so shared subvalues cost nothing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as _field
from typing import Mapping, Optional, Union

# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class IdType:
    """Type of principal identities."""

    def __str__(self) -> str:
        return "Id"


@dataclass(frozen=True)
class ClassType:
    name: str

    def __str__(self) -> str:
        return self.name


ObjType = Union[IdType, ClassType]

ID_TYPE = IdType()

_EMPTY: frozenset[str] = frozenset()

# ---------------------------------------------------------------------------
# Values

@dataclass(frozen=True)
class Var:
    name: str
    fv: frozenset[str] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fv", frozenset((self.name,)))


@dataclass(frozen=True)
class Null:
    fv: frozenset[str] = _field(init=False, repr=False, compare=False, default=_EMPTY)


@dataclass(frozen=True, eq=False)
class NewObject:
    cls: str
    args: tuple["Value", ...]
    fv: frozenset[str] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        fv = _EMPTY
        for a in self.args:
            if a.fv:
                fv = fv | a.fv
        object.__setattr__(self, "fv", fv)

    # numerals nest thousands of constructors deep, so equality must not
    # recurse through the generated dataclass __eq__
    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, NewObject):
            return NotImplemented
        return values_equal(self, other)

    def __hash__(self) -> int:
        return hash((self.cls, len(self.args)))


@dataclass(frozen=True)
class Prin:
    name: str
    fv: frozenset[str] = _field(init=False, repr=False, compare=False, default=_EMPTY)


Value = Union[Var, Null, NewObject, Prin]

NULL = Null()

# ---------------------------------------------------------------------------
# Bodies

@dataclass(frozen=True)
class Val:
    value: Value
    fv: frozenset[str] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fv", self.value.fv)


@dataclass(frozen=True)
class Let:
    """let var = bound in body; var is bound in body only."""

    var: str
    bound: "Body"
    body: "Body"
    fv: frozenset[str] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fv", self.bound.fv | (self.body.fv - {self.var}))


@dataclass(frozen=True)
class If:
    """if left = right then then else orelse; equality of values."""

    left: Value
    right: Value
    then: "Body"
    orelse: "Body"
    fv: frozenset[str] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "fv", self.left.fv | self.right.fv | self.then.fv | self.orelse.fv
        )


@dataclass(frozen=True)
class FieldGet:
    target: Value
    field: str
    fv: frozenset[str] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fv", self.target.fv)


@dataclass(frozen=True)
class Invoke:
    target: Value
    method: str
    args: tuple[Value, ...]
    fv: frozenset[str] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        fv = self.target.fv
        for a in self.args:
            if a.fv:
                fv = fv | a.fv
        object.__setattr__(self, "fv", fv)


@dataclass(frozen=True)
class ServiceCall:
    """w:method(args), a call on a named web service."""

    service: str
    method: str
    args: tuple[Value, ...]
    fv: frozenset[str] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        fv = _EMPTY
        for a in self.args:
            if a.fv:
                fv = fv | a.fv
        object.__setattr__(self, "fv", fv)


@dataclass(frozen=True)
class Running:
    """Runtime-only form: body executing on behalf of a principal."""

    principal: str
    body: "Body"
    fv: frozenset[str] = _field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fv", self.body.fv)


Body = Union[Val, Let, If, FieldGet, Invoke, ServiceCall, Running]

# ---------------------------------------------------------------------------
# Method signatures and execution environments

@dataclass(frozen=True)
class MethodSig:
    result: ObjType
    params: tuple[tuple[str, ObjType], ...]

    def __post_init__(self) -> None:
        names = [n for n, _ in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names: {names}")


@dataclass(frozen=True)
class ExecutionEnvironment:
    """Finite maps describing classes, services, and principals.

    fields:        class name -> ordered (field name, type) pairs
    methods:       class name -> method name -> (signature, stored body)
    owner:         service name -> owning principal
    service_class: service name -> implementing class
    """

    fields: Mapping[str, tuple[tuple[str, ObjType], ...]]
    methods: Mapping[str, Mapping[str, tuple[MethodSig, Body]]]
    owner: Mapping[str, str]
    service_class: Mapping[str, str]
    principals: tuple[str, ...]
    services: tuple[str, ...]

    @property
    def classes(self) -> frozenset[str]:
        return frozenset(self.fields.keys())

    def field_list(self, cls: str) -> tuple[tuple[str, ObjType], ...]:
        return self.fields[cls]

    def field_index(self, cls: str, name: str) -> Optional[int]:
        for i, (f, _) in enumerate(self.fields[cls]):
            if f == name:
                return i
        return None

    def method(self, cls: str, name: str) -> Optional[tuple[MethodSig, Body]]:
        return self.methods.get(cls, {}).get(name)


EMPTY_ENVIRONMENT = ExecutionEnvironment(
    fields={}, methods={}, owner={}, service_class={},
    principals=(), services=(),
)

# ---------------------------------------------------------------------------
# Substitution and alpha-equivalence

_fresh_counter = itertools.count(1)


def fresh_var(base: str) -> str:
    """A variable name that cannot collide with parsed identifiers."""
    return f"{base}%{next(_fresh_counter)}"


def subst_value(u: Value, x: str, v: Value) -> Value:
    if x not in u.fv:
        return u
    match u:
        case Var(name):
            return v if name == x else u
        case NewObject(cls, args):
            return NewObject(cls, tuple(subst_value(a, x, v) for a in args))
        case _:
            return u


def substitute(a: Body, x: str, v: Value) -> Body:
    """Capture-avoiding substitution of value v for variable x in body a."""
    if x not in a.fv:
        return a
    match a:
        case Val(u):
            return Val(subst_value(u, x, v))
        case Let(y, bound, body):
            bound2 = substitute(bound, x, v)
            if y == x:
                return Let(y, bound2, body)
            if y in v.fv and x in body.fv:
                y2 = fresh_var(y)
                body = substitute(body, y, Var(y2))
                y = y2
            return Let(y, bound2, substitute(body, x, v))
        case If(l, r, t, e):
            return If(subst_value(l, x, v), subst_value(r, x, v),
                      substitute(t, x, v), substitute(e, x, v))
        case FieldGet(target, f):
            return FieldGet(subst_value(target, x, v), f)
        case Invoke(target, m, args):
            return Invoke(subst_value(target, x, v), m,
                          tuple(subst_value(u, x, v) for u in args))
        case ServiceCall(w, m, args):
            return ServiceCall(w, m, tuple(subst_value(u, x, v) for u in args))
        case Running(p, body):
            return Running(p, substitute(body, x, v))
        case _:
            raise TypeError(f"not a body: {a!r}")


def values_equal(u: Value, v: Value) -> bool:
    """Structural equality of values, iterative with an identity fast path."""
    stack = [(u, v)]
    while stack:
        a, b = stack.pop()
        if a is b:
            continue
        if type(a) is not type(b):
            return False
        match a:
            case Var(name):
                if name != b.name:
                    return False
            case Null():
                pass
            case Prin(name):
                if name != b.name:
                    return False
            case NewObject(cls, args):
                if cls != b.cls or len(args) != len(b.args):
                    return False
                stack.extend(zip(args, b.args))
            case _:
                return False
    return True


def _alpha_value(u: Value, v: Value, lu: dict[str, int], lv: dict[str, int]) -> bool:
    stack = [(u, v)]
    while stack:
        a, b = stack.pop()
        if a is b and not a.fv:
            continue
        if type(a) is not type(b):
            return False
        match a:
            case Var(name):
                du, dv = lu.get(name), lv.get(b.name)
                if du is None and dv is None:
                    if name != b.name:
                        return False
                elif du != dv:
                    return False
            case Null():
                pass
            case Prin(name):
                if name != b.name:
                    return False
            case NewObject(cls, args):
                if cls != b.cls or len(args) != len(b.args):
                    return False
                stack.extend(zip(args, b.args))
            case _:
                return False
    return True


def _alpha_body(a: Body, b: Body, lu: dict[str, int], lv: dict[str, int], depth: int) -> bool:
    if type(a) is not type(b):
        return False
    match a:
        case Val(u):
            return _alpha_value(u, b.value, lu, lv)
        case Let(x, bound, body):
            if not _alpha_body(bound, b.bound, lu, lv, depth):
                return False
            lu2 = dict(lu); lu2[x] = depth
            lv2 = dict(lv); lv2[b.var] = depth
            return _alpha_body(body, b.body, lu2, lv2, depth + 1)
        case If(l, r, t, e):
            return (_alpha_value(l, b.left, lu, lv)
                    and _alpha_value(r, b.right, lu, lv)
                    and _alpha_body(t, b.then, lu, lv, depth)
                    and _alpha_body(e, b.orelse, lu, lv, depth))
        case FieldGet(target, f):
            return f == b.field and _alpha_value(target, b.target, lu, lv)
        case Invoke(target, m, args):
            return (m == b.method and len(args) == len(b.args)
                    and _alpha_value(target, b.target, lu, lv)
                    and all(_alpha_value(x, y, lu, lv) for x, y in zip(args, b.args)))
        case ServiceCall(w, m, args):
            return (w == b.service and m == b.method and len(args) == len(b.args)
                    and all(_alpha_value(x, y, lu, lv) for x, y in zip(args, b.args)))
        case Running(p, body):
            return p == b.principal and _alpha_body(body, b.body, lu, lv, depth)
        case _:
            return False


def alpha_eq(a: Body, b: Body) -> bool:
    """Equality of bodies up to consistent renaming of let-bound variables."""
    return _alpha_body(a, b, {}, {}, 0)


# ---------------------------------------------------------------------------
# Numerals (unary encoding over a Num-style class)

def num_value(n: int, cls: str = "Num") -> Value:
    """The value form of the numeral n: n+1 nested constructions around null."""
    if n < 0:
        raise ValueError("numerals are non-negative")
    v: Value = NULL
    for _ in range(n + 1):
        v = NewObject(cls, (v,))
    return v


def value_as_int(v: Value, cls: str = "Num") -> Optional[int]:
    """Inverse of num_value; None when v is not a pure numeral."""
    depth = 0
    while isinstance(v, NewObject) and v.cls == cls and len(v.args) == 1:
        depth += 1
        v = v.args[0]
    if depth > 0 and isinstance(v, Null):
        return depth - 1
    return None


def is_value_body(a: Body) -> bool:
    return isinstance(a, Val)
