"""Typing judgments for values and bodies, and environment validation.

`null` inhabits every class type, so synthesis returns the polymorphic
marker `NullClass` for it; `NullClass` is compatible with any declared
class type but never with `Id`. Field lookups and method invocations need
a concrete class for their target and reject literal-null targets.

Errors name the violated rule, e.g. "(Val Object) arity mismatch".

`validate_environment` checks the global well-formedness contract:
  * map coherence (services, owners, classes, mentioned types all declared)
  * every service class has exactly the field CallerId : Id
  * stored method bodies contain no runtime principal-tagged form and no
    free variables beyond `this` and the parameters
  * every method body typechecks at its declared result type
"""

from __future__ import annotations

from dataclasses import dataclass, field as _field
from typing import Optional, Union

from .syntax import (
    Body,
    ClassType,
    ExecutionEnvironment,
    FieldGet,
    ID_TYPE,
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
)


@dataclass(frozen=True)
class NullClass:
    """Synthesis result for null: a member of every class type."""

    def __str__(self) -> str:
        return "<null>"


ValueType = Union[ObjType, NullClass]

TypeEnv = tuple[tuple[str, ValueType], ...]

EMPTY_TYPE_ENV: TypeEnv = ()


class TypeCheckError(Exception):
    def __init__(self, rule: str, msg: str):
        super().__init__(f"{rule}: {msg}")
        self.rule = rule
        self.msg = msg


@dataclass
class BodyInfo:
    """Per-node facts the translator needs: node type, target class if any."""

    type: ValueType
    target_class: Optional[str] = None


Annotations = dict[int, BodyInfo]


def lookup(E: TypeEnv, x: str) -> Optional[ValueType]:
    for name, t in reversed(E):
        if name == x:
            return t
    return None


def _class_declared(env: ExecutionEnvironment, name: str, rule: str) -> None:
    if name not in env.fields:
        raise TypeCheckError(rule, f"unknown class {name!r}")


def compatible(t: ValueType, expected: ValueType) -> bool:
    if t == expected:
        return True
    if isinstance(t, NullClass) and isinstance(expected, ClassType):
        return True
    if isinstance(expected, NullClass) and isinstance(t, ClassType):
        return True
    return False


def join(a: ValueType, b: ValueType, rule: str) -> ValueType:
    if a == b:
        return a
    if isinstance(a, NullClass) and isinstance(b, ClassType):
        return b
    if isinstance(b, NullClass) and isinstance(a, ClassType):
        return a
    raise TypeCheckError(rule, f"incompatible types {a} and {b}")


def check_value(E: TypeEnv, v: Value, expected: ValueType,
                env: ExecutionEnvironment) -> None:
    """Check v against an expected type. Iterative: numerals nest deep."""
    work: list[tuple[Value, ValueType]] = [(v, expected)]
    while work:
        u, exp = work.pop()
        match u:
            case Var(name):
                t = lookup(E, name)
                if t is None:
                    raise TypeCheckError("(Val x)", f"unbound variable {name!r}")
                if not compatible(t, exp):
                    raise TypeCheckError(
                        "(Val x)", f"variable {name!r} has type {t}, expected {exp}")
            case Null():
                if isinstance(exp, IdType):
                    raise TypeCheckError("(Val null)", "null is not a principal identity")
                if isinstance(exp, ClassType):
                    _class_declared(env, exp.name, "(Val null)")
            case Prin(name):
                if name not in env.principals:
                    raise TypeCheckError("(Val Princ)", f"unknown principal {name!r}")
                if not isinstance(exp, IdType):
                    raise TypeCheckError(
                        "(Val Princ)", f"principal {name!r} used where {exp} expected")
            case NewObject(cls, args):
                _class_declared(env, cls, "(Val Object)")
                if not (isinstance(exp, ClassType) and exp.name == cls) \
                        and not isinstance(exp, NullClass):
                    raise TypeCheckError(
                        "(Val Object)", f"object of class {cls} used where {exp} expected")
                flds = env.fields[cls]
                if len(args) != len(flds):
                    raise TypeCheckError(
                        "(Val Object)",
                        f"arity mismatch: class {cls} has {len(flds)} fields, "
                        f"got {len(args)} arguments")
                for arg, (_, ftype) in zip(args, flds):
                    work.append((arg, ftype))
            case _:
                raise TypeCheckError("(Val x)", f"not a value: {u!r}")


def type_of_value(E: TypeEnv, v: Value, env: ExecutionEnvironment) -> ValueType:
    """Synthesize the type of a value; null yields the polymorphic marker."""
    match v:
        case Var(name):
            t = lookup(E, name)
            if t is None:
                raise TypeCheckError("(Val x)", f"unbound variable {name!r}")
            return t
        case Null():
            return NullClass()
        case Prin(name):
            if name not in env.principals:
                raise TypeCheckError("(Val Princ)", f"unknown principal {name!r}")
            return ID_TYPE
        case NewObject(cls, args):
            _class_declared(env, cls, "(Val Object)")
            flds = env.fields[cls]
            if len(args) != len(flds):
                raise TypeCheckError(
                    "(Val Object)",
                    f"arity mismatch: class {cls} has {len(flds)} fields, "
                    f"got {len(args)} arguments")
            for arg, (_, ftype) in zip(args, flds):
                check_value(E, arg, ftype, env)
            return ClassType(cls)
        case _:
            raise TypeCheckError("(Val x)", f"not a value: {v!r}")


def _target_class(E: TypeEnv, target: Value, env: ExecutionEnvironment,
                  rule: str, lenient: bool) -> Optional[str]:
    """Class of a member-access target; None when lenient and target is null.

    Strict mode rejects literal-null targets outright: null inhabits every
    class, so the member cannot be resolved. Lenient mode instead gives the
    whole access the polymorphic null type, mirroring the runtime fact that
    such accesses block instead of producing a value. Lenient checking exists
    for terms that arise mid-reduction; source programs are checked strictly.
    """
    t = type_of_value(E, target, env)
    if isinstance(t, NullClass):
        if lenient:
            return None
        raise TypeCheckError(rule, "cannot resolve the class of a null target")
    if isinstance(t, IdType):
        raise TypeCheckError(rule, "principal identities have no fields or methods")
    return t.name


def _check_args(E: TypeEnv, args: tuple[Value, ...], params, env, rule: str) -> None:
    if len(args) != len(params):
        raise TypeCheckError(
            rule, f"arity mismatch: expected {len(params)} arguments, got {len(args)}")
    for arg, (_, ptype) in zip(args, params):
        check_value(E, arg, ptype, env)


def type_of_body(E: TypeEnv, a: Body, env: ExecutionEnvironment,
                 annotations: Optional[Annotations] = None,
                 lenient: bool = False) -> ValueType:
    t = _type_of_body(E, a, env, annotations, lenient)
    if annotations is not None and id(a) not in annotations:
        annotations[id(a)] = BodyInfo(t)
    return t


def _type_of_body(E: TypeEnv, a: Body, env: ExecutionEnvironment,
                  annotations: Optional[Annotations],
                  lenient: bool = False) -> ValueType:
    match a:
        case Val(v):
            return type_of_value(E, v, env)
        case Let(x, bound, body):
            A = type_of_body(E, bound, env, annotations, lenient)
            return type_of_body(E + ((x, A),), body, env, annotations, lenient)
        case If(l, r, then, orelse):
            join(type_of_value(E, l, env), type_of_value(E, r, env), "(Body If)")
            return join(type_of_body(E, then, env, annotations, lenient),
                        type_of_body(E, orelse, env, annotations, lenient),
                        "(Body If)")
        case FieldGet(target, fname):
            cls = _target_class(E, target, env, "(Body Field)", lenient)
            if cls is None:
                return NullClass()
            idx = env.field_index(cls, fname)
            if idx is None:
                raise TypeCheckError(
                    "(Body Field)", f"class {cls} has no field {fname!r}")
            if annotations is not None:
                annotations[id(a)] = BodyInfo(env.fields[cls][idx][1], cls)
            return env.fields[cls][idx][1]
        case Invoke(target, m, args):
            cls = _target_class(E, target, env, "(Body Invoke)", lenient)
            if cls is None:
                return NullClass()
            entry = env.method(cls, m)
            if entry is None:
                raise TypeCheckError(
                    "(Body Invoke)", f"class {cls} has no method {m!r}")
            sig, _ = entry
            _check_args(E, args, sig.params, env, "(Body Invoke)")
            if annotations is not None:
                annotations[id(a)] = BodyInfo(sig.result, cls)
            return sig.result
        case ServiceCall(w, m, args):
            if w not in env.services:
                raise TypeCheckError("(Body Remote)", f"unknown service {w!r}")
            cls = env.service_class[w]
            entry = env.method(cls, m)
            if entry is None:
                raise TypeCheckError(
                    "(Body Remote)", f"service {w!r} has no method {m!r}")
            sig, _ = entry
            _check_args(E, args, sig.params, env, "(Body Remote)")
            if annotations is not None:
                annotations[id(a)] = BodyInfo(sig.result, cls)
            return sig.result
        case Running(p, body):
            if p not in env.principals:
                raise TypeCheckError("(Body Princ)", f"unknown principal {p!r}")
            return type_of_body(E, body, env, annotations, lenient)
        case _:
            raise TypeCheckError("(Body Let)", f"not a body: {a!r}")


def check_body(E: TypeEnv, a: Body, expected: ValueType,
               env: ExecutionEnvironment,
               annotations: Optional[Annotations] = None) -> None:
    t = type_of_body(E, a, env, annotations)
    if not compatible(t, expected):
        raise TypeCheckError("(Body Let)", f"body has type {t}, expected {expected}")


# ---------------------------------------------------------------------------
# Environment validation

@dataclass(frozen=True)
class ValidationIssue:
    subject: str
    rule: str
    msg: str

    def __str__(self) -> str:
        return f"{self.subject}: {self.rule}: {self.msg}"


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = _field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, subject: str, rule: str, msg: str) -> None:
        self.issues.append(ValidationIssue(subject, rule, msg))


def _contains_running(a: Body) -> bool:
    match a:
        case Running():
            return True
        case Let(_, bound, body):
            return _contains_running(bound) or _contains_running(body)
        case If(_, _, t, e):
            return _contains_running(t) or _contains_running(e)
        case _:
            return False


def _mentioned_types(env: ExecutionEnvironment):
    for cls, flds in env.fields.items():
        for fname, ftype in flds:
            yield f"class {cls} field {fname}", ftype
        for mname, (sig, _) in env.methods.get(cls, {}).items():
            yield f"class {cls} method {mname} result", sig.result
            for pname, ptype in sig.params:
                yield f"class {cls} method {mname} param {pname}", ptype


def validate_environment(env: ExecutionEnvironment) -> ValidationReport:
    report = ValidationReport()

    for subject, t in _mentioned_types(env):
        if isinstance(t, ClassType) and t.name not in env.fields:
            report.add(subject, "(Val Object)", f"unknown class {t.name!r}")
    for w in env.services:
        if w not in env.owner or w not in env.service_class:
            report.add(f"service {w}", "environment", "missing owner or class binding")
            continue
        if env.owner[w] not in env.principals:
            report.add(f"service {w}", "environment",
                       f"owner {env.owner[w]!r} is not a declared principal")
        if env.service_class[w] not in env.fields:
            report.add(f"service {w}", "environment",
                       f"class {env.service_class[w]!r} is not declared")
    if report.issues:
        return report

    for w in sorted(env.services):
        cls = env.service_class[w]
        if env.fields[cls] != (("CallerId", ID_TYPE),):
            report.add(
                f"service {w}", "service class layout",
                f"class {cls} must have exactly the field CallerId : Id, "
                f"found {[(n, str(t)) for n, t in env.fields[cls]]}")

    for cls in env.fields:
        for mname, (sig, body) in env.methods.get(cls, {}).items():
            subject = f"class {cls} method {mname}"
            if _contains_running(body):
                report.add(subject, "stored bodies are principal-free",
                           "method body contains a runtime principal-tagged form")
                continue
            allowed = {"this"} | {p for p, _ in sig.params}
            extra = body.fv - allowed
            if extra:
                report.add(subject, "method body typing",
                           f"free variables beyond this and parameters: {sorted(extra)}")
                continue
            E: TypeEnv = (("this", ClassType(cls)),) + tuple(sig.params)
            try:
                check_body(E, body, sig.result, env)
            except TypeCheckError as e:
                report.add(subject, e.rule, e.msg)

    return report
