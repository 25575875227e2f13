"""Small-step evaluation of closed bodies on behalf of a principal.

A step either rewrites the body, reports it is already a value, reports a
null-blocked form (field lookup or invocation on null, or a form waiting on
one), or reports that the body is stuck: closed, not a value, not
null-blocked, and with no applicable rule. Well-typed bodies never get stuck.

Remote calls rewrite locally: w:method(args) running as p becomes the
owner's invocation of a fresh service object whose CallerId is p, wrapped in
the runtime principal-tagged form so inner steps run as the owner.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Union

from .syntax import (
    Body,
    ExecutionEnvironment,
    FieldGet,
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
    substitute,
    values_equal,
)


@dataclass(frozen=True)
class Stepped:
    body: Body


@dataclass(frozen=True)
class IsValue:
    value: Value


@dataclass(frozen=True)
class NullBlocked:
    body: Body


@dataclass(frozen=True)
class Stuck:
    body: Body
    reason: str


StepOutcome = Union[Stepped, IsValue, NullBlocked, Stuck]


def step(a: Body, principal: str, env: ExecutionEnvironment) -> StepOutcome:
    match a:
        case Val(v):
            return IsValue(v)

        case Let(x, Val(v), body):
            return Stepped(substitute(body, x, v))
        case Let(x, bound, body):
            inner = step(bound, principal, env)
            match inner:
                case Stepped(b2):
                    return Stepped(Let(x, b2, body))
                case NullBlocked():
                    return NullBlocked(a)
                case Stuck(_, reason):
                    return Stuck(a, reason)
                case IsValue():
                    raise AssertionError("unreachable: Val handled above")

        case If(l, r, then, orelse):
            if l.fv or r.fv:
                return Stuck(a, "comparison of open values")
            return Stepped(then if values_equal(l, r) else orelse)

        case FieldGet(Null(), _):
            return NullBlocked(a)
        case FieldGet(NewObject(cls, args) as target, fname):
            idx = env.field_index(cls, fname) if cls in env.fields else None
            if idx is None:
                return Stuck(a, f"class {cls} has no field {fname!r}")
            return Stepped(Val(args[idx]))
        case FieldGet(target, _):
            return Stuck(a, f"field lookup on non-object {target!r}")

        case Invoke(Null(), _, _):
            return NullBlocked(a)
        case Invoke(NewObject(cls, _) as target, m, args):
            entry = env.method(cls, m) if cls in env.fields else None
            if entry is None:
                return Stuck(a, f"class {cls} has no method {m!r}")
            sig, mbody = entry
            if len(args) != len(sig.params):
                return Stuck(a, f"arity mismatch calling {cls}.{m}")
            b = substitute(mbody, "this", target)
            for (pname, _), arg in zip(sig.params, args):
                b = substitute(b, pname, arg)
            return Stepped(b)
        case Invoke(target, _, _):
            return Stuck(a, f"invocation on non-object {target!r}")

        case ServiceCall(w, m, args):
            if w not in env.services:
                return Stuck(a, f"unknown service {w!r}")
            q = env.owner[w]
            cls = env.service_class[w]
            target = NewObject(cls, (Prin(principal),))
            return Stepped(Running(q, Invoke(target, m, args)))

        case Running(q, Val(v)):
            return Stepped(Val(v))
        case Running(q, body):
            inner = step(body, q, env)
            match inner:
                case Stepped(b2):
                    return Stepped(Running(q, b2))
                case NullBlocked():
                    return NullBlocked(a)
                case Stuck(_, reason):
                    return Stuck(a, reason)
                case IsValue():
                    raise AssertionError("unreachable: Val handled above")

        case _:
            return Stuck(a, f"not a body: {a!r}")


@dataclass(frozen=True)
class OutOfFuel:
    body: Body


@dataclass
class EvalResult:
    outcome: Union[StepOutcome, OutOfFuel]
    steps: int
    trace: list[Body]

    @property
    def value(self) -> Optional[Value]:
        return self.outcome.value if isinstance(self.outcome, IsValue) else None


def eval_body(a: Body, principal: str, env: ExecutionEnvironment,
              fuel: int = 10_000, trace_limit: int = 64) -> EvalResult:
    """Iterate `step` up to `fuel` times, keeping the last bodies seen."""
    trace: deque[Body] = deque(maxlen=trace_limit)
    trace.append(a)
    current = a
    for n in range(fuel):
        outcome = step(current, principal, env)
        match outcome:
            case Stepped(b):
                current = b
                trace.append(b)
            case _:
                return EvalResult(outcome, n, list(trace))
    return EvalResult(OutOfFuel(current), fuel, list(trace))
