from .syntax import (
    Body,
    ClassType,
    EMPTY_ENVIRONMENT,
    ExecutionEnvironment,
    FieldGet,
    ID_TYPE,
    IdType,
    If,
    Invoke,
    Let,
    MethodSig,
    NewObject,
    NULL,
    Null,
    ObjType,
    Prin,
    Running,
    ServiceCall,
    Val,
    Value,
    Var,
    alpha_eq,
    num_value,
    subst_value,
    substitute,
    value_as_int,
    values_equal,
)
from .parser import ParseError, Program, parse_body, parse_program
from .printer import body_to_tree, pretty_body, pretty_program, pretty_value
from .typing import (
    Annotations,
    BodyInfo,
    NullClass,
    TypeCheckError,
    ValidationReport,
    check_body,
    check_value,
    compatible,
    type_of_body,
    type_of_value,
    validate_environment,
)
from .eval import EvalResult, IsValue, NullBlocked, OutOfFuel, Stepped, Stuck, eval_body, step
