"""Spi calculus with correspondence assertions: terms, parsing,
printing, and execution."""

from .parser import SpiFile, SpiParseError, parse_msg_text, parse_proc_text, parse_spi
from .printer import (
    pretty_effects,
    pretty_msg,
    pretty_name,
    pretty_proc,
    pretty_spi_file,
    pretty_type,
)
from .runtime import (
    AuditEvent,
    Configuration,
    ExplorationResult,
    RunResult,
    StepDescriptor,
    Violation,
    apply_step,
    check_safety,
    configure,
    enabled_steps,
    explore_all,
    normalize,
    reduce_step,
    run,
)
from .terms import (
    STOP,
    TOP,
    UN,
    UNIT,
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
    Stop,
    SymDec,
    SymEnc,
    Tagged,
    TopType,
    Trust,
    TrustEffect,
    UnType,
    UnionType,
    Witness,
    alpha_eq_msg,
    alpha_eq_proc,
    fresh_binder,
    fresh_g,
    is_opponent,
    is_public,
    is_tainted,
    msg_equal,
    name,
    ref,
    subst_msg,
    subst_proc,
)

__all__ = [
    "AsymDec", "AsymEnc", "AuditEvent", "Begin", "Case", "Cast",
    "ChallengeType", "CheckEffect", "CheckNonce", "Configuration",
    "DepRecord", "Effect", "End", "EndEffect", "ExplorationResult",
    "IfEq", "In", "KeyHalfType", "KeyPairType", "KeyPart", "Match",
    "Message", "NameRef", "NewName", "Out", "Par", "Process", "Record",
    "RepIn", "ResponseType", "RunResult", "STOP", "SharedKeyType",
    "SpiFile", "SpiName", "SpiParseError", "SpiType", "Split",
    "StepDescriptor", "Stop", "SymDec", "SymEnc", "TOP", "Tagged",
    "TopType", "Trust", "TrustEffect", "UN", "UNIT", "UnType",
    "UnionType", "Violation", "Witness", "alpha_eq_msg",
    "alpha_eq_proc", "apply_step", "check_safety", "configure",
    "enabled_steps", "explore_all", "fresh_binder", "fresh_g",
    "is_opponent", "is_public", "is_tainted", "msg_equal", "name", "ref",
    "normalize", "parse_msg_text", "parse_proc_text", "parse_spi",
    "pretty_effects", "pretty_msg", "pretty_name", "pretty_proc",
    "pretty_spi_file", "pretty_type", "reduce_step", "run", "subst_msg",
    "subst_proc",
]
