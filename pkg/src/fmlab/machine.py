"""Small-step store machine for configurations ``<term, store>``.

Reduction is call-by-value and leftmost-innermost, implemented as explicit
congruence traversal.  Each step also reports the path to its redex so
harness code can line it up with a typing derivation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

from .parser import pretty_store, pretty_term
from .syntax import (
    Abs, App, FieldRead, FieldWrite, Location, NatLit, RecordLit, RecordVal, Seal, Store, Term,
    TyAbs, TyApp, Var, children, is_value, substitute_term, substitute_type_in_term,
    with_children,
)


class StuckCause(enum.Enum):
    WRITE_THROUGH_SEAL = "write-through-seal"
    FIELD_MISSING = "field-missing"
    NOT_A_RECORD = "not-a-record"
    NOT_A_FUNCTION = "not-a-function"
    FREE_VARIABLE = "free-variable"
    OTHER = "other"


@dataclass(frozen=True)
class MachineRules:
    """Switches for the reduction rules.

    The defaults are the real semantics; the others exist so the harness can
    be checked against deliberately broken machines.
    """

    sealed_read_adapts: bool = True
    guard_sealed_writes: bool = True
    write_updates_store: bool = True


STANDARD = MachineRules()


@dataclass(frozen=True)
class MachineConfig:
    term: Term
    store: Store = field(default_factory=Store)

    @property
    def next_location(self) -> Location:
        return self.store.next_location

    def render(self) -> str:
        return f"⟨{pretty_term(self.term)}, {pretty_store(self.store)}⟩"


@dataclass(frozen=True)
class Stepped:
    config: MachineConfig
    rule: str
    path: tuple[int, ...] = ()


@dataclass(frozen=True)
class AlreadyValue:
    pass


@dataclass(frozen=True)
class Stuck:
    cause: StuckCause
    detail: str = ""
    path: tuple[int, ...] = ()


StepResult = Union[Stepped, AlreadyValue, Stuck]


def alloc(store: Store, value: Term) -> tuple[Location, Store]:
    if not is_value(value):
        raise ValueError("only values can be stored")
    return store.alloc(value)


class _Stuck(Exception):
    def __init__(self, cause: StuckCause, detail: str = ""):
        self.cause = cause
        self.detail = detail
        self.path: tuple[int, ...] = ()


def _reduce(t: Term, store: Store, rules: MachineRules) -> tuple[Term, Store, str, tuple[int, ...]]:
    """One step of ``t``; raises ``_Stuck``.  ``t`` must not be a value."""
    kids = children(t)
    for i, k in enumerate(kids):
        if _evaluates_child(t, i) and not is_value(k):
            try:
                new_k, store, rule, path = _reduce(k, store, rules)
            except _Stuck as exc:
                exc.path = (i,) + exc.path
                raise
            new_kids = kids[:i] + (new_k,) + kids[i + 1:]
            return with_children(t, new_kids), store, rule, (i,) + path
    match t:
        case Var(name):
            raise _Stuck(StuckCause.FREE_VARIABLE, f"free variable {name!r}")
        case App(fn, arg):
            if isinstance(fn, Abs):
                return substitute_term(fn.body, fn.param, arg), store, "beta", ()
            raise _Stuck(StuckCause.NOT_A_FUNCTION, "applied value is not a function")
        case TyApp(fn, ty):
            if isinstance(fn, TyAbs):
                return substitute_type_in_term(fn.body, fn.var, ty), store, "type-beta", ()
            raise _Stuck(StuckCause.NOT_A_FUNCTION, "type-applied value is not a type abstraction")
        case RecordLit(fields):
            out = []
            for lbl, v in fields:
                loc, store = store.alloc(v)
                out.append((lbl, loc))
            return RecordVal(tuple(out)), store, "alloc", ()
        case Seal(inner):
            if isinstance(inner, (Abs, TyAbs, NatLit)):
                return inner, store, "seal-pass", ()
            if isinstance(inner, Seal) and isinstance(inner.inner, RecordVal):
                return inner, store, "seal-collapse", ()
            raise _Stuck(StuckCause.OTHER, "seal around a non-value")
        case FieldRead(target, lbl):
            rec, sealed = _record_of(target)
            loc = rec.lookup(lbl)
            if loc is None:
                raise _Stuck(StuckCause.FIELD_MISSING, f"no field {lbl!r}")
            if sealed and rules.sealed_read_adapts:
                return Seal(store[loc]), store, "sealed-field", ()
            return store[loc], store, "field", ()
        case FieldWrite(target, lbl, source):
            rec, sealed = _record_of(target)
            if sealed and rules.guard_sealed_writes:
                raise _Stuck(StuckCause.WRITE_THROUGH_SEAL, f"write to field {lbl!r} of a sealed record")
            loc = rec.lookup(lbl)
            if loc is None:
                raise _Stuck(StuckCause.FIELD_MISSING, f"no field {lbl!r}")
            old = store[loc]
            if rules.write_updates_store:
                store = store.set(loc, source)
            return old, store, "write-field", ()
    raise _Stuck(StuckCause.OTHER, f"no rule for {type(t).__name__}")


def _evaluates_child(t: Term, i: int) -> bool:
    # binders' bodies are not evaluated; a seal holding a value is itself a
    # redex (or a value), never a congruence position
    return not isinstance(t, (Abs, TyAbs))


def _record_of(target: Term) -> tuple[RecordVal, bool]:
    if isinstance(target, RecordVal):
        return target, False
    if isinstance(target, Seal) and isinstance(target.inner, RecordVal):
        return target.inner, True
    raise _Stuck(StuckCause.NOT_A_RECORD, "field access on a non-record value")


def step(config: MachineConfig, rules: MachineRules = STANDARD) -> StepResult:
    if is_value(config.term):
        return AlreadyValue()
    try:
        term, store, rule, path = _reduce(config.term, config.store, rules)
    except _Stuck as exc:
        return Stuck(exc.cause, exc.detail, exc.path)
    return Stepped(MachineConfig(term, store), rule, path)


# ---------------------------------------------------------------- multi-step


@dataclass(frozen=True)
class TraceEntry:
    config: MachineConfig
    rule: str


@dataclass
class Finished:
    value: Term
    store: Store
    trace: list[TraceEntry]


@dataclass
class StuckAt:
    cause: StuckCause
    config: MachineConfig
    trace: list[TraceEntry]
    detail: str = ""


@dataclass
class OutOfFuel:
    config: MachineConfig
    trace: list[TraceEntry]


Outcome = Union[Finished, StuckAt, OutOfFuel]


def evaluate(config: MachineConfig, fuel: int, rules: MachineRules = STANDARD) -> Outcome:
    """Run at most ``fuel`` steps, recording the trace."""
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    trace: list[TraceEntry] = []
    current = config
    while True:
        result = step(current, rules)
        if isinstance(result, AlreadyValue):
            return Finished(current.term, current.store, trace)
        if isinstance(result, Stuck):
            return StuckAt(result.cause, current, trace, result.detail)
        if len(trace) >= fuel:
            return OutOfFuel(current, trace)
        trace.append(TraceEntry(result.config, result.rule))
        current = result.config


def render_trace(initial: MachineConfig, outcome: Outcome) -> str:
    lines = [initial.render()]
    for entry in outcome.trace:
        lines.append(f"{entry.config.render()}  ({entry.rule})")
    if isinstance(outcome, StuckAt):
        lines.append(f"stuck: {outcome.cause.value}")
    elif isinstance(outcome, OutOfFuel):
        lines.append("out of fuel")
    return "\n".join(lines)
