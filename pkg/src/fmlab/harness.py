"""Executable checks of the sealing metatheory on concrete runs.

``diff_run`` compares a program against its crested version in lockstep,
``erased_run`` compares a sealed program against its seal-free erasure, and
``monitor_run`` re-typechecks every intermediate configuration.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .errors import SubtypeFuelExhausted, TypeCheckError
from .machine import (
    STANDARD, AlreadyValue, MachineConfig, MachineRules, Stepped, Stuck, step,
)
from .parser import pretty_store, pretty_term, pretty_type
from .syntax import (
    Location, RecordVal, Seal, Term, Type, children, erase_seals, seal_count, seal_leq, store_leq,
    subterm_at, with_children,
)
from .typesys import (
    EMPTY, StoreTyping, TypedTerm, field_candidates, is_readonly_type, is_scalar_type,
    store_errors, typecheck,
)

EQUIVALENT = "equivalent"
VIOLATION = "violation"


# ---------------------------------------------------------------- crest


def crest(tt: TypedTerm) -> Term:
    """Seal every subterm the derivation gives a read-only type.

    Scalar-typed subterms are left alone, and a subterm that already sits
    directly under a ``seal`` is not wrapped again.
    """
    return _crest(tt.term, tt, under_seal=False)


def _crest(term: Term, tt: TypedTerm, under_seal: bool) -> Term:
    kids = children(term)
    if kids:
        is_seal = isinstance(term, Seal)
        term = with_children(term, tuple(
            _crest(k, ktt, is_seal) for k, ktt in zip(kids, tt.children)))
    if isinstance(term, Seal) or under_seal:
        return term
    if is_readonly_type(tt.type) and not is_scalar_type(tt.type):
        return Seal(term)
    return term


# ---------------------------------------------------------------- reports


@dataclass
class RunSummary:
    kind: str            # finished, stuck, out-of-fuel, not-run
    steps: int = 0
    value: str | None = None
    store: str | None = None
    cause: str | None = None


@dataclass
class DiffReport:
    original: RunSummary
    transformed: RunSummary
    checks: dict[str, bool] = field(default_factory=dict)
    seal_drops: int = 0
    verdict: str = EQUIVALENT
    detail: str = ""
    transformed_program: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict == EQUIVALENT

    def fail(self, check: str, detail: str) -> "DiffReport":
        self.checks[check] = False
        if self.verdict == EQUIVALENT:
            self.verdict = VIOLATION
            self.detail = f"{check}: {detail}"
        return self

    def passed(self, check: str) -> None:
        self.checks.setdefault(check, True)

    def to_dict(self) -> dict:
        return asdict(self)

    def render(self) -> str:
        lines = [f"verdict: {self.verdict}" + (f" ({self.detail})" if self.detail else "")]
        for label, run in (("original", self.original), ("transformed", self.transformed)):
            extra = f" value={run.value} store={run.store}" if run.value is not None else ""
            cause = f" cause={run.cause}" if run.cause else ""
            lines.append(f"{label}: {run.kind} after {run.steps} steps{extra}{cause}")
        if self.transformed_program:
            lines.append(f"transformed program: {self.transformed_program}")
        lines.append(f"seal-discharging steps: {self.seal_drops}")
        for name, ok in sorted(self.checks.items()):
            lines.append(f"  [{'ok' if ok else 'FAIL'}] {name}")
        return "\n".join(lines)


def _finished(cfg: MachineConfig, steps: int) -> RunSummary:
    return RunSummary("finished", steps, pretty_term(cfg.term), pretty_store(cfg.store))


def _related(s: MachineConfig, t: MachineConfig) -> bool:
    return seal_leq(s.term, t.term) and store_leq(s.store, t.store)


def _judge(program: Term, report: DiffReport, expected: Type | None) -> TypedTerm | None:
    try:
        return typecheck(EMPTY, {}, program, expected)
    except (TypeCheckError, SubtypeFuelExhausted) as exc:
        report.fail("well-typed", str(exc))
        return None


# ---------------------------------------------------------------- diff_run


def diff_run(program: Term, fuel: int, rules: MachineRules = STANDARD,
             expected: Type | None = None) -> DiffReport:
    """Run ``program`` and its crest side by side, checking the simulation."""
    report = DiffReport(RunSummary("not-run"), RunSummary("not-run"))
    tt = _judge(program, report, expected)
    if tt is None:
        return report
    crested = crest(tt)
    report.transformed_program = pretty_term(crested)
    if seal_leq(program, crested):
        report.passed("crest-ordering")
    else:
        return report.fail("crest-ordering", "original is not seal-below its crest")
    try:
        typecheck(EMPTY, {}, crested, expected=tt.judged)
        report.passed("crest-typing")
    except (TypeCheckError, SubtypeFuelExhausted) as exc:
        report.fail("crest-typing", str(exc))

    s = MachineConfig(program)
    t = MachineConfig(crested)
    s_steps = t_steps = 0
    while True:
        if not _related(s, t):
            return report.fail("relation", f"configurations unrelated after {s_steps} steps")
        rs = step(s, rules)
        if isinstance(rs, Stuck):
            report.original = RunSummary("stuck", s_steps, cause=rs.cause.value)
            return report.fail("original-progress", f"original stuck ({rs.cause.value}) at step {s_steps}")
        if isinstance(rs, AlreadyValue):
            report.original = _finished(s, s_steps)
            break
        if s_steps >= fuel:
            report.original = RunSummary("out-of-fuel", s_steps)
            report.transformed = RunSummary("out-of-fuel", t_steps)
            return report
        s_next = rs.config
        s_steps += 1
        while True:
            rt = step(t, rules)
            if isinstance(rt, Stuck):
                report.transformed = RunSummary("stuck", t_steps, cause=rt.cause.value)
                return report.fail("crested-never-stuck",
                                   f"crested run stuck ({rt.cause.value}) at step {t_steps}")
            if isinstance(rt, AlreadyValue):
                report.transformed = _finished(t, t_steps)
                return report.fail("paired-simulation",
                                   f"crested run finished while the original still steps (step {s_steps})")
            t_next = rt.config
            t_steps += 1
            if _related(s_next, t_next):
                report.passed("paired-simulation")
                t = t_next
                break
            if _related(s, t_next) and seal_count(t_next.term) < seal_count(t.term):
                report.seal_drops += 1
                report.passed("seal-count-drop")
                t = t_next
                continue
            return report.fail("paired-simulation",
                               f"crested step {t_steps} ({rt.rule}) neither matches nor discharges a seal")
        s = s_next

    # the original is a value: the crested side may only discharge seals
    while True:
        rt = step(t, rules)
        if isinstance(rt, AlreadyValue):
            report.transformed = _finished(t, t_steps)
            break
        if isinstance(rt, Stuck):
            report.transformed = RunSummary("stuck", t_steps, cause=rt.cause.value)
            return report.fail("crested-never-stuck", f"crested run stuck ({rt.cause.value})")
        t_next = rt.config
        t_steps += 1
        if not (_related(s, t_next) and seal_count(t_next.term) < seal_count(t.term)):
            return report.fail("value-descent", f"crested step {t_steps} ({rt.rule}) did not discharge a seal")
        report.seal_drops += 1
        report.passed("seal-count-drop")
        t = t_next
    if seal_leq(s.term, t.term) and store_leq(s.store, t.store):
        report.passed("results-related")
    else:
        report.fail("results-related", "final values or stores are not seal-related")
    return report


# ---------------------------------------------------------------- monitor


@dataclass
class StepRecord:
    index: int
    rule: str
    retyped: bool
    preserved: bool
    progress: bool
    extension: dict[str, str] = field(default_factory=dict)
    detail: str = ""


@dataclass
class MonitorReport:
    program_type: str = ""
    records: list[StepRecord] = field(default_factory=list)
    outcome: str = "not-run"
    violations: int = 0
    first_violation: str = ""
    snapshot: str = ""
    store_typing: dict[Location, object] = field(default_factory=dict, repr=False)
    ascriptions: dict[Term, list[Type]] = field(default_factory=dict, repr=False)
    final: MachineConfig | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def summary(self) -> dict:
        return {
            "type": self.program_type,
            "steps": len(self.records),
            "outcome": self.outcome,
            "preserved": sum(r.preserved for r in self.records),
            "violations": self.violations,
            "first_violation": self.first_violation,
        }

    def flag(self, detail: str, config: MachineConfig) -> None:
        self.violations += 1
        if not self.first_violation:
            self.first_violation = detail
            self.snapshot = config.render()


def _extension(tt: TypedTerm, path: tuple[int, ...], after: MachineConfig,
               new_locs: set[Location], sigma: StoreTyping, ascriptions) -> dict[Location, object]:
    """Store types for freshly allocated cells, read off the pre-step derivation."""
    redex = tt.at(path)
    record = subterm_at(after.term, path)
    out: dict[Location, object] = {}
    if isinstance(record, RecordVal):
        for lbl, loc in record.fields:
            if loc not in new_locs:
                continue
            mut, _ = field_candidates(EMPTY, redex.type, lbl)
            if mut is None:
                mut = typecheck(EMPTY, {**sigma, **out}, after.store[loc], ascriptions=ascriptions).type
            out[loc] = mut
    for loc in sorted(new_locs - set(out)):
        out[loc] = typecheck(EMPTY, {**sigma, **out}, after.store[loc], ascriptions=ascriptions).type
    return out


def _ascribe(table: dict[Term, list[Type]], value: Term, ty: Type) -> None:
    known = table.setdefault(value, [])
    if ty not in known:
        known.append(ty)


def monitor_run(program: Term, fuel: int, rules: MachineRules = STANDARD,
                expected: Type | None = None) -> MonitorReport:
    """Step ``program``, re-checking preservation and progress after every step."""
    report = MonitorReport()
    try:
        tt = typecheck(EMPTY, {}, program, expected)
    except (TypeCheckError, SubtypeFuelExhausted) as exc:
        report.flag(f"program is not well-typed: {exc}", MachineConfig(program))
        report.outcome = "ill-typed"
        return report
    goal = tt.judged
    report.program_type = pretty_type(goal)
    sigma: dict[Location, object] = {}
    cfg = MachineConfig(program)
    for index in range(fuel + 1):
        result = step(cfg, rules)
        if isinstance(result, AlreadyValue):
            report.outcome = "finished"
            break
        if isinstance(result, Stuck):
            report.records.append(StepRecord(index, "-", True, True, False, detail=result.cause.value))
            report.flag(f"progress: stuck ({result.cause.value}) at step {index}", cfg)
            report.outcome = "stuck"
            break
        if index == fuel:
            report.outcome = "out-of-fuel"
            break
        assert isinstance(result, Stepped)
        after = result.config
        if result.rule == "beta":
            redex = subterm_at(cfg.term, result.path)
            _ascribe(report.ascriptions, redex.arg, redex.fn.param_type)
        new_locs = set(after.store) - set(cfg.store)
        ext = _extension(tt, result.path, after, new_locs, sigma, report.ascriptions) if new_locs else {}
        sigma.update(ext)
        for loc, ty in sigma.items():
            _ascribe(report.ascriptions, after.store[loc], ty)
        record = StepRecord(index, result.rule, False, False, True,
                            {str(loc): pretty_type(ty) for loc, ty in ext.items()})
        try:
            tt = typecheck(EMPTY, sigma, after.term, expected=goal, ascriptions=report.ascriptions)
            record.retyped = True
        except (TypeCheckError, SubtypeFuelExhausted) as exc:
            record.detail = str(exc)
        problems = store_errors(EMPTY, sigma, after.store, ascriptions=report.ascriptions)
        record.preserved = record.retyped and not problems
        if problems and not record.detail:
            record.detail = problems[0].message
        report.records.append(record)
        cfg = after
        if not record.preserved:
            report.flag(f"preservation: step {index} ({result.rule}): {record.detail}", after)
            report.outcome = "violation"
            break
    report.store_typing = dict(sigma)
    report.final = cfg
    return report


# ---------------------------------------------------------------- erased_run


def erased_run(program: Term, fuel: int, rules: MachineRules = STANDARD,
               expected: Type | None = None) -> DiffReport:
    """Compare ``program`` against ``erase_seals(program)``.

    The sealed program leads; each of its steps either discharges a seal or
    is matched by exactly one step of the erased program.
    """
    report = DiffReport(RunSummary("not-run"), RunSummary("not-run"))
    tt = _judge(program, report, expected)
    if tt is None:
        return report
    erased = erase_seals(program)
    report.transformed_program = pretty_term(erased)
    try:
        typecheck(EMPTY, {}, erased, expected=tt.judged)
        report.passed("erased-typing")
    except (TypeCheckError, SubtypeFuelExhausted) as exc:
        report.fail("erased-typing", str(exc))

    t = MachineConfig(program)   # sealed side
    s = MachineConfig(erased)    # erased side
    s_steps = t_steps = 0
    while True:
        if not _related(s, t):
            return report.fail("relation", f"configurations unrelated after {t_steps} steps")
        rt = step(t, rules)
        if isinstance(rt, AlreadyValue):
            report.original = _finished(t, t_steps)
            break
        if isinstance(rt, Stuck):
            report.original = RunSummary("stuck", t_steps, cause=rt.cause.value)
            return report.fail("sealed-progress", f"sealed program stuck ({rt.cause.value})")
        if t_steps >= fuel:
            report.original = RunSummary("out-of-fuel", t_steps)
            report.transformed = RunSummary("out-of-fuel", s_steps)
            return report
        t_next = rt.config
        t_steps += 1
        if _related(s, t_next) and seal_count(t_next.term) < seal_count(t.term):
            report.seal_drops += 1
            t = t_next
            continue
        rs = step(s, rules)
        if not isinstance(rs, Stepped):
            kind = rs.cause.value if isinstance(rs, Stuck) else "a value"
            report.transformed = RunSummary("stuck" if isinstance(rs, Stuck) else "finished", s_steps)
            return report.fail("erasure-never-stuck", f"erased program is {kind} while the sealed one steps")
        s_steps += 1
        if not _related(rs.config, t_next):
            return report.fail("step-exists", f"erased step {s_steps} ({rs.rule}) does not match")
        s, t = rs.config, t_next

    if not isinstance(step(s, rules), AlreadyValue):
        return report.fail("seal-value", "erased side is not a value when the sealed side is")
    report.transformed = _finished(s, s_steps)
    if seal_leq(s.term, t.term) and store_leq(s.store, t.store):
        report.passed("results-related")
    else:
        report.fail("results-related", "erased result is not seal-below the sealed result")

    monitor = monitor_run(erased, max(fuel, s_steps) + 1, rules, tt.judged)
    try:
        typecheck(EMPTY, monitor.store_typing, s.term, expected=tt.judged,
                  ascriptions=monitor.ascriptions)
        report.passed("typed-erasure")
    except (TypeCheckError, SubtypeFuelExhausted) as exc:
        report.fail("typed-erasure", f"erased value does not retype: {exc}")
    return report
