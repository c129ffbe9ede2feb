"""Seeded property campaigns over generated types and programs.

Each sample draws from its own RNG keyed by ``(seed, index)``, so results do
not depend on how the work is split across worker processes.  Workers own
their samples; the only synchronization is the final merge.
"""

from __future__ import annotations

import json
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .errors import SubtypeFuelExhausted, TypeCheckError
from .gen import GiveUp, gen_program, gen_type, minimize
from .harness import diff_run, erased_run, monitor_run
from .oracle import DeclarativeProver
from .parser import pretty_term, pretty_type
from .syntax import Readonly, Term, Type, canonical_type
from .typesys import EMPTY, is_normal, nf, subtype, typecheck

PROPERTIES = (
    "nf-idempotent", "nf-normal", "nf-equivalent", "subtype-agreement",
    "generator-sound", "monitor", "diff", "erase",
)
MAX_EXAMPLES = 5


@dataclass(frozen=True)
class CampaignConfig:
    seed: int = 0
    count: int = 100
    depth: int = 4
    fuel: int = 500
    oracle_depth: int = 8
    workers: int = 1


@dataclass
class Failure:
    property: str
    index: int
    subject: str
    detail: str


@dataclass
class CampaignReport:
    config: CampaignConfig
    checked: dict[str, int] = field(default_factory=lambda: dict.fromkeys(PROPERTIES, 0))
    failed: dict[str, int] = field(default_factory=lambda: dict.fromkeys(PROPERTIES, 0))
    outcomes: dict[str, int] = field(default_factory=dict)
    gave_up: int = 0
    examples: list[Failure] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(self.failed.values())

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def merge(self, other: "CampaignReport") -> None:
        for name in PROPERTIES:
            self.checked[name] += other.checked[name]
            self.failed[name] += other.failed[name]
        for kind, n in other.outcomes.items():
            self.outcomes[kind] = self.outcomes.get(kind, 0) + n
        self.gave_up += other.gave_up
        self.examples.extend(other.examples)

    def to_dict(self) -> dict:
        examples = sorted(self.examples, key=lambda f: (f.index, f.property))[:MAX_EXAMPLES]
        return {
            "seed": self.config.seed,
            "count": self.config.count,
            "depth": self.config.depth,
            "fuel": self.config.fuel,
            "oracle_depth": self.config.oracle_depth,
            "checked": self.checked,
            "failed": self.failed,
            "outcomes": self.outcomes,
            "gave_up": self.gave_up,
            "violations": self.violations,
            "examples": [vars(f) for f in examples],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def render(self) -> str:
        lines = [f"campaign seed={self.config.seed} count={self.config.count} depth={self.config.depth}"]
        for name in PROPERTIES:
            lines.append(f"  {name:<18} {self.checked[name]:>7} checked  {self.failed[name]:>4} failed")
        if self.outcomes:
            parts = ", ".join(f"{k}={v}" for k, v in sorted(self.outcomes.items()))
            lines.append(f"  outcomes: {parts}")
        lines.append(f"  generator gave up: {self.gave_up}")
        for f in sorted(self.examples, key=lambda f: (f.index, f.property))[:MAX_EXAMPLES]:
            lines.append(f"  FAIL {f.property} #{f.index}: {f.detail}")
            lines.append(f"       {f.subject}")
        lines.append(f"violations: {self.violations}")
        return "\n".join(lines)


def sample_rng(seed: int, index: int) -> random.Random:
    return random.Random(f"{seed}:{index}")


# ---------------------------------------------------------------- properties


def check_type_sample(report: CampaignReport, rng: random.Random, index: int, cfg: CampaignConfig) -> None:
    t = gen_type(rng.randint(0, cfg.depth), EMPTY, rng)
    n = nf(t)
    _record(report, "nf-idempotent", canonical_type(nf(n)) == canonical_type(n), index, t, "nf is not idempotent")
    _record(report, "nf-normal", is_normal(n), index, t, "nf result is not a normal form")
    prover = DeclarativeProver()
    small = gen_type(rng.randint(0, min(cfg.depth, 3)), EMPTY, rng)
    both = prover.prove(EMPTY, small, nf(small), cfg.oracle_depth) and \
        prover.prove(EMPTY, nf(small), small, cfg.oracle_depth)
    _record(report, "nf-equivalent", both, index, small, "oracle cannot prove T and nf(T) equivalent")
    s, u = related_pair(rng, min(cfg.depth, 3))
    verdict = agreement(s, u, cfg.oracle_depth, prover)
    _record(report, "subtype-agreement", verdict is None, index, f"{pretty_type(s)} <: {pretty_type(u)}",
            verdict or "")


def related_pair(rng: random.Random, depth: int) -> tuple[Type, Type]:
    """A pair of types that is sometimes, but not always, in the subtype relation."""
    s = gen_type(rng.randint(0, depth), EMPTY, rng)
    roll = rng.randrange(4)
    if roll == 0:
        u = Readonly(s)
    elif roll == 1:
        u = nf(s)
    else:
        u = gen_type(rng.randint(0, depth), EMPTY, rng)
    return (u, s) if rng.random() < 0.5 else (s, u)


def agreement(s: Type, t: Type, oracle_depth: int, prover: DeclarativeProver | None = None) -> str | None:
    """None when the engine and the oracle do not contradict each other."""
    prover = prover or DeclarativeProver()
    try:
        engine = subtype(EMPTY, s, t)
    except SubtypeFuelExhausted:
        return None
    if engine and not prover.prove(EMPTY, s, t, max(oracle_depth, 10)):
        return "engine accepts but the oracle finds no proof"
    if not engine and prover.prove(EMPTY, s, t, min(oracle_depth, 5)):
        return "oracle proves it but the engine rejects"
    return None


def check_program_sample(report: CampaignReport, rng: random.Random, index: int, cfg: CampaignConfig) -> None:
    try:
        program, target = gen_program(rng, depth=cfg.depth)
    except GiveUp:
        report.gave_up += 1
        return
    try:
        typecheck(EMPTY, {}, program, target)
        sound = True
    except (TypeCheckError, SubtypeFuelExhausted):
        sound = False
    _record(report, "generator-sound", sound, index, program, f"does not typecheck at {pretty_type(target)}")
    if not sound:
        return
    monitor = monitor_run(program, cfg.fuel, expected=target)
    report.outcomes[monitor.outcome] = report.outcomes.get(monitor.outcome, 0) + 1
    _record(report, "monitor", monitor.ok, index, program, monitor.first_violation,
            lambda p: not monitor_run(p, cfg.fuel, expected=target).ok)
    if monitor.outcome != "finished":
        return
    diff = diff_run(program, cfg.fuel, expected=target)
    _record(report, "diff", diff.verdict == "equivalent", index, program, diff.detail,
            lambda p: diff_run(p, cfg.fuel, expected=target).verdict == "violation")
    erase = erased_run(program, cfg.fuel, expected=target)
    _record(report, "erase", erase.verdict == "equivalent", index, program, erase.detail,
            lambda p: erased_run(p, cfg.fuel, expected=target).verdict == "violation")


def _record(report: CampaignReport, name: str, ok: bool, index: int, subject, detail: str,
            still_fails=None) -> None:
    report.checked[name] += 1
    if ok:
        return
    report.failed[name] += 1
    if isinstance(subject, Term):
        if still_fails is not None:
            subject = minimize(subject, still_fails)
        subject = pretty_term(subject)
    elif not isinstance(subject, str):
        subject = pretty_type(subject)
    report.examples.append(Failure(name, index, subject, detail))


# ---------------------------------------------------------------- driver


def _run_slice(cfg: CampaignConfig, indices: range) -> CampaignReport:
    report = CampaignReport(cfg)
    for i in indices:
        check_type_sample(report, sample_rng(cfg.seed, 2 * i), i, cfg)
        check_program_sample(report, sample_rng(cfg.seed, 2 * i + 1), i, cfg)
    return report


def run_campaign(cfg: CampaignConfig) -> CampaignReport:
    workers = max(1, min(cfg.workers, cfg.count or 1))
    if workers == 1:
        return _run_slice(cfg, range(cfg.count))
    chunks = [range(k, cfg.count, workers) for k in range(workers)]
    total = CampaignReport(cfg)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_slice, [cfg] * workers, chunks):
            total.merge(part)
    return total


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))
