"""Command-line entry point: ``fmlab {check,run,trace,crest,diff,erase,fuzz}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .campaign import CampaignConfig, default_workers, run_campaign
from .errors import FmError, SubtypeFuelExhausted
from .harness import crest, diff_run, erased_run
from .machine import Finished, MachineConfig, OutOfFuel, StuckAt, evaluate, render_trace
from .parser import SourceProgram, parse_program, pretty_store, pretty_term, pretty_type
from .typesys import EMPTY, typecheck

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_FUEL = 0, 1, 2, 3
FUEL_ENV = "FMLAB_FUEL"
DEFAULT_FUEL = 10_000


# ---------------------------------------------------------------- corpus


@dataclass(frozen=True)
class Expectation:
    accept: bool
    cause: str | None = None        # diagnostic code when rejected
    run: str | None = None          # "finished" or "stuck <cause>" for unchecked runs

    def __str__(self) -> str:
        return "accept" if self.accept else f"reject {self.cause}"


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    program: SourceProgram
    expected: Expectation


def _headers(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].strip().partition(":")
        if sep and key.strip() in ("expect", "run"):
            out[key.strip()] = value.strip()
    return out


def load_corpus(directory: str | Path | None = None) -> list[CorpusEntry]:
    """Read every ``.fm`` file with its ``# expect:`` header; the bundled corpus by default."""
    if directory is None:
        root = resources.files("fmlab") / "corpus"
        files = [(p.name, p.read_text(encoding="utf-8")) for p in root.iterdir() if p.name.endswith(".fm")]
    else:
        path = Path(directory)
        if not path.is_dir():
            raise FileNotFoundError(f"corpus directory not found: {path}")
        files = [(p.name, p.read_text(encoding="utf-8")) for p in path.glob("*.fm")]
    entries = []
    for name, text in sorted(files):
        head = _headers(text)
        if "expect" not in head:
            raise ValueError(f"{name}: missing '# expect:' header")
        verdict, _, cause = head["expect"].partition(" ")
        if verdict not in ("accept", "reject"):
            raise ValueError(f"{name}: bad expectation {head['expect']!r}")
        exp = Expectation(verdict == "accept", cause.strip() or None, head.get("run"))
        entries.append(CorpusEntry(name.removesuffix(".fm"), parse_program(text), exp))
    return entries


# ---------------------------------------------------------------- commands


class UsageError(Exception):
    pass


def _source(args: argparse.Namespace) -> SourceProgram:
    if args.expr is not None and args.file is not None:
        raise UsageError("give either a file or -e, not both")
    if args.expr is not None:
        return parse_program(args.expr, allow_runtime=getattr(args, "runtime", False))
    if args.file is None:
        raise UsageError("no input program")
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc.strerror}") from exc
    return parse_program(text)


def _emit(args: argparse.Namespace, text: str, record: dict) -> None:
    if args.format == "structured":
        print(json.dumps(record, sort_keys=True))
    else:
        print(text)


def _outcome_record(outcome) -> dict:
    match outcome:
        case Finished(value, store, trace):
            return {"outcome": "finished", "steps": len(trace), "value": pretty_term(value),
                    "store": pretty_store(store)}
        case StuckAt(cause, config, trace, detail):
            return {"outcome": "stuck", "cause": cause.value, "steps": len(trace), "detail": detail,
                    "term": pretty_term(config.term), "store": pretty_store(config.store)}
        case OutOfFuel(config, trace):
            return {"outcome": "out-of-fuel", "steps": len(trace)}
    raise TypeError(outcome)


def _outcome_status(outcome) -> int:
    if isinstance(outcome, OutOfFuel):
        return EXIT_FUEL
    return EXIT_FAIL if isinstance(outcome, StuckAt) else EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    src = _source(args)
    tt = typecheck(EMPTY, {}, src.main)
    _emit(args, pretty_type(tt.type), {"type": pretty_type(tt.type)})
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    src = _source(args)
    if not args.no_check:
        typecheck(EMPTY, {}, src.main)
    outcome = evaluate(MachineConfig(src.main), args.fuel)
    record = _outcome_record(outcome)
    match record["outcome"]:
        case "finished":
            text = f"{record['value']}\n{record['store']}"
        case "stuck":
            text = f"stuck: {record['cause']} after {record['steps']} steps\n" \
                   f"⟨{record['term']}, {record['store']}⟩"
        case _:
            text = f"out of fuel after {record['steps']} steps"
    _emit(args, text, record)
    return _outcome_status(outcome)


def cmd_trace(args: argparse.Namespace) -> int:
    src = _source(args)
    if not args.no_check:
        typecheck(EMPTY, {}, src.main)
    initial = MachineConfig(src.main)
    outcome = evaluate(initial, args.fuel)
    record = _outcome_record(outcome)
    record["trace"] = [initial.render()] + [f"{e.config.render()}  ({e.rule})" for e in outcome.trace]
    _emit(args, render_trace(initial, outcome), record)
    return _outcome_status(outcome)


def cmd_crest(args: argparse.Namespace) -> int:
    src = _source(args)
    text = pretty_term(crest(typecheck(EMPTY, {}, src.main)))
    _emit(args, text, {"crest": text})
    return EXIT_OK


def _report_status(report) -> int:
    if report.verdict == "violation":
        return EXIT_FAIL
    if report.original.kind == "out-of-fuel":
        return EXIT_FUEL
    return EXIT_OK


def cmd_diff(args: argparse.Namespace) -> int:
    report = diff_run(_source(args).main, args.fuel)
    _emit(args, report.render(), report.to_dict())
    return _report_status(report)


def cmd_erase(args: argparse.Namespace) -> int:
    report = erased_run(_source(args).main, args.fuel)
    _emit(args, report.render(), report.to_dict())
    return _report_status(report)


def cmd_fuzz(args: argparse.Namespace) -> int:
    cfg = CampaignConfig(seed=args.seed, count=args.count, depth=args.depth,
                         fuel=min(args.fuel, args.program_fuel), oracle_depth=args.oracle_depth,
                         workers=args.workers or default_workers())
    report = run_campaign(cfg)
    if args.format == "structured":
        print(report.to_json())
    else:
        print(report.render())
    return EXIT_OK if report.ok else EXIT_FAIL


# ---------------------------------------------------------------- argparse


def _nonneg(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {value}")
    return value


def _default_fuel() -> int:
    raw = os.environ.get(FUEL_ENV)
    if raw is None:
        return DEFAULT_FUEL
    try:
        return _nonneg(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"{FUEL_ENV}: {exc}") from None


def build_parser(default_fuel: int = DEFAULT_FUEL) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fuel", type=_nonneg, default=default_fuel,
                        help=f"maximum reduction steps (default {default_fuel}; env {FUEL_ENV})")
    common.add_argument("--oracle-depth", type=_nonneg, default=8, help="declarative oracle depth (default 8)")
    common.add_argument("--format", choices=("text", "structured"), default="text")

    program = argparse.ArgumentParser(add_help=False)
    program.add_argument("file", nargs="?", help="a .fm source file")
    program.add_argument("-e", "--expr", help="program text given inline")

    parser = argparse.ArgumentParser(prog="fmlab", description="Readonly references with runtime seals.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common, program], help="print the synthesized type")
    for name, helptext in (("run", "evaluate and print the final value and store"),
                           ("trace", "print every reduction step")):
        p = sub.add_parser(name, parents=[common, program], help=helptext)
        p.add_argument("--no-check", action="store_true", help="skip typechecking")
        p.add_argument("--runtime", action="store_true", help="allow store locations in -e text")
    sub.add_parser("crest", parents=[common, program], help="print the program with readonly subterms sealed")
    sub.add_parser("diff", parents=[common, program], help="run a program against its crest")
    sub.add_parser("erase", parents=[common, program], help="run a program against its seal erasure")
    fz = sub.add_parser("fuzz", parents=[common], help="property campaign over generated types and programs")
    fz.add_argument("--seed", type=_nonneg, default=0)
    fz.add_argument("--count", type=_nonneg, default=100)
    fz.add_argument("--depth", type=_nonneg, default=4)
    fz.add_argument("--program-fuel", type=_nonneg, default=500, help="step bound per generated program")
    fz.add_argument("--workers", type=_nonneg, default=0, help="worker processes (0 picks one per CPU)")
    return parser


COMMANDS = {
    "check": cmd_check, "run": cmd_run, "trace": cmd_trace, "crest": cmd_crest,
    "diff": cmd_diff, "erase": cmd_erase, "fuzz": cmd_fuzz,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser(_default_fuel())
    except UsageError as exc:
        print(f"fmlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fmlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FmError as exc:
        path = getattr(args, "file", None) or "<expr>"
        for d in exc.diagnostics:
            if args.format == "structured":
                print(json.dumps({"path": path, **d.to_dict()}, sort_keys=True), file=sys.stderr)
            else:
                print(d.render(path), file=sys.stderr)
        return EXIT_FAIL
    except SubtypeFuelExhausted as exc:
        print(f"fmlab: subtyping ran out of fuel: {exc}", file=sys.stderr)
        return EXIT_FUEL


if __name__ == "__main__":
    sys.exit(main())
