import random

import pytest
from hypothesis import given, settings

from fmlab.cli import load_corpus
from fmlab.errors import TypeCheckError
from fmlab.gen import GiveUp, gen_program
from fmlab.harness import crest, diff_run, erased_run, monitor_run
from fmlab.machine import MachineRules
from fmlab.parser import parse_term, parse_type, pretty_term
from fmlab.syntax import alpha_eq, erase_seals, seal_leq
from fmlab.typesys import EMPTY, nf, typecheck
from strategies import seeds

ACCEPTED = [e for e in load_corpus() if e.expected.accept]


def typed(text, ctx=EMPTY):
    return typecheck(ctx, {}, parse_term(text))


def test_crest_of_a_readonly_read():
    ctx = EMPTY.bind_term("z", parse_type("readonly {first: {x: Nat}}"))
    out = crest(typed("z.first", ctx))
    assert pretty_term(out) == "seal (seal z).first"
    assert nf(typecheck(ctx, {}, out).type) == nf(typed("z.first", ctx).type)


def test_crest_seals_lambdas_but_not_scalars():
    assert pretty_term(crest(typed("fun(x: Nat) x"))) == "seal (fun(x: Nat) x)"
    assert pretty_term(crest(typed("10"))) == "10"


def test_crest_does_not_double_wrap():
    assert pretty_term(crest(typed("seal {x = 10}"))) == "seal {x = 10}"


@pytest.mark.parametrize("entry", ACCEPTED, ids=lambda e: e.name)
def test_crest_on_corpus(entry):
    tt = typecheck(EMPTY, {}, entry.program.main)
    out = crest(tt)
    assert seal_leq(entry.program.main, out)
    assert alpha_eq(erase_seals(out), erase_seals(entry.program.main))
    typecheck(EMPTY, {}, out, tt.type)


@pytest.mark.parametrize("entry", ACCEPTED, ids=lambda e: e.name)
def test_corpus_runs_are_safe(entry):
    prog = entry.program.main
    assert diff_run(prog, 10_000).verdict == "equivalent"
    assert erased_run(prog, 10_000).verdict == "equivalent"
    report = monitor_run(prog, 10_000)
    assert report.ok and report.outcome == "finished"


def test_diff_examples():
    report = diff_run(parse_term("{x = 10}.x := 5"), 100)
    assert report.verdict == "equivalent"
    assert report.original.value == report.transformed.value == "10"
    report = diff_run(parse_term("(seal {y = {x = 10}}).y"), 100)
    assert report.verdict == "equivalent"
    assert report.original.value.startswith("seal {x :")
    assert report.transformed.value.startswith("seal {x :")


def test_diff_rejects_ill_typed_programs():
    report = diff_run(parse_term("(seal {x = 10}).x := 5"), 100)
    assert report.verdict == "violation" and report.checks == {"well-typed": False}


def test_erase_examples():
    report = erased_run(parse_term("seal {x = 10}"), 100)
    assert report.verdict == "equivalent"
    assert (report.original.value, report.transformed.value) == ("seal {x : 0x0001}", "{x : 0x0001}")
    report = erased_run(parse_term("(seal (fun(x: Nat) x)) 5"), 100)
    assert report.verdict == "equivalent" and report.transformed.value == "5"
    assert report.checks["typed-erasure"]


def test_erasing_a_crest_gives_back_the_program():
    for entry in ACCEPTED:
        out = crest(typecheck(EMPTY, {}, entry.program.main))
        assert alpha_eq(erase_seals(out), erase_seals(entry.program.main))
        assert erased_run(out, 10_000).verdict == "equivalent"


def test_monitor_records_every_step():
    report = monitor_run(parse_term("(seal {y = {x = 10}}).y"), 100)
    assert report.ok and [r.rule for r in report.records] == ["alloc", "alloc", "sealed-field"]
    assert all(r.retyped and r.preserved and r.progress for r in report.records)
    assert report.records[0].extension == {"0x0001": "Nat"}


def test_monitor_on_a_value():
    report = monitor_run(parse_term("fun(x: Nat) x"), 10)
    assert report.ok and report.records == []


def test_monitor_flags_ill_typed_input():
    report = monitor_run(parse_term("(seal {x = 10}).x := 5"), 10)
    assert not report.ok and report.outcome == "ill-typed"


def test_skipped_store_update_is_type_preserving():
    # the write mutant keeps the old value, which still has the field's type
    report = monitor_run(parse_term("{x = 10}.x := 5"), 10, MachineRules(write_updates_store=False))
    assert report.ok


def test_mutants_break_the_basic_examples():
    no_guard = MachineRules(guard_sealed_writes=False)
    prog = parse_term("(fun(r: {x: Nat}) r.x := 5) {x = 10}")
    assert diff_run(prog, 100, no_guard).verdict == "equivalent"
    no_adapt = MachineRules(sealed_read_adapts=False)
    report = diff_run(parse_term("(seal {y = {x = 10}}).y"), 100, no_adapt)
    assert report.original.value == "{x : 0x0001}"


def test_reports_serialize():
    report = diff_run(parse_term("{x = 10}.x := 5"), 100)
    d = report.to_dict()
    assert d["verdict"] == "equivalent" and d["original"]["kind"] == "finished"
    assert "verdict: equivalent" in report.render()


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_generated_programs(seed):
    try:
        prog, target = gen_program(random.Random(seed), depth=3)
    except GiveUp:
        return
    monitor = monitor_run(prog, 300, expected=target)
    assert monitor.ok, monitor.first_violation
    if monitor.outcome == "finished":
        assert diff_run(prog, 300, expected=target).verdict == "equivalent"
        assert erased_run(prog, 300, expected=target).verdict == "equivalent"


def test_monitor_ascribes_substituted_arguments():
    # after the beta step the argument sits where only synthesis applies
    g = "(fun(x: Nat) {b = {c = 0}}.b := {c = fun(y: Nat) y})"
    prog = parse_term(f"(fun(f: Nat -> {{c: Top}}) ({{a = f}}.a) 1) {g}")
    with pytest.raises(TypeCheckError):
        typecheck(EMPTY, {}, parse_term(f"({{a = {g}}}.a) 1"))
    report = monitor_run(prog, 100)
    assert report.ok and report.outcome == "finished", report.first_violation
