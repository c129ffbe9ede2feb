import random

import pytest
from hypothesis import given, settings

from fmlab.gen import GiveUp, gen_program, gen_type, gen_well_typed, minimize, shrink
from fmlab.parser import parse_term, pretty_term
from fmlab.syntax import (
    Forall, Nat, NatLit, Readonly, RecordTy, Seal, Top, TyVar, Type, free_type_vars,
)
from fmlab.typesys import EMPTY, typecheck
from strategies import seeds


def test_depth_zero_leaves():
    rng = random.Random(0)
    assert {type(gen_type(0, EMPTY, rng)) for _ in range(50)} == {Top, Nat}


def test_type_variables_come_from_the_context():
    ctx = EMPTY.bind_type("X", Top())
    rng = random.Random(1)
    seen = set()
    for _ in range(300):
        seen |= free_type_vars(gen_type(3, ctx, rng))
    assert seen == {"X"}


def _constructors(t: Type, acc: set) -> set:
    acc.add(type(t).__name__)
    for v in vars(t).values():
        if isinstance(v, (Top, Nat)) or hasattr(v, "span") and not isinstance(v, str):
            _constructors(v, acc)
    return acc


def test_every_constructor_appears():
    rng = random.Random(2)
    ctx = EMPTY.bind_type("X", Top())
    seen: set = set()
    for _ in range(200):
        _constructors(gen_type(4, ctx, rng), seen)
    assert seen >= {"Top", "Nat", "Arrow", "Forall", "RecordTy", "Intersect", "Readonly", "TyVar"}


@given(seeds)
def test_closed_types_are_well_scoped(seed):
    assert not free_type_vars(gen_type(5, EMPTY, random.Random(seed)))


def test_nat_target():
    for seed in range(30):
        try:
            t = gen_well_typed(EMPTY, Nat(), rng=random.Random(seed))
        except GiveUp:
            continue
        typecheck(EMPTY, {}, t, Nat())


def test_readonly_record_target():
    target = Readonly(RecordTy("x", Nat()))
    sealed = made = 0
    for seed in range(40):
        try:
            t = gen_well_typed(EMPTY, target, rng=random.Random(seed), depth=1)
        except GiveUp:
            continue
        typecheck(EMPTY, {}, t, target)
        made += 1
        sealed += isinstance(t, Seal)
    assert made > 30 and sealed > 0


def test_give_up_on_exhausted_fuel():
    with pytest.raises(GiveUp):
        gen_well_typed(EMPTY, Nat(), fuel=0, rng=random.Random(0))


def test_uninhabited_target_gives_up():
    # a bare type variable has no closed inhabitant
    with pytest.raises(GiveUp):
        gen_well_typed(EMPTY.bind_type("X", Top()), TyVar("X"), rng=random.Random(0))


@given(seeds)
@settings(max_examples=150, deadline=None)
def test_generator_soundness(seed):
    try:
        prog, target = gen_program(random.Random(seed))
    except GiveUp:
        return
    typecheck(EMPTY, {}, prog, target)


def test_generator_reaches_every_form():
    kinds: set = set()
    for seed in range(60):
        try:
            prog, _ = gen_program(random.Random(seed))
        except GiveUp:
            continue
        stack = [prog]
        while stack:
            t = stack.pop()
            kinds.add(type(t).__name__)
            from fmlab.syntax import children
            stack.extend(children(t))
    assert kinds >= {"Abs", "App", "TyAbs", "TyApp", "RecordLit", "FieldRead", "FieldWrite", "Seal",
                     "NatLit", "Var"}


def test_shrinking():
    t = parse_term("seal {a = 5, b = seal 7}")
    outs = {pretty_term(s) for s in shrink(t)}
    assert "{a = 5, b = seal 7}" in outs
    assert "seal {a = 0, b = seal 7}" in outs
    assert "seal {b = seal 7}" in outs
    small = minimize(t, lambda u: "seal" in pretty_term(u))
    assert pretty_term(small) in ("seal 0", "{b = seal 0}", "seal {a = 0}")
    assert not list(filter(lambda u: "seal" in pretty_term(u), shrink(small)))
