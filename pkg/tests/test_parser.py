import pytest
from hypothesis import given, strategies as st

from fmlab.errors import ParseError
from fmlab.parser import (
    parse_program, parse_term, parse_type, pretty_store, pretty_term, pretty_type, tokenize,
)
from fmlab.syntax import (
    Abs, Arrow, FieldRead, FieldWrite, Forall, Intersect, Location, Nat, NatLit, Readonly,
    RecordLit, RecordTy, RecordVal, Seal, Store, Top, TyVar, Var, alpha_eq, canonical_type,
)
from strategies import terms, types


def test_parse_write():
    t = parse_term("{x = 10}.x := 5")
    assert t == FieldWrite(RecordLit((("x", NatLit(10)),)), "x", NatLit(5))


def test_parse_seal():
    t = parse_term("seal {y = {x = 10}}")
    assert t == Seal(RecordLit((("y", RecordLit((("x", NatLit(10)),))),)))


def test_parse_abs():
    assert parse_term("fun(x: Top) x") == Abs("x", Top(), Var("x"))


def test_type_precedence():
    assert parse_type("readonly {x: Nat} & {y: Nat}") == \
        Intersect(Readonly(RecordTy("x", Nat())), RecordTy("y", Nat()))
    assert parse_type("forall(X <: Top) X -> X") == Forall("X", Top(), Arrow(TyVar("X"), TyVar("X")))
    assert parse_type("readonly readonly {x: Nat}") == Readonly(Readonly(RecordTy("x", Nat())))
    assert parse_type("Nat -> Nat -> Nat") == Arrow(Nat(), Arrow(Nat(), Nat()))
    assert parse_type("Top & Nat & Top") == Intersect(Intersect(Top(), Nat()), Top())


def test_record_type_sugar_is_an_intersection():
    assert parse_type("{x: Nat, y: Nat}") == Intersect(RecordTy("x", Nat()), RecordTy("y", Nat()))


def test_application_and_projection_binding():
    t = parse_term("f x.a")
    assert t.arg == FieldRead(Var("x"), "a")
    t = parse_term("f [Nat] x")
    assert t.fn.type_arg == Nat()


def test_pretty_examples():
    assert pretty_term(RecordVal((("x", Location(1)),))) == "{x : 0x0001}"
    assert pretty_term(Seal(RecordVal((("x", Location(1)),)))) == "seal {x : 0x0001}"
    assert pretty_type(Top()) == "Top"
    assert pretty_type(Intersect(RecordTy("x", Nat()), RecordTy("y", Nat()))) == "{x: Nat} & {y: Nat}"
    assert pretty_store(Store({Location(1): NatLit(5)})) == "[0x0001: 5]"


def test_declarations_expand():
    src = parse_program("type P = {a: Nat}; def id = fun(p: P) p; id {a = 1}")
    assert src.main.fn == Abs("p", RecordTy("a", Nat()), Var("p"))
    assert [d[:2] for d in src.declarations] == [("type", "P"), ("def", "id")]


def test_comments_are_ignored():
    assert parse_term("# hello\n1 # trailing\n") == NatLit(1)


@pytest.mark.parametrize("text,code", [
    ("{a = 1, a = 2}", "duplicate-label"),
    ("{x : 0x0001}", "location-literal"),
    ("0x0001", "location-literal"),
    ("1 := 2", "syntax-error"),
    ("fun(x: Nat", "syntax-error"),
    ("def f = fun(x: Nat) y; f", "syntax-error"),
    ("(1", "syntax-error"),
    ("1 )", "syntax-error"),
    ("{}", "syntax-error"),
    ("$", "syntax-error"),
])
def test_errors(text, code):
    with pytest.raises(ParseError) as info:
        parse_program(text)
    diag = info.value.diagnostics[0]
    assert diag.code == code
    assert 0 <= diag.span.offset <= len(text)
    assert diag.span.offset + diag.span.length <= len(text)


def test_runtime_records_need_opt_in():
    t = parse_term("(seal {x : 0x0001}).x", allow_runtime=True)
    assert t == FieldRead(Seal(RecordVal((("x", Location(1)),))), "x")


def test_spans_point_into_source():
    text = "fun(y: Nat)\n  y.first := 7"
    t = parse_term(text)
    body = t.body
    assert (body.span.line, body.span.column) == (2, 3)
    assert text[body.span.offset:body.span.offset + body.span.length] == "y.first := 7"


@given(terms)
def test_term_round_trip(t):
    assert alpha_eq(parse_term(pretty_term(t)), t)


@given(types)
def test_type_round_trip(ty):
    assert canonical_type(parse_type(pretty_type(ty))) == canonical_type(ty)


@given(st.text(alphabet="fun()x:{}=.;:=seal 0123Nat&->[]#\n", max_size=40))
def test_diagnostics_stay_in_bounds(text):
    try:
        parse_program(text)
    except ParseError as exc:
        for d in exc.diagnostics:
            assert 0 <= d.span.offset <= len(text)
            assert d.span.offset + d.span.length <= len(text)


def test_tokenizer_tracks_lines():
    toks = tokenize("a\n  b")
    assert [(t.text, t.span.line, t.span.column) for t in toks[:2]] == [("a", 1, 1), ("b", 2, 3)]
