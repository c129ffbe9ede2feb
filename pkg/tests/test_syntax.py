from hypothesis import given, strategies as st

from fmlab.syntax import (
    Abs, Arrow, FieldRead, Location, Nat, NatLit, Readonly, RecordLit, RecordTy, RecordVal, Seal,
    Store, TyAbs, TyVar, Var, alpha_eq, children, erase_seals, free_vars, is_value, seal_count,
    seal_leq, store_leq, substitute_term, substitute_type, substitute_type_in_term, with_children,
)
from strategies import terms

R1 = RecordVal((("x", Location(1)),))


def test_location_display():
    assert str(Location(1)) == "0x0001"
    assert str(Location(0x2a)) == "0x002a"


def test_is_value():
    assert is_value(Seal(RecordVal((("y", Location(1)),))))
    assert is_value(Abs("x", Nat(), Var("x")))
    assert not is_value(Seal(Abs("x", Nat(), Var("x"))))
    assert not is_value(Seal(Seal(R1)))
    assert not is_value(RecordLit((("x", NatLit(1)),)))


def test_seal_count():
    assert seal_count(Var("x")) == 0
    assert seal_count(Seal(Seal(R1))) == 2
    assert seal_count(FieldRead(Seal(R1), "x")) == 1


def test_seal_leq_examples():
    s = FieldRead(Var("r"), "x")
    assert seal_leq(s, Seal(s))
    assert seal_leq(s, FieldRead(Seal(Var("r")), "x"))
    assert not seal_leq(Seal(s), s)


def test_store_leq_examples():
    assert store_leq(Store(), Store())
    assert store_leq(Store({Location(1): R1}), Store({Location(1): Seal(R1)}))
    assert not store_leq(Store({Location(1): R1}), Store({Location(1): R1, Location(2): R1}))


def test_substitution_examples():
    assert substitute_term(Var("x"), "x", NatLit(5)) == NatLit(5)
    ident = Abs("x", Nat(), Var("x"))
    assert substitute_term(ident, "x", NatLit(5)) == ident
    assert substitute_type(Readonly(TyVar("X")), "X", RecordTy("f", Nat())) == Readonly(RecordTy("f", Nat()))


def test_substitution_avoids_capture():
    # (fun(y: Nat) x)[x := y] must not capture y
    out = substitute_term(Abs("y", Nat(), Var("x")), "x", Var("y"))
    assert isinstance(out, Abs) and out.param != "y"
    assert free_vars(out) == {"y"}
    # (tfun(Y <: Top) fun(z: X) z)[X := Y] renames the binder
    poly = TyAbs("Y", Nat(), Abs("z", TyVar("X"), Var("z")))
    out = substitute_type_in_term(poly, "X", TyVar("Y"))
    assert out.var != "Y" and out.body.param_type == TyVar("Y")
    out = substitute_type(Arrow(TyVar("X"), TyVar("Y")), "X", TyVar("Y"))
    assert out == Arrow(TyVar("Y"), TyVar("Y"))


def test_erase_seals():
    assert erase_seals(Seal(Seal(R1))) == R1
    plain = FieldRead(RecordLit((("x", NatLit(1)),)), "x")
    assert erase_seals(plain) == plain


def test_alpha_eq():
    assert alpha_eq(Abs("x", Nat(), Var("x")), Abs("y", Nat(), Var("y")))
    assert not alpha_eq(Abs("x", Nat(), Var("z")), Abs("y", Nat(), Var("y")))


def _insertions(t):
    """Every term obtained by adding one seal at one position."""
    yield Seal(t)
    kids = children(t)
    for i, k in enumerate(kids):
        for k2 in _insertions(k):
            yield with_children(t, kids[:i] + (k2,) + kids[i + 1:])


@given(terms)
def test_seal_leq_reflexive(t):
    assert seal_leq(t, t)


@given(terms, st.data())
def test_single_insertion(t, data):
    options = list(_insertions(t))
    u = data.draw(st.sampled_from(options))
    assert seal_leq(t, u)
    assert seal_count(u) == seal_count(t) + 1
    assert not seal_leq(u, t)


@given(terms, st.data())
def test_seal_leq_transitive_and_antisymmetric(t, data):
    u = data.draw(st.sampled_from(list(_insertions(t))))
    v = data.draw(st.sampled_from(list(_insertions(u))))
    assert seal_leq(t, v)
    assert seal_count(t) <= seal_count(v)
    if seal_leq(u, t):
        assert u == t


@given(terms)
def test_erasure_is_below(t):
    e = erase_seals(t)
    assert seal_leq(e, t)
    assert seal_count(e) == 0


@given(terms, st.data())
def test_sealed_values_erase_to_values(t, data):
    # if s <= v and v is a value then s is a value
    v = data.draw(st.sampled_from(list(_insertions(t))))
    if is_value(v):
        assert is_value(t)
    if is_value(Seal(t)):
        assert is_value(t)


def test_store_alloc_is_monotone():
    s0 = Store()
    l1, s1 = s0.alloc(NatLit(10))
    l2, s2 = s1.alloc(NatLit(11))
    assert (l1, l2) == (Location(1), Location(2))
    l3, _ = s1.alloc(NatLit(12))
    assert l3 == l2 and l1 not in (l2,)
    assert len(s0) == 0 and s2[l1] == NatLit(10)
