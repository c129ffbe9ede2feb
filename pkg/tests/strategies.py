"""Hypothesis strategies for raw syntax (not necessarily well-typed)."""

from hypothesis import strategies as st

from fmlab.syntax import (
    Abs, App, Arrow, FieldRead, FieldWrite, Forall, Intersect, Nat, NatLit, Readonly, RecordLit,
    RecordTy, Seal, Top, TyAbs, TyApp, TyVar, Var,
)

labels = st.sampled_from(["a", "b", "c"])
names = st.sampled_from(["x", "y", "z"])
tynames = st.sampled_from(["X", "Y"])


def _distinct_fields(children):
    return st.lists(st.tuples(labels, children), min_size=1, max_size=3,
                    unique_by=lambda f: f[0]).map(tuple)


types = st.recursive(
    st.one_of(st.just(Top()), st.just(Nat()), tynames.map(TyVar)),
    lambda inner: st.one_of(
        st.builds(Arrow, inner, inner),
        st.builds(Forall, tynames, inner, inner),
        st.builds(RecordTy, labels, inner),
        st.builds(Intersect, inner, inner),
        st.builds(Readonly, inner),
    ),
    max_leaves=8,
)

terms = st.recursive(
    st.one_of(names.map(Var), st.integers(0, 20).map(NatLit)),
    lambda inner: st.one_of(
        st.builds(Abs, names, types, inner),
        st.builds(App, inner, inner),
        st.builds(TyAbs, tynames, types, inner),
        st.builds(TyApp, inner, types),
        _distinct_fields(inner).map(RecordLit),
        st.builds(FieldRead, inner, labels),
        st.builds(FieldWrite, inner, labels, inner),
        st.builds(Seal, inner),
    ),
    max_leaves=10,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
