"""Bounded proof search over the declarative subtyping rules.

Independent of the algorithmic engine: it works on raw (unnormalized) types
and only reaches normal forms through the DENORMALIZE rule.  Every rule it
applies is either primitive or a primitive rule composed with transitivity,
so a ``PROVEN`` answer always corresponds to a real derivation.
"""

from __future__ import annotations

import enum

from .syntax import (
    Arrow, Forall, Intersect, Readonly, RecordTy, Top, TyVar, Type, canonical_type,
    free_type_vars, fresh_name, substitute_type,
)
from .typesys import TypeContext, nf


class Verdict(enum.Enum):
    PROVEN = "proven"
    NO_PROOF_WITHIN_DEPTH = "no-proof-within-depth"


class DeclarativeProver:
    def __init__(self) -> None:
        # (ctx, S, T) -> (smallest depth proven, largest depth refuted)
        self._memo: dict[tuple, tuple[int | None, int]] = {}

    def prove(self, ctx: TypeContext, s: Type, t: Type, depth: int) -> bool:
        if depth <= 0:
            return False
        key = (ctx, canonical_type(s), canonical_type(t))
        proven, refuted = self._memo.get(key, (None, 0))
        if proven is not None and proven <= depth:
            return True
        if depth <= refuted:
            return False
        ok = self._rules(ctx, s, t, depth - 1)
        proven, refuted = self._memo.get(key, (None, 0))
        if ok:
            self._memo[key] = (depth if proven is None else min(proven, depth), refuted)
        else:
            self._memo[key] = (proven, max(refuted, depth))
        return ok

    def _rules(self, ctx: TypeContext, s: Type, t: Type, d: int) -> bool:
        # REFL, TOP
        if canonical_type(s) == canonical_type(t) or isinstance(t, Top):
            return True
        # INTER-I
        if isinstance(t, Intersect) and self.prove(ctx, s, t.left, d) and self.prove(ctx, s, t.right, d):
            return True
        # INTER-E1/E2 then TRANS
        if isinstance(s, Intersect) and (self.prove(ctx, s.left, t, d) or self.prove(ctx, s.right, t, d)):
            return True
        # ARROW
        if isinstance(s, Arrow) and isinstance(t, Arrow):
            if self.prove(ctx, t.domain, s.domain, d) and self.prove(ctx, s.codomain, t.codomain, d):
                return True
        # FORALL (full F<: rule)
        if isinstance(s, Forall) and isinstance(t, Forall) and self.prove(ctx, t.bound, s.bound, d):
            taken = ctx.type_vars() | free_type_vars(s) | free_type_vars(t)
            z = fresh_name(s.var, taken)
            if self.prove(ctx.bind_type(z, t.bound), substitute_type(s.body, s.var, TyVar(z)),
                          substitute_type(t.body, t.var, TyVar(z)), d):
                return True
        # RECORD (invariant fields)
        if isinstance(s, RecordTy) and isinstance(t, RecordTy) and s.label == t.label:
            if self.prove(ctx, s.field_type, t.field_type, d) and self.prove(ctx, t.field_type, s.field_type, d):
                return True
        # TVAR then TRANS
        if isinstance(s, TyVar):
            bound = ctx.bound_of(s.name)
            if bound is not None and self.prove(ctx, bound, t, d):
                return True
        if isinstance(t, Readonly):
            # MUTABLE then TRANS: S <: T' <: readonly T'
            if self.prove(ctx, s, t.inner, d):
                return True
            # readonly monotonicity
            if isinstance(s, Readonly) and self.prove(ctx, s.inner, t.inner, d):
                return True
        if isinstance(s, Readonly):
            # readonly idempotence then TRANS
            if isinstance(s.inner, Readonly) and self.prove(ctx, s.inner, t, d):
                return True
            # monotonicity over TVAR, then TRANS: readonly X <: readonly bound(X)
            if isinstance(s.inner, TyVar):
                bound = ctx.bound_of(s.inner.name)
                if bound is not None and self.prove(ctx, Readonly(bound), t, d):
                    return True
        # DENORMALIZE, on both sides or one side
        ns, nt = nf(s), nf(t)
        s_changed = canonical_type(ns) != canonical_type(s)
        t_changed = canonical_type(nt) != canonical_type(t)
        if s_changed and t_changed and self.prove(ctx, ns, nt, d):
            return True
        if s_changed and self.prove(ctx, ns, t, d):
            return True
        if t_changed and self.prove(ctx, s, nt, d):
            return True
        return False


def subtype_oracle(ctx: TypeContext, s: Type, t: Type, max_depth: int,
                   prover: DeclarativeProver | None = None) -> Verdict:
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    prover = prover or DeclarativeProver()
    return Verdict.PROVEN if prover.prove(ctx, s, t, max_depth) else Verdict.NO_PROOF_WITHIN_DEPTH


def proof_depth(ctx: TypeContext, s: Type, t: Type, max_depth: int,
                prover: DeclarativeProver | None = None) -> int | None:
    """Smallest derivation height within ``max_depth`` proving ``s <: t``."""
    prover = prover or DeclarativeProver()
    for d in range(1, max_depth + 1):
        if prover.prove(ctx, s, t, d):
            return d
    return None
