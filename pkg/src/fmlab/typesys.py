"""Type normalization, algorithmic subtyping and the bidirectional checker.

The subtyping engine decides on normal forms only; ``nf`` distributes
``readonly`` down to record types and type variables and drops it on
arrows, universals, scalars and Top.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import Diagnostic, SubtypeFuelExhausted, TypeCheckError
from .parser import pretty_type
from .syntax import (
    Abs, App, Arrow, FieldRead, FieldWrite, Forall, Intersect, Location, Nat, NatLit, Readonly,
    RecordLit, RecordTy, RecordVal, Seal, Store, Term, Top, TyAbs, TyApp, TyVar, Type, Var,
    children, components, fresh_name, free_type_vars, intersect_all, substitute_type,
    substitute_type_in_term,
)

DEFAULT_SUBTYPE_FUEL = 20_000

StoreTyping = Mapping[Location, Type]


@dataclass(frozen=True)
class TypeContext:
    """Ordered term bindings and type-variable bounds; later entries shadow."""

    entries: tuple[tuple[str, str, Type], ...] = ()

    def bind_term(self, name: str, ty: Type) -> "TypeContext":
        return TypeContext(self.entries + (("term", name, ty),))

    def bind_type(self, name: str, bound: Type) -> "TypeContext":
        return TypeContext(self.entries + (("type", name, bound),))

    def lookup(self, name: str) -> Type | None:
        for kind, n, ty in reversed(self.entries):
            if kind == "term" and n == name:
                return ty
        return None

    def bound_of(self, name: str) -> Type | None:
        for kind, n, ty in reversed(self.entries):
            if kind == "type" and n == name:
                return ty
        return None

    def type_vars(self) -> set[str]:
        return {n for kind, n, _ in self.entries if kind == "type"}


EMPTY = TypeContext()


# ---------------------------------------------------------------- normal forms


def nf(t: Type) -> Type:
    match t:
        case Arrow(a, b):
            return Arrow(nf(a), nf(b))
        case Forall(x, bound, body):
            return Forall(x, nf(bound), nf(body))
        case Intersect(a, b):
            return Intersect(nf(a), nf(b))
        case RecordTy(lbl, ft):
            return RecordTy(lbl, nf(ft))
        case Readonly(inner):
            return ro(nf(inner))
        case TyVar(name):
            return TyVar(name)
    return type(t)()


def ro(t: Type) -> Type:
    """Apply ``readonly`` to a type already in normal form."""
    match t:
        case Intersect(a, b):
            return Intersect(ro(a), ro(b))
        case RecordTy() | TyVar():
            return Readonly(t)
    return t


def is_normal(t: Type) -> bool:
    match t:
        case Top() | Nat() | TyVar():
            return True
        case Arrow(a, b) | Intersect(a, b):
            return is_normal(a) and is_normal(b)
        case Forall(_, bound, body):
            return is_normal(bound) and is_normal(body)
        case RecordTy(_, ft):
            return is_normal(ft)
        case Readonly(RecordTy(_, ft)):
            return is_normal(ft)
        case Readonly(TyVar()):
            return True
    return False


def is_readonly_type(t: Type) -> bool:
    """Whether applying ``readonly`` leaves ``t`` unchanged up to normalization."""
    n = nf(t)
    return ro(n) == n


def is_scalar_type(t: Type) -> bool:
    comps = components(nf(t))
    return any(isinstance(c, Nat) for c in comps) and all(isinstance(c, (Nat, Top)) for c in comps)


# ---------------------------------------------------------------- algorithmic subtyping


MAX_SUBTYPE_DEPTH = 300


class _Engine:
    def __init__(self, fuel: int):
        self.fuel = fuel
        self.depth = 0

    def tick(self) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise SubtypeFuelExhausted("subtyping search exhausted its fuel")

    def equiv(self, ctx: TypeContext, a: Type, b: Type) -> bool:
        return self.sub(ctx, a, b) and self.sub(ctx, b, a)

    def sub(self, ctx: TypeContext, s: Type, t: Type) -> bool:
        self.tick()
        # nesting is bounded too, so divergent searches end before the stack does
        if self.depth >= MAX_SUBTYPE_DEPTH:
            raise SubtypeFuelExhausted("subtyping search nested too deeply")
        self.depth += 1
        try:
            return self._sub(ctx, s, t)
        finally:
            self.depth -= 1

    def _sub(self, ctx: TypeContext, s: Type, t: Type) -> bool:
        if isinstance(t, Top):
            return True
        if isinstance(t, Intersect):
            return self.sub(ctx, s, t.left) and self.sub(ctx, s, t.right)
        if isinstance(s, Intersect):
            return self.sub(ctx, s.left, t) or self.sub(ctx, s.right, t)
        match s:
            case TyVar(x):
                if t == s or t == Readonly(s):
                    return True
                bound = ctx.bound_of(x)
                return bound is not None and self.sub(ctx, nf(bound), t)
            case Readonly(TyVar(x)):
                if t == s:
                    return True
                bound = ctx.bound_of(x)
                return bound is not None and self.sub(ctx, ro(nf(bound)), t)
            case Nat():
                return isinstance(t, Nat)
            case Arrow(a1, b1):
                return (isinstance(t, Arrow) and self.sub(ctx, t.domain, a1)
                        and self.sub(ctx, b1, t.codomain))
            case Forall():
                if not isinstance(t, Forall) or not self.sub(ctx, t.bound, s.bound):
                    return False
                z, body_s, body_t = _open_pair(ctx, s, t)
                return self.sub(ctx.bind_type(z, t.bound), body_s, body_t)
            case RecordTy(lbl, a):
                match t:
                    case RecordTy(lbl2, b) | Readonly(RecordTy(lbl2, b)) if lbl2 == lbl:
                        return self.equiv(ctx, a, b)
                return False
            case Readonly(RecordTy(lbl, a)):
                match t:
                    case Readonly(RecordTy(lbl2, b)) if lbl2 == lbl:
                        return self.equiv(ctx, a, b)
                return False
        return False


def _open_pair(ctx: TypeContext, s: Forall, t: Forall) -> tuple[str, Type, Type]:
    """Instantiate both universals' binders with one shared variable."""
    taken = ctx.type_vars() | free_type_vars(s) | free_type_vars(t)
    z = s.var if s.var == t.var and s.var not in taken else fresh_name(s.var, taken)
    return z, substitute_type(s.body, s.var, TyVar(z)), substitute_type(t.body, t.var, TyVar(z))


def subtype(ctx: TypeContext, s: Type, t: Type, fuel: int = DEFAULT_SUBTYPE_FUEL) -> bool:
    """Decide ``ctx |- s <: t``.

    Raises :class:`SubtypeFuelExhausted` rather than answering ``False`` when
    the search runs out of fuel.
    """
    return _Engine(fuel).sub(ctx, nf(s), nf(t))


def equivalent(ctx: TypeContext, s: Type, t: Type, fuel: int = DEFAULT_SUBTYPE_FUEL) -> bool:
    return subtype(ctx, s, t, fuel) and subtype(ctx, t, s, fuel)


# ---------------------------------------------------------------- eliminator lookups


def field_candidates(ctx: TypeContext, t: Type, label: str) -> tuple[Type | None, Type | None]:
    """Field types ``(mutable, readonly)`` under which ``t`` can be read at ``label``."""
    mut: Type | None = None
    rdo: Type | None = None
    for c in components(nf(t)):
        found: tuple[Type | None, Type | None] = (None, None)
        match c:
            case RecordTy(lbl, ft) if lbl == label:
                found = (ft, None)
            case Readonly(RecordTy(lbl, ft)) if lbl == label:
                found = (None, ft)
            case TyVar(x):
                bound = ctx.bound_of(x)
                if bound is not None:
                    found = field_candidates(ctx, bound, label)
            case Readonly(TyVar(x)):
                bound = ctx.bound_of(x)
                if bound is not None:
                    found = field_candidates(ctx, Readonly(bound), label)
        mut = mut if mut is not None else found[0]
        rdo = rdo if rdo is not None else found[1]
    return mut, rdo


def _eliminator_candidates(ctx: TypeContext, t: Type, kind: type) -> list[Type]:
    out: list[Type] = []
    for c in components(nf(t)):
        if isinstance(c, kind):
            out.append(c)
        elif isinstance(c, TyVar) and ctx.bound_of(c.name) is not None:
            out.extend(_eliminator_candidates(ctx, ctx.bound_of(c.name), kind))
        elif isinstance(c, Readonly) and isinstance(c.inner, TyVar):
            bound = ctx.bound_of(c.inner.name)
            if bound is not None:
                out.extend(_eliminator_candidates(ctx, Readonly(bound), kind))
    return out


# ---------------------------------------------------------------- typed terms


@dataclass(frozen=True)
class TypedTerm:
    """A term with the type its derivation assigns, mirrored for every subterm.

    ``children`` lines up with :func:`fmlab.syntax.children`.
    """

    term: Term
    type: Type
    rule: str
    children: tuple["TypedTerm", ...] = ()
    judged: Type | None = field(default=None, compare=False)

    @property
    def root_type(self) -> Type:
        return self.judged if self.judged is not None else self.type

    def at(self, path: tuple[int, ...]) -> "TypedTerm":
        node = self
        for i in path:
            node = node.children[i]
        return node

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


def _fail(t: Term | None, code: str, message: str, rule: str | None = None,
          expected: Type | None = None, actual: Type | None = None) -> TypeCheckError:
    span = getattr(t, "span", None)
    return TypeCheckError([Diagnostic(
        span, message, code, rule=rule,
        expected=pretty_type(expected) if expected is not None else None,
        actual=pretty_type(actual) if actual is not None else None,
    )])


Ascriptions = Mapping[Term, Sequence[Type]]


class Checker:
    """Bidirectional checker.

    ``ascriptions`` maps closed values to types they are already known to
    check at.  Reduction moves values from checking positions (arguments,
    store cells) into synthesis positions, and record literals have no
    principal synthesized type, so a value that synthesizes nothing may
    still be used at the type it was checked at before the step.
    """

    def __init__(self, sigma: StoreTyping | None = None, fuel: int = DEFAULT_SUBTYPE_FUEL,
                 ascriptions: Ascriptions | None = None):
        self.sigma = dict(sigma or {})
        self.fuel = fuel
        self.ascriptions = ascriptions or {}
        self._ascribing: set[int] = set()

    def sub(self, ctx: TypeContext, s: Type, t: Type) -> bool:
        return subtype(ctx, s, t, self.fuel)

    def well_formed(self, ctx: TypeContext, ty: Type, at: Term) -> None:
        unbound = free_type_vars(ty) - ctx.type_vars()
        if unbound:
            name = sorted(unbound)[0]
            raise _fail(at, "unbound-type-variable", f"unbound type variable {name!r}")

    # -- synthesis

    def synth(self, ctx: TypeContext, t: Term) -> TypedTerm:
        if not self.ascriptions:
            return self._synth(ctx, t)
        try:
            return self._synth(ctx, t)
        except TypeCheckError:
            if id(t) in self._ascribing:
                raise
            self._ascribing.add(id(t))
            try:
                for ty in self.ascriptions.get(t, ()):
                    tt = self._try_check(ctx, t, ty)
                    if tt is not None:
                        return TypedTerm(t, ty, tt.rule, tt.children)
            finally:
                self._ascribing.discard(id(t))
            raise

    def _synth(self, ctx: TypeContext, t: Term) -> TypedTerm:
        match t:
            case Var(name):
                ty = ctx.lookup(name)
                if ty is None:
                    raise _fail(t, "unbound-variable", f"unbound variable {name!r}", "VAR")
                return TypedTerm(t, ty, "VAR")
            case NatLit():
                return TypedTerm(t, Nat(), "NAT")
            case Abs(x, pty, body):
                self.well_formed(ctx, pty, t)
                tb = self.synth(ctx.bind_term(x, pty), body)
                return TypedTerm(t, Arrow(pty, tb.type), "ABS", (tb,))
            case TyAbs(x, bound, body):
                self.well_formed(ctx, bound, t)
                if x in ctx.type_vars():
                    y = fresh_name(x, ctx.type_vars() | free_type_vars(bound))
                    body = substitute_type_in_term(body, x, TyVar(y))
                    x = y
                tb = self.synth(ctx.bind_type(x, bound), body)
                return TypedTerm(t, Forall(x, bound, tb.type), "TABS", (tb,))
            case App(fn, arg):
                tf = self.synth(ctx, fn)
                arrows = _eliminator_candidates(ctx, tf.type, Arrow)
                if not arrows:
                    raise _fail(fn, "not-a-function", "applied term is not a function", "APP",
                                actual=tf.type)
                first_error: TypeCheckError | None = None
                for arrow in arrows:
                    try:
                        ta = self.check(ctx, arg, arrow.domain)
                    except TypeCheckError as exc:
                        first_error = first_error or exc
                        continue
                    return TypedTerm(t, arrow.codomain, "APP", (tf, ta))
                raise first_error
            case TyApp(fn, targ):
                self.well_formed(ctx, targ, t)
                tf = self.synth(ctx, fn)
                foralls = _eliminator_candidates(ctx, tf.type, Forall)
                if not foralls:
                    raise _fail(fn, "not-a-type-abstraction", "type-applied term is not polymorphic",
                                "TAPP", actual=tf.type)
                for fa in foralls:
                    if self.sub(ctx, targ, fa.bound):
                        return TypedTerm(t, substitute_type(fa.body, fa.var, targ), "TAPP", (tf,))
                raise _fail(t, "type-argument-mismatch", "type argument violates the bound", "TAPP",
                            expected=foralls[0].bound, actual=targ)
            case RecordLit(fields):
                kids = tuple(self.synth(ctx, v) for _, v in fields)
                ty = intersect_all([RecordTy(lbl, k.type) for (lbl, _), k in zip(fields, kids)])
                return TypedTerm(t, ty, "RECORD", kids)
            case RecordVal(fields):
                parts = []
                for lbl, loc in fields:
                    if loc not in self.sigma:
                        raise _fail(t, "unknown-location", f"location {loc} has no store type", "LOC")
                    parts.append(RecordTy(lbl, self.sigma[loc]))
                return TypedTerm(t, intersect_all(parts), "LOC")
            case FieldRead(target, lbl):
                tt = self.synth(ctx, target)
                mut, rdo = field_candidates(ctx, tt.type, lbl)
                if mut is not None:
                    return TypedTerm(t, mut, "RECORD-ELIM", (tt,))
                if rdo is not None:
                    return TypedTerm(t, Readonly(rdo), "READONLY-RECORD-ELIM", (tt,))
                raise _fail(t, "field-missing", f"no field {lbl!r} in the target's type",
                            "RECORD-ELIM", actual=tt.type)
            case FieldWrite(target, lbl, source):
                tt = self.synth(ctx, target)
                mut, rdo = field_candidates(ctx, tt.type, lbl)
                if mut is None:
                    if rdo is not None:
                        raise _fail(t, "write-through-readonly",
                                    f"cannot write field {lbl!r} through a read-only reference",
                                    "WRITE-FIELD", actual=tt.type)
                    raise _fail(t, "field-missing", f"no field {lbl!r} in the target's type",
                                "WRITE-FIELD", actual=tt.type)
                ts = self.check(ctx, source, mut)
                return TypedTerm(t, mut, "WRITE-FIELD", (tt, ts))
            case Seal(inner):
                ti = self.synth(ctx, inner)
                return TypedTerm(t, Readonly(ti.type), "SEAL", (ti,))
        raise TypeError(f"not a term: {t!r}")

    # -- checking

    def check(self, ctx: TypeContext, t: Term, expected: Type) -> TypedTerm:
        try:
            tt = self.synth(ctx, t)
        except TypeCheckError as exc:
            error = exc
        else:
            if self.sub(ctx, tt.type, expected):
                return tt
            error = _fail(t, "type-mismatch", "term does not have the expected type", "SUB",
                          expected=expected, actual=tt.type)
        result = self._check_structural(ctx, t, expected)
        if result is None:
            raise error
        return result

    def _try_check(self, ctx: TypeContext, t: Term, expected: Type) -> TypedTerm | None:
        try:
            return self.check(ctx, t, expected)
        except TypeCheckError:
            return None

    def _check_structural(self, ctx: TypeContext, t: Term, expected: Type) -> TypedTerm | None:
        """Push an expected type into introduction forms where synthesis is too rigid.

        Record fields are invariant, so a literal whose fields synthesize
        strict subtypes must be typed at the expected field types instead.
        """
        comps = [c for c in components(nf(expected)) if not isinstance(c, Top)]
        match t:
            case RecordLit(fields):
                wanted: dict[str, list[Type]] = {}
                for c in comps:
                    match c:
                        case RecordTy(lbl, ft) | Readonly(RecordTy(lbl, ft)):
                            wanted.setdefault(lbl, []).append(ft)
                        case _:
                            return None
                labels = {lbl for lbl, _ in fields}
                if not set(wanted) <= labels:
                    return None
                kids, parts = [], []
                for lbl, v in fields:
                    if lbl in wanted:
                        checked = [self._try_check(ctx, v, ft) for ft in wanted[lbl]]
                        if any(k is None for k in checked):
                            return None
                        kids.append(checked[0])
                        parts.append(RecordTy(lbl, wanted[lbl][0]))
                    else:
                        k = self.synth(ctx, v)
                        kids.append(k)
                        parts.append(RecordTy(lbl, k.type))
                ty = intersect_all(parts)
                return TypedTerm(t, ty, "RECORD", tuple(kids)) if self.sub(ctx, ty, expected) else None
            case Seal(inner):
                unsealed: list[Type] = []
                for c in comps:
                    match c:
                        case Readonly(body):
                            unsealed.append(body)
                        case Arrow() | Forall() | Nat():
                            unsealed.append(c)
                        case _:
                            return None
                # readonly T is idempotent, so the inner term may keep the
                # readonly view; fall back to the unsealed view otherwise
                target = intersect_all(unsealed)
                ti = self._try_check(ctx, inner, expected) or self._try_check(ctx, inner, target)
                if ti is None:
                    return None
                ty = Readonly(ti.type)
                return TypedTerm(t, ty, "SEAL", (ti,)) if self.sub(ctx, ty, expected) else None
            case FieldRead(target, lbl):
                tt = self._try_check(ctx, target, RecordTy(lbl, expected))
                if tt is not None:
                    return TypedTerm(t, expected, "RECORD-ELIM", (tt,))
                if is_readonly_type(expected):
                    tt = self._try_check(ctx, target, Readonly(RecordTy(lbl, expected)))
                    if tt is not None:
                        return TypedTerm(t, Readonly(expected), "READONLY-RECORD-ELIM", (tt,))
                return None
            case FieldWrite(target, lbl, source):
                tt = self._try_check(ctx, target, RecordTy(lbl, expected))
                if tt is None:
                    return None
                ts = self._try_check(ctx, source, expected)
                if ts is None:
                    return None
                return TypedTerm(t, expected, "WRITE-FIELD", (tt, ts))
            case Abs(x, pty, body):
                arrows = [c for c in comps if isinstance(c, Arrow)]
                if len(arrows) != 1 or len(comps) != 1:
                    return None
                arrow = arrows[0]
                if not self.sub(ctx, arrow.domain, pty):
                    return None
                tb = self._try_check(ctx.bind_term(x, pty), body, arrow.codomain)
                if tb is None:
                    return None
                return TypedTerm(t, Arrow(pty, arrow.codomain), "ABS", (tb,))
            case TyAbs(x, bound, body):
                foralls = [c for c in comps if isinstance(c, Forall)]
                if len(foralls) != 1 or len(comps) != 1:
                    return None
                fa = foralls[0]
                if not self.sub(ctx, fa.bound, bound):
                    return None
                taken = ctx.type_vars() | free_type_vars(fa.body) | free_type_vars(bound) | {fa.var}
                z = x if x not in taken else fresh_name(x, taken)
                tb = self._try_check(ctx.bind_type(z, bound), substitute_type_in_term(body, x, TyVar(z)),
                                     substitute_type(fa.body, fa.var, TyVar(z)))
                if tb is None:
                    return None
                ty = Forall(z, bound, substitute_type(fa.body, fa.var, TyVar(z)))
                return TypedTerm(t, ty, "TABS", (tb,)) if self.sub(ctx, ty, expected) else None
            case TyApp(fn, targ):
                core = _unseal(fn)
                if not isinstance(core, TyAbs) or not self.sub(ctx, targ, core.bound):
                    return None
                taken = (ctx.type_vars() | free_type_vars(expected) | free_type_vars(targ)
                         | free_type_vars(core.bound))
                z = fresh_name(core.var, taken)
                body: Type = expected
                dom = _domain_of(core.body)
                arrows = [c for c in comps if isinstance(c, Arrow)]
                if dom is not None and len(arrows) == 1 and len(comps) == 1:
                    body = Arrow(substitute_type(dom, core.var, TyVar(z)), arrows[0].codomain)
                instance = substitute_type(body, z, targ)
                if not self.sub(ctx, instance, expected):
                    return None
                tf = self._try_check(ctx, fn, Forall(z, core.bound, body))
                if tf is None:
                    return None
                return TypedTerm(t, instance, "TAPP", (tf,))
            case App(fn, arg):
                dom = _domain_of(fn)
                if dom is None:
                    return None
                ta = self._try_check(ctx, arg, dom)
                if ta is None:
                    return None
                tf = self._try_check(ctx, fn, Arrow(dom, expected))
                if tf is None:
                    return None
                return TypedTerm(t, expected, "APP", (tf, ta))
        return None


def _unseal(t: Term) -> Term:
    while isinstance(t, Seal):
        t = t.inner
    return t


def _domain_of(fn: Term) -> Type | None:
    """Parameter type of a function reached through seals and type-beta redexes."""
    core = _unseal(fn)
    if isinstance(core, Abs):
        return core.param_type
    if isinstance(core, TyApp):
        inner = _unseal(core.fn)
        if isinstance(inner, TyAbs):
            dom = _domain_of(inner.body)
            if dom is not None:
                return substitute_type(dom, inner.var, core.type_arg)
    return None


def typecheck(ctx: TypeContext, sigma: StoreTyping, t: Term, expected: Type | None = None,
              fuel: int = DEFAULT_SUBTYPE_FUEL, ascriptions: Ascriptions | None = None) -> TypedTerm:
    """Type ``t``; raise :class:`TypeCheckError` with diagnostics on failure."""
    checker = Checker(sigma, fuel, ascriptions)
    if expected is None:
        tt = checker.synth(ctx, t)
        return TypedTerm(tt.term, tt.type, tt.rule, tt.children, judged=tt.type)
    tt = checker.check(ctx, t, expected)
    return TypedTerm(tt.term, tt.type, tt.rule, tt.children, judged=expected)


def store_errors(ctx: TypeContext, sigma: StoreTyping, store: Store,
                 fuel: int = DEFAULT_SUBTYPE_FUEL, ascriptions: Ascriptions | None = None) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for loc in sorted(set(sigma) ^ set(store)):
        what = "missing from the store" if loc in sigma else "has no store type"
        out.append(Diagnostic(None, f"location {loc} {what}", "store-domain", rule="STORE"))
    checker = Checker(sigma, fuel, ascriptions)
    for loc in sorted(set(sigma) & set(store)):
        try:
            checker.check(ctx, store[loc], sigma[loc])
        except TypeCheckError as exc:
            d = exc.diagnostics[0]
            out.append(Diagnostic(None, f"location {loc}: {d.message}", "store-mismatch",
                                  rule="STORE", expected=pretty_type(sigma[loc]), actual=d.actual))
    return out


def check_store(ctx: TypeContext, sigma: StoreTyping, store: Store,
                fuel: int = DEFAULT_SUBTYPE_FUEL) -> bool:
    return not store_errors(ctx, sigma, store, fuel)
