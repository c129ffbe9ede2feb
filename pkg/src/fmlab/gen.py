"""Random types and type-directed generation of well-typed closed terms."""

from __future__ import annotations

import random
from typing import Callable, Iterator

from .errors import SubtypeFuelExhausted
from .syntax import (
    Abs, App, Arrow, FieldRead, FieldWrite, Forall, Intersect, Nat, NatLit, Readonly, RecordLit,
    RecordTy, Seal, Term, Top, TyAbs, TyApp, TyVar, Type, Var, children, components,
    fresh_name, with_children,
)
from .typesys import (
    EMPTY, TypeContext, equivalent, field_candidates, is_readonly_type, is_scalar_type, nf,
    subtype,
)

LABELS = ("a", "b", "c")


class GiveUp(Exception):
    """Generation ran out of fuel; retry with another seed."""


def gen_type(depth: int, ctx: TypeContext = EMPTY, rng: random.Random | None = None,
             labels: tuple[str, ...] = LABELS) -> Type:
    """A random type over every constructor, well-scoped in ``ctx``."""
    rng = rng or random.Random()
    tyvars = sorted(ctx.type_vars())
    return _gen_type(depth, tyvars, rng, labels)


def _gen_type(depth: int, tyvars: list[str], rng: random.Random, labels: tuple[str, ...]) -> Type:
    leaves: list[Callable[[], Type]] = [Top, Nat]
    leaves += [lambda v=v: TyVar(v) for v in tyvars]
    if depth <= 0:
        return rng.choice(leaves)()
    k = rng.randrange(7)
    # half the children use the full remaining depth so deep types stay common
    below = lambda: depth - 1 if rng.random() < 0.5 else rng.randrange(depth)  # noqa: E731
    sub = lambda: _gen_type(below(), tyvars, rng, labels)  # noqa: E731
    if k == 0:
        return rng.choice(leaves)()
    if k == 1:
        return Arrow(sub(), sub())
    if k == 2:
        x = fresh_name("X", set(tyvars))
        return Forall(x, sub(), _gen_type(below(), tyvars + [x], rng, labels))
    if k in (3, 4):
        return RecordTy(rng.choice(labels), sub())
    if k == 5:
        return Intersect(sub(), sub())
    return Readonly(sub())


def gen_closed_type(depth: int, rng: random.Random) -> Type:
    return gen_type(depth, EMPTY, rng)


class _NoWay(Exception):
    pass


class TermGenerator:
    """Type-directed generator: every production is justified by a typing rule."""

    def __init__(self, rng: random.Random, fuel: int = 400, depth: int = 4):
        self.rng = rng
        self.fuel = fuel
        self.depth = depth
        self.names = 0

    def fresh(self, stem: str) -> str:
        self.names += 1
        return f"{stem}{self.names}"

    def tick(self) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise GiveUp("generator fuel exhausted")

    def sub(self, ctx: TypeContext, s: Type, t: Type) -> bool:
        try:
            return subtype(ctx, s, t, fuel=2000)
        except SubtypeFuelExhausted:
            return False

    def small_type(self, ctx: TypeContext) -> Type:
        return gen_type(self.rng.randrange(3), ctx, self.rng)

    # -- entry

    def gen(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        self.tick()
        options: list[Callable[[], Term]] = [lambda: self.intro(ctx, target, depth)]
        options.append(lambda: self.variable(ctx, target))
        if depth > 0:
            options += [
                lambda: self.beta_redex(ctx, target, depth),
                lambda: self.read(ctx, target, depth),
                lambda: self.read_readonly(ctx, target, depth),
                lambda: self.write(ctx, target, depth),
                lambda: self.var_read(ctx, target, depth),
                lambda: self.var_write(ctx, target, depth),
                lambda: self.type_app(ctx, target, depth),
                lambda: self.sealed(ctx, target, depth),
            ]
        self.rng.shuffle(options)
        # the introduction form goes last when it is available at all, so
        # eliminations get a fair chance even at shallow depth
        for opt in options:
            try:
                return opt()
            except _NoWay:
                continue
        raise GiveUp(f"no term for the target at depth {depth}")

    # -- productions

    def intro(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        comps = [c for c in components(nf(target)) if not isinstance(c, Top)]
        nxt = max(depth - 1, 0)
        if not comps:
            if self.rng.random() < 0.5:
                return NatLit(self.rng.randrange(10))
            return self.gen(ctx, self.small_type(ctx), nxt)
        if all(isinstance(c, Nat) for c in comps):
            return NatLit(self.rng.randrange(10))
        if len(comps) == 1 and isinstance(comps[0], Arrow):
            arrow = comps[0]
            x = self.fresh("x")
            return Abs(x, arrow.domain, self.gen(ctx.bind_term(x, arrow.domain), arrow.codomain, nxt))
        if len(comps) == 1 and isinstance(comps[0], Forall):
            fa = comps[0]
            x = fresh_name("Y", ctx.type_vars() | {fa.var})
            from .syntax import substitute_type
            body = substitute_type(fa.body, fa.var, TyVar(x))
            return TyAbs(x, fa.bound, self.gen(ctx.bind_type(x, fa.bound), body, nxt))
        fields: dict[str, Type] = {}
        readonly_only = True
        for c in comps:
            match c:
                case RecordTy(lbl, ft):
                    readonly_only = False
                case Readonly(RecordTy(lbl, ft)):
                    pass
                case _:
                    raise _NoWay
            if lbl in fields and not equivalent(ctx, fields[lbl], ft):
                raise _NoWay
            fields.setdefault(lbl, ft)
        # width: fields the target does not mention are synthesized by the
        # checker, so they are kept to literals
        extra = self.rng.choice(LABELS)
        items = [(lbl, self.gen(ctx, ft, nxt)) for lbl, ft in fields.items()]
        if extra not in fields and self.rng.random() < 0.3:
            items.append((extra, NatLit(self.rng.randrange(10))))
        self.rng.shuffle(items)
        lit = RecordLit(tuple(items))
        if readonly_only and self.rng.random() < 0.6:
            return Seal(lit)
        return lit

    def variable(self, ctx: TypeContext, target: Type) -> Term:
        names = []
        seen = set()
        for kind, name, ty in reversed(ctx.entries):
            if kind == "term" and name not in seen:
                seen.add(name)
                if self.sub(ctx, ty, target):
                    names.append(name)
        if not names:
            raise _NoWay
        return Var(self.rng.choice(names))

    def beta_redex(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        # a let: (fun(x: A) body) arg, with A often a record so body can use x
        if self.rng.random() < 0.6:
            arg_type: Type = self.record_type(ctx)
        else:
            arg_type = self.small_type(ctx)
        x = self.fresh("x")
        body = self.gen(ctx.bind_term(x, arg_type), target, depth - 1)
        arg = self.gen(ctx, arg_type, depth - 1)
        return App(Abs(x, arg_type, body), arg)

    def record_type(self, ctx: TypeContext) -> Type:
        parts: list[Type] = []
        for lbl in self.rng.sample(LABELS, self.rng.randint(1, 2)):
            ft = self.small_type(ctx) if self.rng.random() < 0.5 else Nat()
            part: Type = RecordTy(lbl, ft)
            if self.rng.random() < 0.3:
                part = Readonly(part)
            parts.append(part)
        out = parts[0]
        for p in parts[1:]:
            out = Intersect(out, p)
        if self.rng.random() < 0.2:
            out = Readonly(out)
        return out

    def read(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        lbl = self.rng.choice(LABELS)
        return FieldRead(self.gen(ctx, RecordTy(lbl, target), depth - 1), lbl)

    def read_readonly(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        if not is_readonly_type(target):
            raise _NoWay
        lbl = self.rng.choice(LABELS)
        return FieldRead(self.gen(ctx, Readonly(RecordTy(lbl, target)), depth - 1), lbl)

    def write(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        lbl = self.rng.choice(LABELS)
        tgt = self.gen(ctx, RecordTy(lbl, target), depth - 1)
        return FieldWrite(tgt, lbl, self.gen(ctx, target, depth - 1))

    def _vars_with_fields(self, ctx: TypeContext):
        seen = set()
        for kind, name, ty in reversed(ctx.entries):
            if kind != "term" or name in seen:
                continue
            seen.add(name)
            for lbl in LABELS:
                mut, rdo = field_candidates(ctx, ty, lbl)
                if mut is not None or rdo is not None:
                    yield name, lbl, mut, rdo

    def var_read(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        hits = []
        for name, lbl, mut, rdo in self._vars_with_fields(ctx):
            result = mut if mut is not None else Readonly(rdo)
            if self.sub(ctx, result, target):
                hits.append((name, lbl))
        if not hits:
            raise _NoWay
        name, lbl = self.rng.choice(hits)
        return FieldRead(Var(name), lbl)

    def var_write(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        hits = []
        for name, lbl, mut, _ in self._vars_with_fields(ctx):
            if mut is not None and self.sub(ctx, mut, target):
                hits.append((name, lbl, mut))
        if not hits:
            raise _NoWay
        name, lbl, mut = self.rng.choice(hits)
        return FieldWrite(Var(name), lbl, self.gen(ctx, mut, depth - 1))

    def type_app(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        # (tfun(X <: B) fun(y: [readonly] X) body) [B] arg
        bound = self.record_type(ctx) if self.rng.random() < 0.7 else self.small_type(ctx)
        x = fresh_name("X", ctx.type_vars())
        y = self.fresh("y")
        param: Type = TyVar(x)
        arg_type: Type = bound
        if self.rng.random() < 0.4:
            param = Readonly(param)
            arg_type = Readonly(bound)
        inner_ctx = ctx.bind_type(x, bound).bind_term(y, param)
        body = self.gen(inner_ctx, target, depth - 1)
        fn = TyApp(TyAbs(x, bound, Abs(y, param, body)), bound)
        return App(fn, self.gen(ctx, arg_type, depth - 1))

    def sealed(self, ctx: TypeContext, target: Type, depth: int) -> Term:
        if not is_readonly_type(target) or is_scalar_type(target):
            raise _NoWay
        return Seal(self.gen(ctx, target, depth - 1))


def gen_well_typed(ctx: TypeContext, target: Type, fuel: int = 400,
                   rng: random.Random | None = None, depth: int = 4) -> Term:
    """A term that typechecks at ``target`` by construction; raises :class:`GiveUp`."""
    return TermGenerator(rng or random.Random(), fuel, depth).gen(ctx, target, depth)


def gen_program(rng: random.Random, depth: int = 4, fuel: int = 400, attempts: int = 50) -> tuple[Term, Type]:
    """A closed well-typed program at a random inhabited target type."""
    for _ in range(attempts):
        roll = rng.random()
        if roll < 0.35:
            target: Type = Nat()
        elif roll < 0.7:
            target = TermGenerator(rng).record_type(EMPTY)
        else:
            target = gen_type(2, EMPTY, rng)
        try:
            return gen_well_typed(EMPTY, target, fuel, rng, depth), target
        except GiveUp:
            continue
    raise GiveUp("no program generated")


# ---------------------------------------------------------------- shrinking


def shrink(t: Term) -> Iterator[Term]:
    """Candidate simplifications: drop seals, shrink literals, prune record fields."""
    match t:
        case Seal(inner):
            yield inner
        case NatLit(n) if n > 0:
            yield NatLit(0)
        case RecordLit(fields) if len(fields) > 1:
            for i in range(len(fields)):
                yield RecordLit(fields[:i] + fields[i + 1:])
    kids = children(t)
    for i, k in enumerate(kids):
        for smaller in shrink(k):
            yield with_children(t, kids[:i] + (smaller,) + kids[i + 1:])


def minimize(t: Term, still_fails: Callable[[Term], bool], budget: int = 200) -> Term:
    """Greedy shrinking of a failing term while ``still_fails`` holds."""
    improved = True
    while improved and budget > 0:
        improved = False
        for cand in shrink(t):
            budget -= 1
            if budget <= 0:
                break
            if still_fails(cand):
                t = cand
                improved = True
                break
    return t
