"""Terms, types, stores and the seal ordering shared by every other module.

Binders are named; substitution is capture-avoiding and equality of binders
is decided up to alpha-equivalence through :func:`canonical`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    length: int
    offset: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


def _span() -> Span | None:
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class Top:
    span: Span | None = _span()


@dataclass(frozen=True)
class Nat:
    span: Span | None = _span()


@dataclass(frozen=True)
class Arrow:
    domain: "Type"
    codomain: "Type"
    span: Span | None = _span()


@dataclass(frozen=True)
class Forall:
    var: str
    bound: "Type"
    body: "Type"
    span: Span | None = _span()


@dataclass(frozen=True)
class RecordTy:
    label: str
    field_type: "Type"
    span: Span | None = _span()


@dataclass(frozen=True)
class Intersect:
    left: "Type"
    right: "Type"
    span: Span | None = _span()


@dataclass(frozen=True)
class Readonly:
    inner: "Type"
    span: Span | None = _span()


@dataclass(frozen=True)
class TyVar:
    name: str
    span: Span | None = _span()


Type = Union[Top, Nat, Arrow, Forall, RecordTy, Intersect, Readonly, TyVar]


def intersect_all(types: list[Type]) -> Type:
    """Left-nested intersection; the empty intersection is Top."""
    if not types:
        return Top()
    out = types[0]
    for t in types[1:]:
        out = Intersect(out, t)
    return out


def components(t: Type) -> list[Type]:
    """Flatten nested intersections into their non-intersection parts."""
    if isinstance(t, Intersect):
        return components(t.left) + components(t.right)
    return [t]


# ---------------------------------------------------------------- locations & terms


@dataclass(frozen=True, order=True)
class Location:
    index: int

    def __str__(self) -> str:
        return f"0x{self.index:04x}"


@dataclass(frozen=True)
class Var:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Abs:
    param: str
    param_type: Type
    body: "Term"
    span: Span | None = _span()


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"
    span: Span | None = _span()


@dataclass(frozen=True)
class TyAbs:
    var: str
    bound: Type
    body: "Term"
    span: Span | None = _span()


@dataclass(frozen=True)
class TyApp:
    fn: "Term"
    type_arg: Type
    span: Span | None = _span()


@dataclass(frozen=True)
class RecordLit:
    fields: tuple[tuple[str, "Term"], ...]
    span: Span | None = _span()


@dataclass(frozen=True)
class RecordVal:
    fields: tuple[tuple[str, Location], ...]
    span: Span | None = _span()

    def lookup(self, label: str) -> Location | None:
        for name, loc in self.fields:
            if name == label:
                return loc
        return None


@dataclass(frozen=True)
class FieldRead:
    target: "Term"
    label: str
    span: Span | None = _span()


@dataclass(frozen=True)
class FieldWrite:
    target: "Term"
    label: str
    source: "Term"
    span: Span | None = _span()


@dataclass(frozen=True)
class Seal:
    inner: "Term"
    span: Span | None = _span()


@dataclass(frozen=True)
class NatLit:
    value: int
    span: Span | None = _span()


Term = Union[Var, Abs, App, TyAbs, TyApp, RecordLit, RecordVal, FieldRead, FieldWrite, Seal, NatLit]


def children(t: Term) -> tuple[Term, ...]:
    """Immediate subterms in evaluation order; paths index into this tuple."""
    match t:
        case Abs(body=b) | TyAbs(body=b):
            return (b,)
        case App(fn, arg):
            return (fn, arg)
        case TyApp(fn=fn):
            return (fn,)
        case RecordLit(fields):
            return tuple(v for _, v in fields)
        case FieldRead(target=tgt):
            return (tgt,)
        case FieldWrite(target=tgt, source=src):
            return (tgt, src)
        case Seal(inner):
            return (inner,)
    return ()


def with_children(t: Term, kids: tuple[Term, ...]) -> Term:
    match t:
        case Abs(x, ty, _):
            return Abs(x, ty, kids[0], span=t.span)
        case TyAbs(x, b, _):
            return TyAbs(x, b, kids[0], span=t.span)
        case App():
            return App(kids[0], kids[1], span=t.span)
        case TyApp(_, ty):
            return TyApp(kids[0], ty, span=t.span)
        case RecordLit(fields):
            return RecordLit(tuple((lbl, k) for (lbl, _), k in zip(fields, kids)), span=t.span)
        case FieldRead(_, lbl):
            return FieldRead(kids[0], lbl, span=t.span)
        case FieldWrite(_, lbl, _):
            return FieldWrite(kids[0], lbl, kids[1], span=t.span)
        case Seal():
            return Seal(kids[0], span=t.span)
    return t


def subterm_at(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        t = children(t)[i]
    return t


def is_value(t: Term) -> bool:
    if isinstance(t, (Abs, TyAbs, NatLit, RecordVal)):
        return True
    return isinstance(t, Seal) and isinstance(t.inner, RecordVal)


def seal_count(t: Term) -> int:
    own = 1 if isinstance(t, Seal) else 0
    return own + sum(seal_count(c) for c in children(t))


def locations(t: Term) -> set[Location]:
    if isinstance(t, RecordVal):
        return {loc for _, loc in t.fields}
    out: set[Location] = set()
    for c in children(t):
        out |= locations(c)
    return out


def has_runtime_forms(t: Term) -> bool:
    return isinstance(t, RecordVal) or any(has_runtime_forms(c) for c in children(t))


# ---------------------------------------------------------------- free variables & renaming


def free_type_vars(t: Type) -> set[str]:
    match t:
        case TyVar(name):
            return {name}
        case Arrow(a, b) | Intersect(a, b):
            return free_type_vars(a) | free_type_vars(b)
        case Forall(x, bound, body):
            return free_type_vars(bound) | (free_type_vars(body) - {x})
        case RecordTy(_, ft):
            return free_type_vars(ft)
        case Readonly(inner):
            return free_type_vars(inner)
    return set()


def free_vars(t: Term) -> set[str]:
    match t:
        case Var(name):
            return {name}
        case Abs(x, _, body):
            return free_vars(body) - {x}
    out: set[str] = set()
    for c in children(t):
        out |= free_vars(c)
    return out


def free_type_vars_in_term(t: Term) -> set[str]:
    match t:
        case Abs(_, ty, body):
            return free_type_vars(ty) | free_type_vars_in_term(body)
        case TyAbs(x, bound, body):
            return free_type_vars(bound) | (free_type_vars_in_term(body) - {x})
        case TyApp(fn, ty):
            return free_type_vars_in_term(fn) | free_type_vars(ty)
    out: set[str] = set()
    for c in children(t):
        out |= free_type_vars_in_term(c)
    return out


def fresh_name(base: str, avoid: set[str]) -> str:
    stem = base.rstrip("0123456789") or base
    n = 1
    while f"{stem}{n}" in avoid:
        n += 1
    return f"{stem}{n}"


# ---------------------------------------------------------------- substitution


def substitute_type(body: Type, tyvar: str, ty: Type) -> Type:
    """Capture-avoiding ``body[tyvar := ty]``."""
    return _subst_ty(body, {tyvar: ty})


def _subst_ty(t: Type, env: Mapping[str, Type]) -> Type:
    match t:
        case TyVar(name):
            return env.get(name, t)
        case Arrow(a, b):
            return Arrow(_subst_ty(a, env), _subst_ty(b, env), span=t.span)
        case Intersect(a, b):
            return Intersect(_subst_ty(a, env), _subst_ty(b, env), span=t.span)
        case RecordTy(lbl, ft):
            return RecordTy(lbl, _subst_ty(ft, env), span=t.span)
        case Readonly(inner):
            return Readonly(_subst_ty(inner, env), span=t.span)
        case Forall(x, bound, body):
            new_bound = _subst_ty(bound, env)
            inner_env = {k: v for k, v in env.items() if k != x}
            if not inner_env:
                return Forall(x, new_bound, body, span=t.span)
            incoming = set().union(*(free_type_vars(v) for v in inner_env.values()))
            if x in incoming:
                y = fresh_name(x, incoming | free_type_vars(body) | set(inner_env))
                inner_env[x] = TyVar(y)
                x = y
            return Forall(x, new_bound, _subst_ty(body, inner_env), span=t.span)
    return t


def substitute_term(body: Term, var: str, value: Term) -> Term:
    """Capture-avoiding ``body[var := value]``."""
    return _subst_tm(body, var, value, free_vars(value))


def _subst_tm(t: Term, var: str, value: Term, fv: set[str]) -> Term:
    match t:
        case Var(name):
            return value if name == var else t
        case Abs(x, ty, body):
            if x == var:
                return t
            if x in fv:
                y = fresh_name(x, fv | free_vars(body) | {var})
                body = _subst_tm(body, x, Var(y), {y})
                x = y
            return Abs(x, ty, _subst_tm(body, var, value, fv), span=t.span)
        case RecordVal() | NatLit():
            return t
    kids = children(t)
    if not kids:
        return t
    return with_children(t, tuple(_subst_tm(k, var, value, fv) for k in kids))


def substitute_type_in_term(body: Term, tyvar: str, ty: Type) -> Term:
    """Capture-avoiding replacement of a type variable inside a term."""
    return _subst_ty_tm(body, tyvar, ty, free_type_vars(ty))


def _subst_ty_tm(t: Term, x: str, ty: Type, fv: set[str]) -> Term:
    match t:
        case Abs(p, pty, body):
            return Abs(p, substitute_type(pty, x, ty), _subst_ty_tm(body, x, ty, fv), span=t.span)
        case TyAbs(y, bound, body):
            bound = substitute_type(bound, x, ty)
            if y == x:
                return TyAbs(y, bound, body, span=t.span)
            if y in fv:
                z = fresh_name(y, fv | free_type_vars_in_term(body) | {x})
                body = _subst_ty_tm(body, y, TyVar(z), {z})
                y = z
            return TyAbs(y, bound, _subst_ty_tm(body, x, ty, fv), span=t.span)
        case TyApp(fn, targ):
            return TyApp(_subst_ty_tm(fn, x, ty, fv), substitute_type(targ, x, ty), span=t.span)
        case Var() | RecordVal() | NatLit():
            return t
    return with_children(t, tuple(_subst_ty_tm(k, x, ty, fv) for k in children(t)))


# ---------------------------------------------------------------- alpha-equivalence


def canonical_type(t: Type, env: Mapping[str, str] | None = None, depth: int = 0) -> Type:
    """Rename bound type variables to depth-indexed names no parser can produce."""
    env = env or {}
    match t:
        case TyVar(name):
            return TyVar(env.get(name, name))
        case Arrow(a, b):
            return Arrow(canonical_type(a, env, depth), canonical_type(b, env, depth))
        case Intersect(a, b):
            return Intersect(canonical_type(a, env, depth), canonical_type(b, env, depth))
        case RecordTy(lbl, ft):
            return RecordTy(lbl, canonical_type(ft, env, depth))
        case Readonly(inner):
            return Readonly(canonical_type(inner, env, depth))
        case Forall(x, bound, body):
            name = f"%{depth}"
            return Forall(name, canonical_type(bound, env, depth),
                          canonical_type(body, {**env, x: name}, depth + 1))
    return type(t)()


def canonical(t: Term, tenv: Mapping[str, str] | None = None,
              venv: Mapping[str, str] | None = None, depth: int = 0) -> Term:
    """Alpha-normal representative of a term (spans dropped)."""
    tenv = tenv or {}
    venv = venv or {}
    match t:
        case Var(name):
            return Var(venv.get(name, name))
        case Abs(x, ty, body):
            name = f"%{depth}"
            return Abs(name, canonical_type(ty, tenv, depth),
                       canonical(body, tenv, {**venv, x: name}, depth + 1))
        case TyAbs(x, bound, body):
            name = f"%{depth}"
            return TyAbs(name, canonical_type(bound, tenv, depth),
                         canonical(body, {**tenv, x: name}, venv, depth + 1))
        case TyApp(fn, ty):
            return TyApp(canonical(fn, tenv, venv, depth), canonical_type(ty, tenv, depth))
        case RecordVal(fields):
            return RecordVal(fields)
        case NatLit(n):
            return NatLit(n)
    return with_children(t, tuple(canonical(k, tenv, venv, depth) for k in children(t)))


def alpha_eq(a: Term, b: Term) -> bool:
    return canonical(a) == canonical(b)


def type_alpha_eq(a: Type, b: Type) -> bool:
    return canonical_type(a) == canonical_type(b)


# ---------------------------------------------------------------- seal ordering


def seal_leq(s: Term, t: Term) -> bool:
    """True iff ``t`` is ``s`` with zero or more extra seals inserted."""
    return _leq(canonical(s), canonical(t))


def _leq(s: Term, t: Term) -> bool:
    if isinstance(t, Seal):
        if isinstance(s, Seal) and _leq(s.inner, t.inner):
            return True
        return _leq(s, t.inner)
    if type(s) is not type(t):
        return False
    match s, t:
        case Var(a), Var(b):
            return a == b
        case NatLit(a), NatLit(b):
            return a == b
        case RecordVal(a), RecordVal(b):
            return a == b
        case Abs(x, tx, _), Abs(y, ty, _):
            if x != y or tx != ty:
                return False
        case TyAbs(x, bx, _), TyAbs(y, by, _):
            if x != y or bx != by:
                return False
        case TyApp(_, a), TyApp(_, b):
            if a != b:
                return False
        case RecordLit(fa), RecordLit(fb):
            if [lbl for lbl, _ in fa] != [lbl for lbl, _ in fb]:
                return False
        case FieldRead(_, a), FieldRead(_, b):
            if a != b:
                return False
        case FieldWrite(_, a, _), FieldWrite(_, b, _):
            if a != b:
                return False
    return all(_leq(a, b) for a, b in zip(children(s), children(t)))


def erase_seals(t: Term) -> Term:
    if isinstance(t, Seal):
        return erase_seals(t.inner)
    kids = children(t)
    if not kids:
        return t
    return with_children(t, tuple(erase_seals(k) for k in kids))


# ---------------------------------------------------------------- stores


class Store(Mapping[Location, Term]):
    """Immutable finite map from locations to values.

    Updates return a new store; allocation hands out ``max index + 1`` so
    indices are never reused within one evaluation.
    """

    __slots__ = ("_cells",)

    def __init__(self, cells: Mapping[Location, Term] | None = None):
        self._cells: dict[Location, Term] = dict(cells or {})

    def __getitem__(self, loc: Location) -> Term:
        return self._cells[loc]

    def __iter__(self) -> Iterator[Location]:
        return iter(sorted(self._cells))

    def __len__(self) -> int:
        return len(self._cells)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Store):
            return self._cells == other._cells
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._cells.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{loc}: {v!r}" for loc, v in self.items())
        return f"Store({{{inner}}})"

    @property
    def next_location(self) -> Location:
        return Location(max((loc.index for loc in self._cells), default=0) + 1)

    def set(self, loc: Location, value: Term) -> "Store":
        cells = dict(self._cells)
        cells[loc] = value
        return Store(cells)

    def alloc(self, value: Term) -> tuple[Location, "Store"]:
        loc = self.next_location
        return loc, self.set(loc, value)


def store_leq(a: Store, b: Store) -> bool:
    if set(a) != set(b):
        return False
    return all(seal_leq(a[loc], b[loc]) for loc in a)
