"""Lexer, recursive-descent parser and pretty-printer for the surface syntax.

Grammar (``docs/surface-syntax.md`` has the long form)::

    program  ::= decl* term
    decl     ::= 'def' IDENT '=' term ';' | 'type' IDENT '=' type ';'
    term     ::= 'fun' '(' IDENT ':' type ')' term
               | 'tfun' '(' IDENT '<:' type ')' term
               | app [':=' term]                  -- lhs must be a field read
    app      ::= prefix (prefix | '[' type ']')*
    prefix   ::= 'seal' prefix | postfix
    postfix  ::= atom ('.' IDENT)*
    atom     ::= IDENT | NAT | '{' IDENT '=' term (',' ...)* '}' | '(' term ')'

    type     ::= 'forall' '(' IDENT '<:' type ')' type | inter ['->' type]
    inter    ::= unary ('&' unary)*
    unary    ::= 'readonly' unary | 'Top' | 'Nat' | IDENT
               | '{' IDENT ':' type (',' ...)* '}' | '(' type ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import Diagnostic, ParseError
from .syntax import (
    Abs, App, Arrow, FieldRead, FieldWrite, Forall, Intersect, Location, Nat, NatLit,
    Readonly, RecordLit, RecordTy, RecordVal, Seal, Span, Store, Term, Top, TyAbs, TyApp,
    TyVar, Type, Var, free_type_vars, free_type_vars_in_term, free_vars, intersect_all,
)

KEYWORDS = {"fun", "tfun", "forall", "seal", "readonly", "Top", "Nat", "def", "type"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<hex>0x[0-9a-fA-F]+)
  | (?P<nat>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>:=|<:|->|[(){}\[\].,:=&;])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str   # ident, keyword, nat, hex, punct, eof
    text: str
    span: Span


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            span = Span(line, col, 1, pos)
            raise ParseError([Diagnostic(span, f"unexpected character {text[pos]!r}", "syntax-error")])
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, lexeme, Span(line, col, len(lexeme), pos)))
        pos = m.end()
    col = pos - line_start + 1
    tokens.append(Token("eof", "", Span(line, col, 0, pos)))
    return tokens


@dataclass
class SourceProgram:
    text: str
    main: Term
    declarations: list[tuple[str, str, object]] = field(default_factory=list)


class Parser:
    def __init__(self, text: str, allow_runtime: bool = False):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.allow_runtime = allow_runtime
        self.defs: dict[str, Term] = {}
        self.type_defs: dict[str, Type] = {}
        self.term_scope: list[str] = []
        self.type_scope: list[str] = []

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _prev_end(self) -> int:
        prev = self.tokens[self.pos - 1] if self.pos else self.tokens[0]
        return prev.span.offset + prev.span.length

    def _span_from(self, start: Token) -> Span:
        s = start.span
        return Span(s.line, s.column, max(self._prev_end() - s.offset, 0), s.offset)

    def error(self, message: str, token: Token | None = None, code: str = "syntax-error") -> ParseError:
        token = token or self.tok
        span = token.span
        if token.kind == "eof" and span.offset > 0:
            # keep the span inside the input
            span = Span(span.line, max(span.column - 1, 1), 0, span.offset)
        return ParseError([Diagnostic(span, message, code)])

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("punct", "keyword")

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            shown = self.tok.text or "end of input"
            raise self.error(f"expected an identifier, found {shown!r}")
        return self.advance()

    # -- programs

    def program(self) -> SourceProgram:
        decls: list[tuple[str, str, object]] = []
        while self.at("def") or self.at("type"):
            kw = self.advance()
            name = self.ident()
            self.expect("=")
            if kw.text == "def":
                body = self.term()
                if free_vars(body) or free_type_vars_in_term(body):
                    raise self.error(f"definition {name.text!r} must be closed", name)
                self.defs[name.text] = body
            else:
                body = self.type_()
                if free_type_vars(body):
                    raise self.error(f"type abbreviation {name.text!r} must be closed", name)
                self.type_defs[name.text] = body
            self.expect(";")
            decls.append((kw.text, name.text, body))
        main = self.term()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after end of term")
        return SourceProgram(self.text, main, decls)

    # -- terms

    def term(self) -> Term:
        start = self.tok
        if self.at("fun"):
            self.advance()
            self.expect("(")
            name = self.ident().text
            self.expect(":")
            ty = self.type_()
            self.expect(")")
            self.term_scope.append(name)
            try:
                body = self.term()
            finally:
                self.term_scope.pop()
            return Abs(name, ty, body, span=self._span_from(start))
        if self.at("tfun"):
            self.advance()
            self.expect("(")
            name = self.ident().text
            self.expect("<:")
            bound = self.type_()
            self.expect(")")
            self.type_scope.append(name)
            try:
                body = self.term()
            finally:
                self.type_scope.pop()
            return TyAbs(name, bound, body, span=self._span_from(start))
        lhs = self.app()
        if self.at(":="):
            op = self.advance()
            if not isinstance(lhs, FieldRead):
                raise self.error("left side of ':=' must be a field access", op)
            rhs = self.term()
            return FieldWrite(lhs.target, lhs.label, rhs, span=self._span_from(start))
        return lhs

    def _starts_prefix(self) -> bool:
        tok = self.tok
        if tok.kind in ("ident", "nat", "hex"):
            return True
        return tok.kind == "punct" and tok.text in ("(", "{") or (tok.kind == "keyword" and tok.text == "seal")

    def app(self) -> Term:
        start = self.tok
        fn = self.prefix()
        while True:
            if self.at("["):
                self.advance()
                ty = self.type_()
                self.expect("]")
                fn = TyApp(fn, ty, span=self._span_from(start))
            elif self._starts_prefix():
                arg = self.prefix()
                fn = App(fn, arg, span=self._span_from(start))
            else:
                return fn

    def prefix(self) -> Term:
        start = self.tok
        if self.at("seal"):
            self.advance()
            inner = self.prefix()
            return Seal(inner, span=self._span_from(start))
        return self.postfix()

    def postfix(self) -> Term:
        start = self.tok
        t = self.atom()
        while self.at("."):
            self.advance()
            label = self.ident().text
            t = FieldRead(t, label, span=self._span_from(start))
        return t

    def atom(self) -> Term:
        tok = self.tok
        if tok.kind == "ident":
            self.advance()
            if tok.text not in self.term_scope and tok.text in self.defs:
                return self.defs[tok.text]
            return Var(tok.text, span=tok.span)
        if tok.kind == "nat":
            self.advance()
            return NatLit(int(tok.text), span=tok.span)
        if tok.kind == "hex":
            raise self.error("location literals cannot appear in source programs", tok,
                             code="location-literal")
        if self.at("("):
            self.advance()
            t = self.term()
            self.expect(")")
            return t
        if self.at("{"):
            return self.record()
        shown = tok.text or "end of input"
        raise self.error(f"expected a term, found {shown!r}")

    def record(self) -> Term:
        start = self.expect("{")
        fields: list[tuple[str, object]] = []
        seen: set[str] = set()
        runtime = None
        while True:
            label_tok = self.ident()
            if label_tok.text in seen:
                raise self.error(f"duplicate record label {label_tok.text!r}", label_tok,
                                 code="duplicate-label")
            seen.add(label_tok.text)
            if self.at(":"):
                colon = self.advance()
                if not self.allow_runtime:
                    raise self.error("store locations cannot appear in source programs", colon,
                                     code="location-literal")
                hex_tok = self.tok
                if hex_tok.kind != "hex":
                    raise self.error("expected a location after ':'")
                self.advance()
                value: object = Location(int(hex_tok.text, 16))
                kind = True
            else:
                self.expect("=")
                value = self.term()
                kind = False
            if runtime is not None and runtime != kind:
                raise self.error("cannot mix locations and terms in one record", label_tok)
            runtime = kind
            fields.append((label_tok.text, value))
            if not self.at(","):
                break
            self.advance()
        self.expect("}")
        span = self._span_from(start)
        if runtime:
            return RecordVal(tuple(fields), span=span)
        return RecordLit(tuple(fields), span=span)

    # -- types

    def type_(self) -> Type:
        start = self.tok
        if self.at("forall"):
            self.advance()
            self.expect("(")
            name = self.ident().text
            self.expect("<:")
            bound = self.type_()
            self.expect(")")
            self.type_scope.append(name)
            try:
                body = self.type_()
            finally:
                self.type_scope.pop()
            return Forall(name, bound, body, span=self._span_from(start))
        left = self.inter()
        if self.at("->"):
            self.advance()
            right = self.type_()
            return Arrow(left, right, span=self._span_from(start))
        return left

    def inter(self) -> Type:
        start = self.tok
        t = self.unary()
        while self.at("&"):
            self.advance()
            rhs = self.unary()
            t = Intersect(t, rhs, span=self._span_from(start))
        return t

    def unary(self) -> Type:
        start = self.tok
        tok = self.tok
        if self.at("readonly"):
            self.advance()
            inner = self.unary()
            return Readonly(inner, span=self._span_from(start))
        if self.at("Top"):
            self.advance()
            return Top(span=tok.span)
        if self.at("Nat"):
            self.advance()
            return Nat(span=tok.span)
        if tok.kind == "ident":
            self.advance()
            if tok.text not in self.type_scope and tok.text in self.type_defs:
                return self.type_defs[tok.text]
            return TyVar(tok.text, span=tok.span)
        if self.at("("):
            self.advance()
            t = self.type_()
            self.expect(")")
            return t
        if self.at("{"):
            self.advance()
            parts: list[Type] = []
            seen: set[str] = set()
            while True:
                label_tok = self.ident()
                if label_tok.text in seen:
                    raise self.error(f"duplicate record label {label_tok.text!r}", label_tok,
                                     code="duplicate-label")
                seen.add(label_tok.text)
                self.expect(":")
                parts.append(RecordTy(label_tok.text, self.type_(), span=self._span_from(label_tok)))
                if not self.at(","):
                    break
                self.advance()
            self.expect("}")
            if len(parts) == 1:
                return RecordTy(parts[0].label, parts[0].field_type, span=self._span_from(start))
            return intersect_all(parts)
        shown = tok.text or "end of input"
        raise self.error(f"expected a type, found {shown!r}")


def parse_program(text: str, allow_runtime: bool = False) -> SourceProgram:
    return Parser(text, allow_runtime).program()


def parse_term(text: str, allow_runtime: bool = False) -> Term:
    """Parse a program (optional declarations then a term) into its main term.

    Raises :class:`ParseError` carrying span-annotated diagnostics.
    """
    return parse_program(text, allow_runtime).main


def parse_type(text: str) -> Type:
    p = Parser(text)
    t = p.type_()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r} after end of type")
    return t


# ---------------------------------------------------------------- printing

_TY_FORALL, _TY_INTER, _TY_UNARY, _TY_ATOM = 0, 1, 2, 3


def pretty_type(t: Type) -> str:
    return _pty(t, 0)


def _pty(t: Type, need: int) -> str:
    match t:
        case Top():
            return "Top"
        case Nat():
            return "Nat"
        case TyVar(name):
            return name
        case RecordTy(lbl, ft):
            return f"{{{lbl}: {_pty(ft, 0)}}}"
        case Readonly(inner):
            text, level = f"readonly {_pty(inner, _TY_UNARY)}", _TY_UNARY
        case Intersect(a, b):
            text, level = f"{_pty(a, _TY_INTER)} & {_pty(b, _TY_UNARY)}", _TY_INTER
        case Arrow(a, b):
            text, level = f"{_pty(a, _TY_INTER)} -> {_pty(b, 0)}", _TY_FORALL
        case Forall(x, bound, body):
            text, level = f"forall({x} <: {_pty(bound, 0)}) {_pty(body, 0)}", _TY_FORALL
        case _:
            raise TypeError(f"not a type: {t!r}")
    return f"({text})" if level < need else text


_TM_LOW, _TM_APP, _TM_PREFIX, _TM_POSTFIX, _TM_ATOM = 0, 1, 2, 3, 4


def pretty_term(t: Term) -> str:
    """Render a term; runtime records use the ``{x : 0x0001}`` trace notation."""
    return _ptm(t, 0)


def _ptm(t: Term, need: int) -> str:
    match t:
        case Var(name):
            return name
        case NatLit(n):
            return str(n)
        case RecordLit(fields):
            return "{" + ", ".join(f"{lbl} = {_ptm(v, 0)}" for lbl, v in fields) + "}"
        case RecordVal(fields):
            return "{" + ", ".join(f"{lbl} : {loc}" for lbl, loc in fields) + "}"
        case FieldRead(tgt, lbl):
            text, level = f"{_ptm(tgt, _TM_POSTFIX)}.{lbl}", _TM_POSTFIX
        case Seal(inner):
            text, level = f"seal {_ptm(inner, _TM_PREFIX)}", _TM_PREFIX
        case App(fn, arg):
            text, level = f"{_ptm(fn, _TM_APP)} {_ptm(arg, _TM_POSTFIX)}", _TM_APP
        case TyApp(fn, ty):
            text, level = f"{_ptm(fn, _TM_APP)} [{pretty_type(ty)}]", _TM_APP
        case FieldWrite(tgt, lbl, src):
            text, level = f"{_ptm(tgt, _TM_POSTFIX)}.{lbl} := {_ptm(src, 0)}", _TM_LOW
        case Abs(x, ty, body):
            text, level = f"fun({x}: {pretty_type(ty)}) {_ptm(body, 0)}", _TM_LOW
        case TyAbs(x, bound, body):
            text, level = f"tfun({x} <: {pretty_type(bound)}) {_ptm(body, 0)}", _TM_LOW
        case _:
            raise TypeError(f"not a term: {t!r}")
    return f"({text})" if level < need else text


def pretty_store(store: Store) -> str:
    return "[" + ", ".join(f"{loc}: {pretty_term(v)}" for loc, v in store.items()) + "]"
