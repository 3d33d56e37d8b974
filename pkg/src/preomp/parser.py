"""Recursive-descent parser for the supported C subset.

parse_unit raises ParseError for malformed syntax. Problems with
parallelisation directives themselves (wrong clause, wrong statement kind)
are collected as diagnostics on the returned tree so that validate() can
report them all at once; the offending directive line survives as an opaque
preprocessor node, which keeps round-tripping intact.
"""

from __future__ import annotations

import re

from .diagnostics import Diagnostic, ParseError
from .nodes import (
    Assign,
    BinOp,
    Block,
    Call,
    Clause,
    Declaration,
    Declarator,
    Directive,
    Empty,
    ExprStmt,
    FloatLit,
    For,
    FunctionDef,
    Ident,
    If,
    IncDec,
    Index,
    IntLit,
    Param,
    PreprocLine,
    Return,
    Span,
    TranslationUnit,
    Unary,
    While,
)
from .tokens import TYPE_NAMES, Token, tokenize

_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%="}
_CLAUSE_KINDS = ("private", "shared")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []

    # --- token plumbing ---

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text or tok.kind!r}", tok.line, tok.col)
        return self.next()

    def span(self, tok: Token) -> Span:
        return Span(tok.line, tok.col)

    def error(self, message: str, tok: Token) -> None:
        self.diagnostics.append(Diagnostic("error", message, tok.line, tok.col))

    # --- top level ---

    def parse_unit(self) -> TranslationUnit:
        items = []
        while not self.at("eof"):
            tok = self.peek()
            if tok.kind == "preproc":
                items.append(PreprocLine(self.next().text, span=self.span(tok)))
            elif tok.kind == "directive":
                raise ParseError("parallelisation directive outside any function", tok.line, tok.col)
            elif tok.kind == "keyword" and (tok.text in TYPE_NAMES or tok.text == "void"):
                items.append(self.parse_definition())
            else:
                raise ParseError(f"expected a declaration or function, found {tok.text!r}", tok.line, tok.col)
        unit = TranslationUnit(items)
        unit.diagnostics = self.diagnostics
        return unit

    def parse_definition(self):
        type_tok = self.next()
        name_tok = self.expect("ident")
        if self.at("punct", "("):
            return self.parse_function(type_tok, name_tok)
        return self.finish_declaration(type_tok, name_tok)

    def parse_function(self, type_tok: Token, name_tok: Token) -> FunctionDef:
        self.expect("punct", "(")
        params: list[Param] = []
        if not self.at("punct", ")"):
            if self.at("keyword", "void") and self.peek(1).text == ")":
                self.next()
            else:
                while True:
                    params.append(self.parse_param())
                    if self.at("punct", ","):
                        self.next()
                        continue
                    break
        self.expect("punct", ")")
        if self.at("punct", ";"):
            self.next()
            body = None
        else:
            body = self.parse_block()
        return FunctionDef(type_tok.text, name_tok.text, params, body, span=self.span(type_tok))

    def parse_param(self) -> Param:
        tok = self.peek()
        if not (tok.kind == "keyword" and tok.text in TYPE_NAMES):
            raise ParseError(f"expected parameter type, found {tok.text!r}", tok.line, tok.col)
        self.next()
        name = self.expect("ident").text
        dims: list = []
        while self.at("punct", "["):
            self.next()
            if self.at("punct", "]"):
                dims.append(None)
            else:
                dims.append(self.parse_expr())
            self.expect("punct", "]")
        return Param(tok.text, name, dims)

    def finish_declaration(self, type_tok: Token, first_name: Token) -> Declaration:
        declarators = [self.parse_declarator(first_name)]
        while self.at("punct", ","):
            self.next()
            declarators.append(self.parse_declarator(self.expect("ident")))
        self.expect("punct", ";")
        return Declaration(type_tok.text, declarators, span=self.span(type_tok))

    def parse_declarator(self, name_tok: Token) -> Declarator:
        dims: list = []
        while self.at("punct", "["):
            self.next()
            dims.append(self.parse_expr())
            self.expect("punct", "]")
        init = None
        if self.at("punct", "="):
            self.next()
            init = self.parse_expr()
        return Declarator(name_tok.text, dims, init)

    # --- statements ---

    def parse_block(self) -> Block:
        open_tok = self.expect("punct", "{")
        stmts = []
        while not self.at("punct", "}"):
            if self.at("eof"):
                raise ParseError("unterminated block", open_tok.line, open_tok.col)
            stmts.append(self.parse_statement())
        self.expect("punct", "}")
        return Block(stmts, span=self.span(open_tok))

    def parse_statement(self):
        tok = self.peek()
        if tok.kind == "preproc":
            return PreprocLine(self.next().text, span=self.span(tok))
        if tok.kind == "directive":
            return self.parse_directive_site()
        if tok.kind == "punct" and tok.text == "{":
            return self.parse_block()
        if tok.kind == "punct" and tok.text == ";":
            self.next()
            return Empty(span=self.span(tok))
        if tok.kind == "keyword":
            if tok.text == "for":
                return self.parse_for()
            if tok.text == "if":
                return self.parse_if()
            if tok.text == "while":
                return self.parse_while()
            if tok.text == "return":
                self.next()
                value = None if self.at("punct", ";") else self.parse_expr()
                self.expect("punct", ";")
                return Return(value, span=self.span(tok))
            if tok.text in TYPE_NAMES:
                self.next()
                return self.finish_declaration(tok, self.expect("ident"))
            raise ParseError(f"unexpected keyword {tok.text!r}", tok.line, tok.col)
        expr = self.parse_expr()
        self.expect("punct", ";")
        return ExprStmt(expr, span=self.span(tok))

    def parse_directive_site(self):
        tok = self.next()
        directive = self.parse_directive_text(tok)
        if directive is None:
            return PreprocLine(tok.text, span=self.span(tok))
        if not self.at("keyword", "for"):
            self.error("directive must immediately precede a for loop", tok)
            return PreprocLine(tok.text, span=self.span(tok))
        loop = self.parse_for()
        loop.directive = directive
        return loop

    def parse_for(self) -> For:
        tok = self.expect("keyword", "for")
        self.expect("punct", "(")
        init = None if self.at("punct", ";") else self.parse_expr()
        self.expect("punct", ";")
        cond = None if self.at("punct", ";") else self.parse_expr()
        self.expect("punct", ";")
        post = None if self.at("punct", ")") else self.parse_expr()
        self.expect("punct", ")")
        body = self.parse_statement()
        return For(init, cond, post, body, span=self.span(tok))

    def parse_if(self) -> If:
        tok = self.expect("keyword", "if")
        self.expect("punct", "(")
        cond = self.parse_expr()
        self.expect("punct", ")")
        then = self.parse_statement()
        els = None
        if self.at("keyword", "else"):
            self.next()
            els = self.parse_statement()
        return If(cond, then, els, span=self.span(tok))

    def parse_while(self) -> While:
        tok = self.expect("keyword", "while")
        self.expect("punct", "(")
        cond = self.parse_expr()
        self.expect("punct", ")")
        body = self.parse_statement()
        return While(cond, body, span=self.span(tok))

    # --- directive clause grammar ---

    def parse_directive_text(self, tok: Token) -> Directive | None:
        """Parse '#pragma preomp parallel for [clauses]'; None when rejected."""
        m = re.match(r"#\s*pragma\s+preomp\s+parallel\s+for\b(.*)", tok.text)
        if m is None:
            self.error("directive must be 'parallel for'", tok)
            return None
        rest = m.group(1).strip()
        sub = _Parser(tokenize(rest)) if rest else None
        clauses: list[Clause] = []
        threshold = None
        seen_names: set[str] = set()
        seen_kinds: set[str] = set()
        while sub is not None and not sub.at("eof"):
            head = sub.peek()
            if head.kind != "ident":
                self.error(f"malformed directive clause near {head.text!r}", tok)
                return None
            sub.next()
            if head.text in _CLAUSE_KINDS:
                try:
                    names = self._clause_name_list(sub)
                except ParseError:
                    self.error(f"malformed {head.text} clause", tok)
                    return None
                if head.text in seen_kinds:
                    self.error(f"duplicate {head.text} clause", tok)
                    return None
                dup = [n for n in names if n in seen_names]
                if dup:
                    self.error(f"identifier {dup[0]!r} appears in more than one data clause", tok)
                    return None
                seen_kinds.add(head.text)
                seen_names.update(names)
                clauses.append(Clause(head.text, tuple(names)))
            elif head.text == "parallel_threshold":
                if threshold is not None:
                    self.error("duplicate parallel_threshold clause", tok)
                    return None
                try:
                    sub.expect("punct", "(")
                    threshold = sub.parse_expr()
                    sub.expect("punct", ")")
                except ParseError:
                    self.error("malformed parallel_threshold clause", tok)
                    return None
            else:
                self.error(f"unknown directive clause {head.text!r}", tok)
                return None
        if threshold is None:
            threshold = FloatLit("1.0")
        return Directive(clauses, threshold, span=self.span(tok))

    def _clause_name_list(self, sub: "_Parser") -> list[str]:
        sub.expect("punct", "(")
        names = [sub.expect("ident").text]
        while sub.at("punct", ","):
            sub.next()
            names.append(sub.expect("ident").text)
        sub.expect("punct", ")")
        return names

    # --- expressions (precedence climbing) ---

    def parse_expr(self):
        return self.parse_assignment()

    def parse_assignment(self):
        left = self.parse_logical_or()
        tok = self.peek()
        if tok.kind == "punct" and tok.text in _ASSIGN_OPS:
            if not isinstance(left, (Ident, Index)):
                raise ParseError("invalid assignment target", tok.line, tok.col)
            self.next()
            value = self.parse_assignment()
            return Assign(tok.text, left, value, span=self.span(tok))
        return left

    def _binary(self, ops: tuple[str, ...], sub) -> object:
        left = sub()
        while self.peek().kind == "punct" and self.peek().text in ops:
            tok = self.next()
            left = BinOp(tok.text, left, sub(), span=self.span(tok))
        return left

    def parse_logical_or(self):
        return self._binary(("||",), self.parse_logical_and)

    def parse_logical_and(self):
        return self._binary(("&&",), self.parse_equality)

    def parse_equality(self):
        return self._binary(("==", "!="), self.parse_relational)

    def parse_relational(self):
        return self._binary(("<", "<=", ">", ">="), self.parse_additive)

    def parse_additive(self):
        return self._binary(("+", "-"), self.parse_multiplicative)

    def parse_multiplicative(self):
        return self._binary(("*", "/", "%"), self.parse_unary)

    def parse_unary(self):
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("-", "+", "!"):
            self.next()
            return Unary(tok.text, self.parse_unary(), span=self.span(tok))
        if tok.kind == "punct" and tok.text in ("++", "--"):
            self.next()
            operand = self.parse_unary()
            return IncDec(tok.text, operand, prefix=True, span=self.span(tok))
        return self.parse_postfix()

    def parse_postfix(self):
        expr = self.parse_primary()
        while True:
            tok = self.peek()
            if self.at("punct", "["):
                self.next()
                index = self.parse_expr()
                self.expect("punct", "]")
                expr = Index(expr, index, span=self.span(tok))
            elif self.at("punct", "("):
                if not isinstance(expr, Ident):
                    raise ParseError("calls are only supported on plain identifiers", tok.line, tok.col)
                self.next()
                args = []
                if not self.at("punct", ")"):
                    args.append(self.parse_expr())
                    while self.at("punct", ","):
                        self.next()
                        args.append(self.parse_expr())
                self.expect("punct", ")")
                expr = Call(expr.name, args, span=expr.span)
            elif tok.kind == "punct" and tok.text in ("++", "--"):
                self.next()
                expr = IncDec(tok.text, expr, prefix=False, span=self.span(tok))
            else:
                return expr

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return IntLit(tok.text, span=self.span(tok))
        if tok.kind == "float":
            self.next()
            return FloatLit(tok.text, span=self.span(tok))
        if tok.kind == "ident":
            self.next()
            return Ident(tok.text, span=self.span(tok))
        if self.at("punct", "("):
            self.next()
            expr = self.parse_expr()
            self.expect("punct", ")")
            return expr
        raise ParseError(f"expected an expression, found {tok.text or tok.kind!r}", tok.line, tok.col)


def parse_unit(source: str) -> TranslationUnit:
    """Parse a translation unit of the supported C subset."""
    return _Parser(tokenize(source)).parse_unit()
