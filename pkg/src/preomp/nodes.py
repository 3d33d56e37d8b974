"""Syntax tree node definitions.

All nodes compare structurally: source spans are excluded from equality so
that a reparsed emission compares equal to the tree it came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Span:
    line: int
    col: int


def _span_field():
    return field(default=None, compare=False, repr=False)


# --- expressions ---


@dataclass
class IntLit:
    text: str
    span: Optional[Span] = _span_field()

    @property
    def value(self) -> int:
        return int(self.text)


@dataclass
class FloatLit:
    text: str
    span: Optional[Span] = _span_field()


@dataclass
class Ident:
    name: str
    span: Optional[Span] = _span_field()


@dataclass
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[Span] = _span_field()


@dataclass
class Unary:
    op: str
    operand: "Expr"
    span: Optional[Span] = _span_field()


@dataclass
class IncDec:
    op: str  # "++" | "--"
    target: "Expr"
    prefix: bool = False
    span: Optional[Span] = _span_field()


@dataclass
class Assign:
    op: str  # "=", "+=", "-=", "*=", "/=", "%="
    target: "Expr"
    value: "Expr"
    span: Optional[Span] = _span_field()


@dataclass
class Call:
    name: str
    args: list["Expr"] = field(default_factory=list)
    span: Optional[Span] = _span_field()


@dataclass
class Index:
    base: "Expr"
    index: "Expr"
    span: Optional[Span] = _span_field()


Expr = Union[IntLit, FloatLit, Ident, BinOp, Unary, IncDec, Assign, Call, Index]


# --- directives ---


@dataclass
class Clause:
    kind: str  # "private" | "shared"
    names: tuple[str, ...]


@dataclass
class Directive:
    """A parallelisation request attached to a for loop."""

    clauses: list[Clause] = field(default_factory=list)
    threshold: Expr = field(default_factory=lambda: FloatLit("1.0"))
    span: Optional[Span] = _span_field()

    def clause_names(self, kind: str) -> tuple[str, ...]:
        for c in self.clauses:
            if c.kind == kind:
                return c.names
        return ()


# --- statements ---


@dataclass
class PreprocLine:
    """Opaque preprocessor line (#include, #define, foreign pragmas)."""

    text: str
    span: Optional[Span] = _span_field()


@dataclass
class OmpParallelFor:
    """A generated `#pragma omp parallel for` line, with an optional if clause."""

    clauses: list[Clause] = field(default_factory=list)
    if_expr: Optional["Expr"] = None
    span: Optional[Span] = _span_field()


@dataclass
class Declarator:
    name: str
    dims: list["Expr"] = field(default_factory=list)
    init: Optional["Expr"] = None


@dataclass
class Declaration:
    base_type: str
    declarators: list[Declarator] = field(default_factory=list)
    span: Optional[Span] = _span_field()


@dataclass
class Block:
    stmts: list["Stmt"] = field(default_factory=list)
    span: Optional[Span] = _span_field()
    # True when the block exists only to hold splice output in a position
    # that grammatically takes a single statement; such blocks unwrap again
    # when the instrumentation is stripped.
    synthetic: bool = field(default=False, compare=False, repr=False)


@dataclass
class ExprStmt:
    expr: "Expr"
    span: Optional[Span] = _span_field()


@dataclass
class Empty:
    span: Optional[Span] = _span_field()


@dataclass
class For:
    init: Optional["Expr"]
    cond: Optional["Expr"]
    post: Optional["Expr"]
    body: "Stmt"
    directive: Optional[Directive] = None
    span: Optional[Span] = _span_field()


@dataclass
class While:
    cond: "Expr"
    body: "Stmt"
    span: Optional[Span] = _span_field()


@dataclass
class If:
    cond: "Expr"
    then: "Stmt"
    els: Optional["Stmt"] = None
    span: Optional[Span] = _span_field()


@dataclass
class Return:
    value: Optional["Expr"] = None
    span: Optional[Span] = _span_field()


Stmt = Union[
    PreprocLine, OmpParallelFor, Declaration, Block, ExprStmt, Empty, For, While, If, Return
]


# --- top level ---


@dataclass
class Param:
    base_type: str
    name: str
    dims: list[Optional["Expr"]] = field(default_factory=list)


@dataclass
class FunctionDef:
    return_type: str
    name: str
    params: list[Param] = field(default_factory=list)
    body: Optional[Block] = field(default_factory=Block)  # None for a prototype
    span: Optional[Span] = _span_field()


@dataclass
class TranslationUnit:
    items: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list, compare=False, repr=False)


SyntaxTree = TranslationUnit
