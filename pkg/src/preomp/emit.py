"""Deterministic C emission and the per-site manifest.

The same tree always renders to the same bytes. Directive sites are
recognised structurally (decision wrappers, generated pragmas, or raw
directives), so the manifest can be rebuilt even from a reparsed emission.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .nodes import (
    Assign,
    BinOp,
    Block,
    Call,
    Declaration,
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
    OmpParallelFor,
    PreprocLine,
    Return,
    Span,
    TranslationUnit,
    Unary,
    While,
)

RUNTIME_HEADER = "preomp_rt.h"
DECIDE = "preomp_decide"
ENTER = "preomp_enter"
EXIT = "preomp_exit"

_OPAQUE_DECIDE_RE = re.compile(r"preomp_decide\s*\(\s*(\d+)")

_PREC = {
    "||": 2, "&&": 3,
    "==": 4, "!=": 4,
    "<": 5, "<=": 5, ">": 5, ">=": 5,
    "+": 6, "-": 6,
    "*": 7, "/": 7, "%": 7,
}


@dataclass(frozen=True)
class ManifestEntry:
    loop_id: int
    nest_id: int
    depth: int
    line: int
    col: int
    mode: str  # "duplicate" | "ompif" | "none"


@dataclass(frozen=True)
class EmittedUnit:
    text: str
    manifest: tuple[ManifestEntry, ...]


# --- expressions ---


def emit_expr(expr, prec: int = 0) -> str:
    if isinstance(expr, IntLit) or isinstance(expr, FloatLit):
        return expr.text
    if isinstance(expr, Ident):
        return expr.name
    if isinstance(expr, BinOp):
        p = _PREC[expr.op]
        text = f"{emit_expr(expr.left, p)} {expr.op} {emit_expr(expr.right, p + 1)}"
        return f"({text})" if p < prec else text
    if isinstance(expr, Unary):
        text = expr.op + emit_expr(expr.operand, 8)
        return f"({text})" if prec > 8 else text
    if isinstance(expr, IncDec):
        inner = emit_expr(expr.target, 9)
        return expr.op + inner if expr.prefix else inner + expr.op
    if isinstance(expr, Assign):
        text = f"{emit_expr(expr.target, 9)} {expr.op} {emit_expr(expr.value, 1)}"
        return f"({text})" if prec > 1 else text
    if isinstance(expr, Call):
        args = ", ".join(emit_expr(a) for a in expr.args)
        return f"{expr.name}({args})"
    if isinstance(expr, Index):
        return f"{emit_expr(expr.base, 9)}[{emit_expr(expr.index)}]"
    raise TypeError(f"cannot emit {type(expr).__name__}")


def directive_text(directive: Directive) -> str:
    parts = ["#pragma preomp parallel for"]
    for clause in directive.clauses:
        parts.append(f"{clause.kind}({', '.join(clause.names)})")
    if not _is_default_threshold(directive.threshold):
        parts.append(f"parallel_threshold({emit_expr(directive.threshold)})")
    return " ".join(parts)


def omp_pragma_text(pragma: OmpParallelFor) -> str:
    parts = ["#pragma omp parallel for"]
    for clause in pragma.clauses:
        parts.append(f"{clause.kind}({', '.join(clause.names)})")
    if pragma.if_expr is not None:
        parts.append(f"if({emit_expr(pragma.if_expr)})")
    return " ".join(parts)


def _is_default_threshold(expr) -> bool:
    return isinstance(expr, FloatLit) and expr.text == "1.0"


# --- statements ---


class _Emitter:
    def __init__(self):
        self.lines: list[str] = []
        self.depth = 0

    def line(self, text: str = ""):
        self.lines.append("    " * self.depth + text if text else "")

    def emit_unit(self, unit: TranslationUnit):
        for item in unit.items:
            if isinstance(item, FunctionDef):
                if self.lines and self.lines[-1] != "":
                    self.line()
                self.emit_function(item)
            elif isinstance(item, Declaration):
                self.line(self.declaration_text(item))
            elif isinstance(item, PreprocLine):
                self.line(item.text)
            else:
                raise TypeError(f"cannot emit top-level {type(item).__name__}")

    def emit_function(self, func: FunctionDef):
        params = ", ".join(self.param_text(p) for p in func.params) or "void"
        if func.body is None:
            self.line(f"{func.return_type} {func.name}({params});")
            return
        self.line(f"{func.return_type} {func.name}({params}) {{")
        self.depth += 1
        for stmt in func.body.stmts:
            self.emit_stmt(stmt)
        self.depth -= 1
        self.line("}")

    @staticmethod
    def param_text(param) -> str:
        dims = "".join("[]" if d is None else f"[{emit_expr(d)}]" for d in param.dims)
        return f"{param.base_type} {param.name}{dims}"

    @staticmethod
    def declaration_text(decl: Declaration) -> str:
        rendered = []
        for d in decl.declarators:
            text = d.name + "".join(f"[{emit_expr(dim)}]" for dim in d.dims)
            if d.init is not None:
                text += f" = {emit_expr(d.init)}"
            rendered.append(text)
        return f"{decl.base_type} {', '.join(rendered)};"

    def emit_stmt(self, stmt):
        if isinstance(stmt, Declaration):
            self.line(self.declaration_text(stmt))
        elif isinstance(stmt, ExprStmt):
            self.line(emit_expr(stmt.expr) + ";")
        elif isinstance(stmt, Empty):
            self.line(";")
        elif isinstance(stmt, Return):
            self.line("return;" if stmt.value is None else f"return {emit_expr(stmt.value)};")
        elif isinstance(stmt, PreprocLine):
            self.line(stmt.text)
        elif isinstance(stmt, OmpParallelFor):
            self.line(omp_pragma_text(stmt))
        elif isinstance(stmt, Block):
            self.line("{")
            self.depth += 1
            for inner in stmt.stmts:
                self.emit_stmt(inner)
            self.depth -= 1
            self.line("}")
        elif isinstance(stmt, For):
            self.emit_for(stmt)
        elif isinstance(stmt, While):
            header = f"while ({emit_expr(stmt.cond)})"
            self.emit_with_body(header, stmt.body)
        elif isinstance(stmt, If):
            self.emit_if(stmt)
        else:
            raise TypeError(f"cannot emit statement {type(stmt).__name__}")

    def emit_for(self, loop: For):
        if loop.directive is not None:
            self.line(directive_text(loop.directive))
        init = emit_expr(loop.init) if loop.init is not None else ""
        cond = emit_expr(loop.cond) if loop.cond is not None else ""
        post = emit_expr(loop.post) if loop.post is not None else ""
        self.emit_with_body(f"for ({init}; {cond}; {post})", loop.body)

    def emit_with_body(self, header: str, body):
        if isinstance(body, Block):
            self.line(header + " {")
            self.depth += 1
            for inner in body.stmts:
                self.emit_stmt(inner)
            self.depth -= 1
            self.line("}")
        else:
            self.line(header)
            self.depth += 1
            self.emit_stmt(body)
            self.depth -= 1

    def emit_if(self, stmt: If, continuation: bool = False):
        header = f"if ({emit_expr(stmt.cond)})"
        if continuation:
            header = "} else " + header
        if isinstance(stmt.then, Block):
            self.line(header + " {")
            self.depth += 1
            for inner in stmt.then.stmts:
                self.emit_stmt(inner)
            self.depth -= 1
            if stmt.els is None:
                self.line("}")
            elif isinstance(stmt.els, If):
                self.emit_if(stmt.els, continuation=True)
            elif isinstance(stmt.els, Block):
                self.line("} else {")
                self.depth += 1
                for inner in stmt.els.stmts:
                    self.emit_stmt(inner)
                self.depth -= 1
                self.line("}")
            else:
                self.line("} else")
                self.depth += 1
                self.emit_stmt(stmt.els)
                self.depth -= 1
        else:
            self.line(header)
            self.depth += 1
            self.emit_stmt(stmt.then)
            self.depth -= 1
            if stmt.els is not None:
                self.line("else")
                self.depth += 1
                self.emit_stmt(stmt.els)
                self.depth -= 1


# --- manifest ---


def _decide_call(expr) -> Optional[int]:
    if isinstance(expr, Call) and expr.name == DECIDE and expr.args and isinstance(expr.args[0], IntLit):
        return expr.args[0].value
    return None


def _first_for(stmts) -> Optional[For]:
    for stmt in stmts:
        if isinstance(stmt, For):
            return stmt
    return None


def build_manifest(tree: TranslationUnit) -> tuple[ManifestEntry, ...]:
    entries: dict[int, ManifestEntry] = {}
    counters = {"nest": 0, "plain": 0}

    def record(loop_id: int, span: Optional[Span], mode: str, enclosing: list[int]):
        if loop_id in entries:
            return
        if enclosing:
            nest_id = entries[enclosing[-1]].nest_id
        else:
            nest_id = counters["nest"]
            counters["nest"] += 1
        line = span.line if span else 0
        col = span.col if span else 0
        entries[loop_id] = ManifestEntry(loop_id, nest_id, len(enclosing), line, col, mode)

    def walk_block(stmts, enclosing: list[int]):
        pending: Optional[int] = None  # loop id from a generated pragma line
        for stmt in stmts:
            if isinstance(stmt, OmpParallelFor) and stmt.if_expr is not None:
                lid = _decide_call(stmt.if_expr)
                pending = lid
                continue
            if isinstance(stmt, PreprocLine):
                m = _OPAQUE_DECIDE_RE.search(stmt.text)
                if m and "omp" in stmt.text:
                    pending = int(m.group(1))
                    continue
            if isinstance(stmt, For) and pending is not None:
                record(pending, stmt.span, "ompif", enclosing)
                walk_stmt(stmt.body, enclosing + [pending])
                pending = None
                continue
            pending = None
            walk_stmt(stmt, enclosing)

    def walk_stmt(stmt, enclosing: list[int]):
        if isinstance(stmt, Block):
            walk_block(stmt.stmts, enclosing)
        elif isinstance(stmt, If):
            lid = _decide_call(stmt.cond)
            if lid is not None:
                loop = None
                if isinstance(stmt.then, Block):
                    loop = _first_for(stmt.then.stmts)
                record(lid, loop.span if loop else stmt.span, "duplicate", enclosing)
                inner = enclosing + [lid]
                walk_stmt(stmt.then, inner)
                if stmt.els is not None:
                    walk_stmt(stmt.els, inner)
            else:
                walk_stmt(stmt.then, enclosing)
                if stmt.els is not None:
                    walk_stmt(stmt.els, enclosing)
        elif isinstance(stmt, For):
            if stmt.directive is not None:
                lid = counters["plain"]
                counters["plain"] += 1
                record(lid, stmt.span, "none", enclosing)
                walk_stmt(stmt.body, enclosing + [lid])
            else:
                walk_stmt(stmt.body, enclosing)
        elif isinstance(stmt, While):
            walk_stmt(stmt.body, enclosing)
        elif isinstance(stmt, FunctionDef):
            if stmt.body is not None:
                walk_stmt(stmt.body, enclosing)

    for item in tree.items:
        if not isinstance(item, (Declaration, PreprocLine)):
            walk_stmt(item, [])
    return tuple(entries[k] for k in sorted(entries))


def emit_c(tree: TranslationUnit) -> EmittedUnit:
    """Render a tree to C text plus the manifest of its directive sites."""
    emitter = _Emitter()
    emitter.emit_unit(tree)
    text = "\n".join(emitter.lines)
    if text and not text.endswith("\n"):
        text += "\n"
    return EmittedUnit(text, build_manifest(tree))
