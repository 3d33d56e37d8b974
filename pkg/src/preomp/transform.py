"""Source tree transformation: directive sites become runtime-guarded loops.

Two generation strategies are supported:

* ``duplicate`` — the annotated loop is copied into both branches of an
  ``if (preomp_decide(...))`` statement; the taken branch runs either the
  OpenMP version or the plain serial version, and both branches are
  bracketed with ``preomp_enter``/``preomp_exit`` instrumentation.
* ``ompif`` — the loop appears once under ``#pragma omp parallel for``
  with the decision folded into the pragma's ``if`` clause. The construct
  itself always executes, which is exactly the overhead the cost model's
  ``ompif_serial_region`` switch accounts for.

Transformation is bottom-up, so the guard of a nested site is itself
duplicated by the enclosing site's duplication.
"""

from __future__ import annotations

import copy
import enum
from typing import Optional

from .descriptors import extract_descriptors, validate
from .diagnostics import TransformError, has_errors
from .emit import DECIDE, ENTER, EXIT, RUNTIME_HEADER, _OPAQUE_DECIDE_RE, EmittedUnit, emit_c
from .nodes import (
    BinOp,
    Block,
    Call,
    Directive,
    ExprStmt,
    For,
    FunctionDef,
    If,
    IntLit,
    OmpParallelFor,
    PreprocLine,
    TranslationUnit,
    While,
)


class GenerationMode(str, enum.Enum):
    DUPLICATE = "duplicate"
    OMPIF = "ompif"


def transform(tree: TranslationUnit, mode: GenerationMode | str = GenerationMode.DUPLICATE) -> TranslationUnit:
    """Rewrite every directive site for the given generation mode.

    The input tree must validate without errors; the input is not mutated.
    """
    mode = GenerationMode(mode)
    problems = validate(tree)
    if has_errors(problems):
        first = next(d for d in problems if d.severity == "error")
        raise TransformError(f"{first.line}:{first.col}: {first.message}")

    descriptors = extract_descriptors(tree)
    by_site = iter(descriptors)
    new_tree = copy.deepcopy(tree)

    # Descriptor order is lexical, which is exactly the order a depth-first
    # walk meets the sites in, so a single shared iterator lines them up.
    def rewrite_stmt(stmt):
        if isinstance(stmt, For) and stmt.directive is not None:
            desc = next(by_site)
            stmt.body = _rewrite_block_or_stmt(stmt.body)
            return _guard_loop(stmt, desc, mode)
        if isinstance(stmt, For) or isinstance(stmt, While):
            stmt.body = _rewrite_block_or_stmt(stmt.body)
            return [stmt]
        if isinstance(stmt, If):
            stmt.then = _rewrite_block_or_stmt(stmt.then)
            if stmt.els is not None:
                stmt.els = _rewrite_block_or_stmt(stmt.els)
            return [stmt]
        if isinstance(stmt, Block):
            stmt.stmts = _rewrite_stmts(stmt.stmts)
            return [stmt]
        return [stmt]

    def _rewrite_stmts(stmts):
        out = []
        for stmt in stmts:
            out.extend(rewrite_stmt(stmt))
        return out

    def _rewrite_block_or_stmt(stmt):
        if isinstance(stmt, Block):
            stmt.stmts = _rewrite_stmts(stmt.stmts)
            return stmt
        replacement = rewrite_stmt(stmt)
        if len(replacement) == 1:
            return replacement[0]
        return Block(replacement, synthetic=True)

    def _guard_loop(loop: For, desc, mode: GenerationMode) -> list:
        directive = loop.directive
        loop.directive = None
        decide = Call(
            DECIDE,
            [
                IntLit(str(desc.loop_id)),
                copy.deepcopy(desc.init),
                _bound_argument(desc),
                copy.deepcopy(desc.step),
                copy.deepcopy(desc.threshold),
            ],
        )
        clauses = copy.deepcopy(directive.clauses)
        enter = ExprStmt(Call(ENTER, [IntLit(str(desc.loop_id))]))
        leave = ExprStmt(Call(EXIT, [IntLit(str(desc.loop_id))]))
        if mode is GenerationMode.OMPIF:
            pragma = OmpParallelFor(clauses, if_expr=decide)
            return [copy.deepcopy(enter), pragma, loop, copy.deepcopy(leave)]
        parallel_loop = copy.deepcopy(loop)
        serial_loop = loop
        then = Block([copy.deepcopy(enter), OmpParallelFor(clauses), parallel_loop, copy.deepcopy(leave)])
        els = Block([copy.deepcopy(enter), serial_loop, copy.deepcopy(leave)])
        return [If(decide, then, els, span=loop.span)]

    for item in new_tree.items:
        if isinstance(item, FunctionDef) and item.body is not None:
            item.body.stmts = _rewrite_stmts(item.body.stmts)

    if descriptors:
        new_tree.items.insert(0, PreprocLine(f'#include "{RUNTIME_HEADER}"'))
    return new_tree


def _bound_argument(desc):
    bound = copy.deepcopy(desc.bound)
    if desc.comparison == "<=":
        return BinOp("+", bound, IntLit("1"))
    return bound


# --- instrumentation removal ---


def strip_instrumentation(tree: TranslationUnit, branch: str = "serial") -> TranslationUnit:
    """Undo a transformation: select one branch of every decision wrapper and
    drop all runtime calls, generated pragmas, and the runtime include.

    ``branch`` picks which copy survives from duplicate-mode wrappers
    ("serial" keeps the plain loop, "parallel" the OpenMP one); the result is
    structurally identical either way, which is the point of the guarantee
    that both branches stay equivalent.

    The original ``#pragma preomp`` directives are rebuilt from the decision
    machinery (the clause list lives on the generated OpenMP pragma, the
    threshold expression is the fifth decision-call argument), so the result
    compares equal to the pre-transform tree.
    """
    if branch not in ("serial", "parallel"):
        raise ValueError("branch must be 'serial' or 'parallel'")
    new_tree = copy.deepcopy(tree)
    new_tree.items = [
        item
        for item in new_tree.items
        if not (isinstance(item, PreprocLine) and RUNTIME_HEADER in item.text and "#include" in item.text)
    ]
    for item in new_tree.items:
        if isinstance(item, FunctionDef) and item.body is not None:
            item.body.stmts = _strip_stmts(item.body.stmts, branch)
    return new_tree


def _is_instrumentation_call(stmt) -> bool:
    return (
        isinstance(stmt, ExprStmt)
        and isinstance(stmt.expr, Call)
        and stmt.expr.name in (ENTER, EXIT)
    )


def _is_generated_pragma(stmt) -> bool:
    if isinstance(stmt, OmpParallelFor):
        return True
    if isinstance(stmt, PreprocLine) and _OPAQUE_DECIDE_RE.search(stmt.text) and "omp" in stmt.text:
        return True
    return False


def _decide_condition(stmt) -> bool:
    return isinstance(stmt, If) and isinstance(stmt.cond, Call) and stmt.cond.name == DECIDE


def _directive_from_machinery(pragma: OmpParallelFor, decide: Call) -> Directive:
    return Directive(
        clauses=copy.deepcopy(pragma.clauses),
        threshold=copy.deepcopy(decide.args[4]),
    )


def _strip_stmts(stmts, branch: str) -> list:
    out = []
    pending: Optional[Directive] = None
    for stmt in stmts:
        if _is_instrumentation_call(stmt):
            continue
        if isinstance(stmt, OmpParallelFor):
            # An if-clause marks the ompif splice form; the directive it
            # replaced reattaches to the loop that follows.
            if stmt.if_expr is not None:
                pending = _directive_from_machinery(stmt, stmt.if_expr)
            continue
        if _is_generated_pragma(stmt):
            continue
        stripped = _strip_stmt(stmt, branch)
        if pending is not None and isinstance(stripped, For):
            stripped.directive = pending
        pending = None
        out.append(stripped)
    return out


def _strip_stmt(stmt, branch: str):
    if _decide_condition(stmt):
        chosen = stmt.then if branch == "parallel" else stmt.els
        pragma = _find_pragma(stmt.then)
        loop = _strip_stmt(_find_loop(chosen), branch)
        if isinstance(loop, For):
            loop.directive = _directive_from_machinery(pragma, stmt.cond)
        return loop
    if isinstance(stmt, Block):
        stmt.stmts = _strip_stmts(stmt.stmts, branch)
        return stmt
    if isinstance(stmt, (For, While)):
        stmt.body = _strip_body(stmt.body, branch)
        return stmt
    if isinstance(stmt, If):
        stmt.then = _strip_body(stmt.then, branch)
        if stmt.els is not None:
            stmt.els = _strip_body(stmt.els, branch)
        return stmt
    return stmt


def _strip_body(body, branch: str):
    if isinstance(body, Block):
        body.stmts = _strip_stmts(body.stmts, branch)
        # A block the splice created for a single-statement position unwraps
        # again; user-written braces survive.
        if body.synthetic and len(body.stmts) == 1:
            return body.stmts[0]
        return body
    return _strip_stmt(body, branch)


def _find_pragma(then) -> OmpParallelFor:
    if isinstance(then, Block):
        for inner in then.stmts:
            if isinstance(inner, OmpParallelFor):
                return inner
    raise TransformError("decision wrapper does not carry a generated pragma")


def _find_loop(chosen) -> For:
    if isinstance(chosen, Block):
        for inner in chosen.stmts:
            if isinstance(inner, For):
                return inner
    raise TransformError("decision wrapper does not contain a loop")


def transpile_source(source: str, mode: GenerationMode | str = GenerationMode.DUPLICATE) -> EmittedUnit:
    """Convenience pipeline: parse, transform, emit."""
    from .parser import parse_unit

    return emit_c(transform(parse_unit(source), mode))
