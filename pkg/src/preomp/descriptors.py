"""Loop descriptor extraction and whole-tree validation.

A directive may only annotate loops of the canonical counted form
``for (v = e1; v < e2; v++)`` (also ``<=`` and ``v += e3``); anything else is
rejected at the directive site instead of being silently serialised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .diagnostics import Diagnostic
from .nodes import (
    Assign,
    BinOp,
    Block,
    Declaration,
    Directive,
    Expr,
    ExprStmt,
    For,
    FunctionDef,
    Ident,
    If,
    IncDec,
    IntLit,
    Param,
    Return,
    Span,
    TranslationUnit,
    Unary,
    While,
)


class DescriptorError(Exception):
    """An annotated loop does not fit the canonical counted form."""

    def __init__(self, message: str, span: Optional[Span]):
        line = span.line if span else 0
        col = span.col if span else 0
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class LoopDescriptor:
    loop_id: int
    var: str
    init: Expr
    bound: Expr
    comparison: str  # "<" | "<="
    step: Expr
    private: tuple[str, ...]
    shared: tuple[str, ...]
    threshold: Expr
    depth: int
    nest_id: int
    span: Optional[Span]


def iteration_count(init: int, bound: int, step: int, comparison: str = "<") -> int:
    """Trip count of a canonical counted loop, clamped at zero.

    ceil((bound - init) / step) for '<', with an inclusive bound adding one.
    """
    if step <= 0:
        return 0
    distance = bound - init
    if comparison == "<=":
        distance += 1
    if distance <= 0:
        return 0
    return (distance + step - 1) // step


def eval_const_int(expr) -> Optional[int]:
    """Fold an expression to an integer constant; None when not constant."""
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, Unary):
        inner = eval_const_int(expr.operand)
        if inner is None:
            return None
        if expr.op == "-":
            return -inner
        if expr.op == "+":
            return inner
        return None
    if isinstance(expr, BinOp):
        left = eval_const_int(expr.left)
        right = eval_const_int(expr.right)
        if left is None or right is None:
            return None
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if expr.op == "/" and right != 0:
            return int(left / right)
        if expr.op == "%" and right != 0:
            return left - right * int(left / right)
    return None


def static_iteration_count(desc: LoopDescriptor) -> Optional[int]:
    init = eval_const_int(desc.init)
    bound = eval_const_int(desc.bound)
    step = eval_const_int(desc.step)
    if init is None or bound is None or step is None:
        return None
    return iteration_count(init, bound, step, desc.comparison)


def _canonical_parts(loop: For):
    """Return (var, init, bound, comparison, step) or raise DescriptorError."""
    span = loop.span
    if not isinstance(loop.init, Assign) or loop.init.op != "=" or not isinstance(loop.init.target, Ident):
        raise DescriptorError("loop initialiser must assign the induction variable", span)
    var = loop.init.target.name
    cond = loop.cond
    if not isinstance(cond, BinOp) or cond.op not in ("<", "<="):
        raise DescriptorError("loop condition must be a single < or <= comparison", span)
    if not isinstance(cond.left, Ident) or cond.left.name != var:
        raise DescriptorError("loop condition must compare the induction variable", span)
    post = loop.post
    if isinstance(post, IncDec) and post.op == "++" and isinstance(post.target, Ident) and post.target.name == var:
        step: Expr = IntLit("1")
    elif (
        isinstance(post, Assign)
        and post.op == "+="
        and isinstance(post.target, Ident)
        and post.target.name == var
    ):
        step = post.value
        const = eval_const_int(step)
        if const is not None and const <= 0:
            raise DescriptorError("loop step must be positive", span)
    else:
        raise DescriptorError("loop increment must be v++ or v += step", span)
    if _modifies(loop.body, var):
        raise DescriptorError(f"induction variable {var!r} is modified in the loop body", span)
    return var, loop.init.value, cond.right, cond.op, step


def _modifies(node, var: str) -> bool:
    if isinstance(node, Assign):
        if isinstance(node.target, Ident) and node.target.name == var:
            return True
        return _modifies(node.value, var) or _modifies(node.target, var)
    if isinstance(node, IncDec):
        if isinstance(node.target, Ident) and node.target.name == var:
            return True
        return _modifies(node.target, var)
    for child in _children(node):
        if _modifies(child, var):
            return True
    return False


def _children(node):
    if isinstance(node, Block):
        return node.stmts
    if isinstance(node, ExprStmt):
        return [node.expr]
    if isinstance(node, For):
        return [c for c in (node.init, node.cond, node.post, node.body) if c is not None]
    if isinstance(node, While):
        return [node.cond, node.body]
    if isinstance(node, If):
        return [c for c in (node.cond, node.then, node.els) if c is not None]
    if isinstance(node, Return):
        return [node.value] if node.value is not None else []
    if isinstance(node, BinOp):
        return [node.left, node.right]
    if isinstance(node, Unary):
        return [node.operand]
    if isinstance(node, Declaration):
        return [d.init for d in node.declarators if d.init is not None]
    if hasattr(node, "args"):
        return node.args
    if hasattr(node, "base"):
        return [node.base, node.index]
    return []


def _scan(tree: TranslationUnit):
    """Walk directive sites in lexical order, yielding descriptors and errors."""
    descriptors: list[LoopDescriptor] = []
    diagnostics: list[Diagnostic] = []
    next_nest = [0]

    def visit(node, depth: int, nest: Optional[int]):
        if isinstance(node, For) and node.directive is not None:
            directive = node.directive
            if nest is None:
                nest_id = next_nest[0]
                next_nest[0] += 1
                my_depth = 0
            else:
                nest_id = nest
                my_depth = depth
            try:
                var, init, bound, comparison, step = _canonical_parts(node)
            except DescriptorError as err:
                diagnostics.append(
                    Diagnostic("error", err.message, err.span.line if err.span else 0, err.span.col if err.span else 0)
                )
                visit(node.body, my_depth + 1, nest_id)
                return
            descriptors.append(
                LoopDescriptor(
                    loop_id=len(descriptors),
                    var=var,
                    init=init,
                    bound=bound,
                    comparison=comparison,
                    step=step,
                    private=directive.clause_names("private"),
                    shared=directive.clause_names("shared"),
                    threshold=directive.threshold,
                    depth=my_depth,
                    nest_id=nest_id,
                    span=node.span,
                )
            )
            visit(node.body, my_depth + 1, nest_id)
            return
        if isinstance(node, TranslationUnit):
            for item in node.items:
                visit(item, 0, None)
            return
        if isinstance(node, FunctionDef):
            if node.body is not None:
                visit(node.body, 0, None)
            return
        if isinstance(node, (Block, If, While, For)):
            for child in _children(node):
                if not isinstance(child, (int, str)):
                    visit(child, depth, nest)
            return

    visit(tree, 0, None)
    return descriptors, diagnostics


def extract_descriptors(tree: TranslationUnit) -> list[LoopDescriptor]:
    """Descriptors for every directive site, ordered by loop_id (lexical)."""
    descriptors, diagnostics = _scan(tree)
    if diagnostics:
        first = diagnostics[0]
        raise DescriptorError(first.message, Span(first.line, first.col))
    return descriptors


def validate(tree: TranslationUnit) -> list[Diagnostic]:
    """All diagnostics for a parsed unit; no error-severity entries means
    the unit is transpilable (warnings do not block)."""
    diagnostics: list[Diagnostic] = list(getattr(tree, "diagnostics", ()))
    descriptors, form_errors = _scan(tree)
    diagnostics.extend(form_errors)

    for desc in descriptors:
        count = static_iteration_count(desc)
        if count == 0:
            line = desc.span.line if desc.span else 0
            col = desc.span.col if desc.span else 0
            diagnostics.append(Diagnostic("warning", "annotated loop has zero iterations", line, col))

    for func in tree.items:
        if isinstance(func, FunctionDef):
            _check_clause_symbols(func, tree, diagnostics)
    return diagnostics


def _collect_declarations(node, acc: set):
    if isinstance(node, Declaration):
        acc.update(d.name for d in node.declarators)
    for child in _children(node):
        _collect_declarations(child, acc)


def _check_clause_symbols(func: FunctionDef, tree: TranslationUnit, diagnostics: list):
    if func.body is None:
        return
    file_scope = set()
    for item in tree.items:
        if isinstance(item, Declaration):
            file_scope.update(d.name for d in item.declarators)
    visible = file_scope | {p.name for p in func.params}

    def walk(node, scope: set):
        if isinstance(node, Block):
            inner = set(scope)
            for stmt in node.stmts:
                if isinstance(stmt, Declaration):
                    inner.update(d.name for d in stmt.declarators)
                walk(stmt, inner)
            return
        if isinstance(node, For) and node.directive is not None:
            directive = node.directive
            span = directive.span or node.span
            line = span.line if span else 0
            col = span.col if span else 0
            for clause in directive.clauses:
                for name in clause.names:
                    if name not in scope:
                        diagnostics.append(
                            Diagnostic("error", f"clause identifier {name!r} is not declared here", line, col)
                        )
                    else:
                        shadowing: set = set()
                        _collect_declarations(node.body, shadowing)
                        if name in shadowing:
                            diagnostics.append(
                                Diagnostic(
                                    "warning",
                                    f"clause identifier {name!r} is shadowed inside the loop body",
                                    line,
                                    col,
                                )
                            )
            walk(node.body, scope)
            return
        for child in _children(node):
            walk(child, scope)

    walk(func.body, visible)
