"""Semantic comparison of predicted and expected output expressions.

Predicted outputs arrive as source text ("math.pi / 2", "{'a': 1}") and must be
matched against expected-value text that may be written differently
(1.5707963267948966, "{'a':1}"). Both sides are parsed into Python values when
possible; numeric pairs are compared with a relative tolerance, everything else
structurally, and unparsable text degrades to normalized string equality.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from enum import Enum

from .model import ComparisonHint, DEFAULT_REL_TOL

_CONSTANTS = {"pi": math.pi, "e": math.e}
_MAX_NODES = 32
_MAX_EXPONENT = 8
_MAX_SQRT_ARG = 10**6


class ComparisonMethod(str, Enum):
    LITERAL_STRUCTURAL = "literal-structural"
    NUMERIC_CLOSE = "numeric-close"
    STRING_FALLBACK = "string-fallback"


@dataclass(frozen=True)
class ComparisonOutcome:
    equal: bool
    method: ComparisonMethod
    lhs_norm: str
    rhs_norm: str
    rel_tol: float | None = None


class _Unparsable(Exception):
    pass


def _eval_constant(node: ast.AST) -> float:
    """Evaluate a scalar arithmetic expression over recognized constants.

    Allows numbers, pi/e (optionally math-qualified), sqrt of small
    nonnegative numbers, unary +/- and the four arithmetic operators with a
    bounded power. Anything else is unparsable.
    """
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise _Unparsable
        return node.value
    if isinstance(node, ast.Name):
        if node.id in _CONSTANTS:
            return _CONSTANTS[node.id]
        raise _Unparsable
    if isinstance(node, ast.Attribute):
        if (
            isinstance(node.value, ast.Name)
            and node.value.id in ("math", "cmath")
            and node.attr in _CONSTANTS
        ):
            return _CONSTANTS[node.attr]
        raise _Unparsable
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _eval_constant(node.operand)
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.BinOp):
        left = _eval_constant(node.left)
        right = _eval_constant(node.right)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            if right == 0:
                raise _Unparsable
            return left / right
        if isinstance(node.op, ast.Pow):
            if abs(right) > _MAX_EXPONENT:
                raise _Unparsable
            return left**right
        raise _Unparsable
    if isinstance(node, ast.Call):
        func = node.func
        name = None
        if isinstance(func, ast.Name):
            name = func.id
        elif isinstance(func, ast.Attribute) and isinstance(func.value, ast.Name):
            if func.value.id in ("math", "cmath"):
                name = func.attr
        if name == "sqrt" and len(node.args) == 1 and not node.keywords:
            arg = _eval_constant(node.args[0])
            if arg < 0 or arg > _MAX_SQRT_ARG:
                raise _Unparsable
            return math.sqrt(arg)
        raise _Unparsable
    raise _Unparsable


def parse_output_text(text: str):
    """Parse output text into a Python value, or raise when outside the literal domain."""
    stripped = text.strip()
    if not stripped:
        raise _Unparsable
    try:
        return ast.literal_eval(stripped)
    except (ValueError, SyntaxError, MemoryError, RecursionError, TypeError):
        pass
    try:
        tree = ast.parse(stripped, mode="eval")
    except (SyntaxError, ValueError, MemoryError, RecursionError):
        raise _Unparsable from None
    if sum(1 for _ in ast.walk(tree)) > _MAX_NODES:
        raise _Unparsable
    return _eval_constant(tree.body)


def _is_numeric(value) -> bool:
    return isinstance(value, (int, float, complex)) and not isinstance(value, bool)


def numeric_close(a, b, rel_tol: float) -> bool:
    """Symmetric relative closeness: |a-b| <= rel_tol * max(|a|, |b|)."""
    return abs(a - b) <= rel_tol * max(abs(a), abs(b))


def _normalize_string(text: str) -> str:
    stripped = text.strip()
    for quote in ('"""', "'''", '"', "'"):
        if (
            len(stripped) >= 2 * len(quote)
            and stripped.startswith(quote)
            and stripped.endswith(quote)
        ):
            return stripped[len(quote) : -len(quote)]
    return stripped


def compare_outputs(
    predicted: str, expected: str, hint: ComparisonHint | None = None
) -> ComparisonOutcome:
    """Decide whether a predicted output expression matches the expected one.

    Both texts must be nonempty. Unparsable sides never raise; they degrade to
    the string fallback.
    """
    if not predicted.strip() or not expected.strip():
        raise ValueError("compare_outputs requires nonempty expression text")
    rel_tol = hint.rel_tol if hint is not None else DEFAULT_REL_TOL
    try:
        lhs = parse_output_text(predicted)
        rhs = parse_output_text(expected)
    except _Unparsable:
        lhs_norm = _normalize_string(predicted)
        rhs_norm = _normalize_string(expected)
        return ComparisonOutcome(
            equal=lhs_norm == rhs_norm,
            method=ComparisonMethod.STRING_FALLBACK,
            lhs_norm=lhs_norm,
            rhs_norm=rhs_norm,
        )
    if type(lhs) is type(rhs) or not (_is_numeric(lhs) and _is_numeric(rhs)):
        try:
            structurally_equal = bool(lhs == rhs)
        except Exception:
            structurally_equal = False
        if structurally_equal:
            return ComparisonOutcome(
                equal=True,
                method=ComparisonMethod.LITERAL_STRUCTURAL,
                lhs_norm=repr(lhs),
                rhs_norm=repr(rhs),
            )
    if _is_numeric(lhs) and _is_numeric(rhs):
        return ComparisonOutcome(
            equal=numeric_close(lhs, rhs, rel_tol),
            method=ComparisonMethod.NUMERIC_CLOSE,
            lhs_norm=repr(lhs),
            rhs_norm=repr(rhs),
            rel_tol=rel_tol,
        )
    return ComparisonOutcome(
        equal=False,
        method=ComparisonMethod.LITERAL_STRUCTURAL,
        lhs_norm=repr(lhs),
        rhs_norm=repr(rhs),
    )
