"""Parsers for agent responses: code blocks, assert lines, tags, yes/no tokens.

Every function here is total over arbitrary text: it returns a parsed artifact
or None, never raises on malformed input.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass

_FENCED_BLOCK = re.compile(
    r"```[ \t]*[A-Za-z0-9_+.-]*[ \t]*\r?\n(.*?)```", re.DOTALL
)
_CODE_LINE = re.compile(r"^(def |import |from |class |async def )")
_CODE_CONTINUATION = re.compile(r"^(\s|def |import |from |class |async def |@|#|\)|\])")
_ASSERT_LINE = re.compile(r"^(?:[-*•]\s+|\d+[.)]\s+)?(assert\s.+)$")
_YES_NO = re.compile(r"\b(yes|no)\b", re.IGNORECASE)
_PLACEHOLDER_CALL = re.compile(r"^\s*assert\s+(.*?)\s*==\s*\?\s*$")


def extract_code(text: str) -> str | None:
    """Extract program source from a response.

    The first fenced block wins regardless of its language tag. Without a
    fence, the first contiguous region of code-looking lines (starting at a
    def/import/from line) is taken. Returns None when neither is found.
    """
    match = _FENCED_BLOCK.search(text)
    if match:
        block = match.group(1)
        return block.rstrip("\n") if block.strip() else None
    lines = text.splitlines()
    start = None
    for i, line in enumerate(lines):
        if _CODE_LINE.match(line):
            start = i
            break
    if start is None:
        return None
    end = start + 1
    while end < len(lines):
        line = lines[end]
        if line.strip() == "" or _CODE_CONTINUATION.match(line):
            end += 1
        else:
            break
    region = "\n".join(lines[start:end]).rstrip("\n")
    return region or None


def extract_tagged(text: str, tag: str) -> str | None:
    """Return the content of the first <tag>...</tag> region, if any."""
    match = re.search(rf"<{tag}>(.*?)</{tag}>", text, re.DOTALL)
    return match.group(1).strip() if match else None


@dataclass(frozen=True)
class ParsedAssert:
    call_expr: str
    expected_expr: str
    rel_tol: float | None = None  # set for the isclose form


def _segment(source: str, node: ast.AST) -> str | None:
    try:
        return ast.get_source_segment(source, node)
    except Exception:
        return None


def parse_assert_line(line: str) -> ParsedAssert | None:
    """Parse a single-line assert of the form `assert call == expected` or
    `assert [math.]isclose(call, expected[, rel_tol=...])`.

    Splits on the top-level equality only; bracket and string nesting are
    respected because the line is parsed as Python. Returns None for anything
    else (chained comparisons, unbalanced syntax, multi-statement lines).
    """
    stripped = line.strip()
    if not stripped.startswith("assert"):
        return None
    try:
        tree = ast.parse(stripped)
    except (SyntaxError, ValueError, MemoryError, RecursionError):
        return None
    if len(tree.body) != 1 or not isinstance(tree.body[0], ast.Assert):
        return None
    test = tree.body[0].test
    if isinstance(test, ast.Compare):
        if len(test.ops) != 1 or not isinstance(test.ops[0], ast.Eq):
            return None
        call = _segment(stripped, test.left)
        expected = _segment(stripped, test.comparators[0])
        if not call or not expected:
            return None
        return ParsedAssert(call_expr=call, expected_expr=expected)
    if isinstance(test, ast.Call):
        func = test.func
        is_isclose = (isinstance(func, ast.Name) and func.id == "isclose") or (
            isinstance(func, ast.Attribute)
            and func.attr == "isclose"
            and isinstance(func.value, ast.Name)
        )
        if not is_isclose or len(test.args) < 2:
            return None
        call = _segment(stripped, test.args[0])
        expected = _segment(stripped, test.args[1])
        if not call or not expected:
            return None
        rel_tol = None
        for keyword in test.keywords:
            if keyword.arg == "rel_tol" and isinstance(keyword.value, ast.Constant):
                value = keyword.value.value
                if isinstance(value, (int, float)) and value > 0:
                    rel_tol = float(value)
        return ParsedAssert(call_expr=call, expected_expr=expected, rel_tol=rel_tol or 0.001)
    return None


def iter_assert_lines(text: str) -> list[str]:
    """Collect assert-looking lines from a response, stripping list bullets
    and surrounding backticks."""
    found = []
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("`") and line.endswith("`"):
            line = line.strip("`").strip()
        match = _ASSERT_LINE.match(line)
        if match:
            found.append(match.group(1).rstrip())
    return found


def last_assert(text: str) -> ParsedAssert | None:
    """Parse the last parsable assert line in a response."""
    for line in reversed(iter_assert_lines(text)):
        parsed = parse_assert_line(line)
        if parsed is not None:
            return parsed
    return None


def normalize_expr(text: str) -> str | None:
    """Normalize an expression's text through a parse/unparse round trip."""
    try:
        return ast.unparse(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, MemoryError, RecursionError, AttributeError):
        return None


def first_yes_no(text: str) -> bool | None:
    """Return True/False for the first standalone yes/no token, else None."""
    match = _YES_NO.search(text)
    if match is None:
        return None
    return match.group(1).lower() == "yes"


def call_from_skeleton(line: str) -> str | None:
    """Extract the call expression from an `assert <call> == ?` skeleton."""
    match = _PLACEHOLDER_CALL.match(line.strip())
    return match.group(1) if match else None
