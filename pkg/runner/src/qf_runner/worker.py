"""Single-test worker: runs one assert against freshly executed source.

The supervisor launches one worker process per test, so every test starts
from an untouched interpreter: no namespace, module, or global state can leak
between tests. Candidate stdout/stderr are redirected to /dev/null at the
file-descriptor level; the result travels through a file path passed on the
command line, which candidate prints cannot corrupt.
"""

from __future__ import annotations

import json
import os
import sys
import traceback

from . import DEFAULT_MAX_OUTPUT_BYTES

# Names every benchmark test may rely on without importing them.
PRELUDE = "import math\nfrom math import isclose\n"


def truncate(text: str, limit: int) -> str:
    if len(text.encode("utf-8", errors="replace")) <= limit:
        return text
    clipped = text.encode("utf-8", errors="replace")[:limit]
    return clipped.decode("utf-8", errors="replace") + "... [truncated]"


def describe_exception(exc: BaseException) -> str:
    """Exception type and message plus the innermost traceback location."""
    detail = f"{type(exc).__name__}: {exc}"
    frames = traceback.extract_tb(exc.__traceback__)
    if frames:
        last = frames[-1]
        detail += f' (File "{last.filename}", line {last.lineno}, in {last.name})'
    return detail


def run_single_test(
    source: str,
    raw_assert: str,
    call_expr: str,
    max_output_bytes: int = DEFAULT_MAX_OUTPUT_BYTES,
) -> dict:
    """Execute the source in a fresh namespace, then the assert.

    Returns a result record with status passed/failed/error; timeouts are the
    supervisor's concern.
    """
    namespace: dict = {"__name__": "__main__"}
    try:
        exec(compile(PRELUDE, "<prelude>", "exec"), namespace)
        exec(compile(source, "<candidate>", "exec"), namespace)
    except KeyboardInterrupt:
        raise
    except BaseException as exc:
        return {
            "status": "error",
            "error_message": truncate(describe_exception(exc), max_output_bytes),
            "actual_value_repr": None,
        }
    try:
        exec(compile(raw_assert, "<test>", "exec"), namespace)
    except KeyboardInterrupt:
        raise
    except AssertionError:
        actual = None
        if call_expr:
            try:
                value = eval(compile(call_expr, "<call>", "eval"), namespace)
                actual = truncate(repr(value), max_output_bytes)
            except KeyboardInterrupt:
                raise
            except BaseException:
                actual = None
        return {
            "status": "failed",
            "error_message": truncate("AssertionError: assertion is false", max_output_bytes),
            "actual_value_repr": actual,
        }
    except BaseException as exc:
        return {
            "status": "error",
            "error_message": truncate(describe_exception(exc), max_output_bytes),
            "actual_value_repr": None,
        }
    return {"status": "passed", "error_message": "", "actual_value_repr": None}


def worker_main(result_path: str) -> int:
    """Entry point for `--worker`: one test payload on stdin, result to a file."""
    payload = json.load(sys.stdin)
    devnull = os.open(os.devnull, os.O_WRONLY)
    os.dup2(devnull, 1)
    os.dup2(devnull, 2)
    result = run_single_test(
        source=payload["source"],
        raw_assert=payload["raw_assert"],
        call_expr=payload.get("call_expr", ""),
        max_output_bytes=payload.get("max_output_bytes", DEFAULT_MAX_OUTPUT_BYTES),
    )
    with open(result_path, "w", encoding="utf-8") as handle:
        json.dump(result, handle)
    return 0
