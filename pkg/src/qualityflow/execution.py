"""Client for the out-of-process test runner.

One runner process is spawned per request. The request goes to the runner's
stdin as one canonical JSON document; the response comes back on its stdout:

    request:  {version, source, tests: [{index, raw_assert, call_expr}], timeout_ms}
    response: {version, per_test: [{index, status, error_message, actual_value_repr}]}

The runner enforces the per-test wall-clock timeout itself; this client adds a
whole-request deadline as a safety net and maps crashes to per-test errors.
The runner is a test harness, not a security boundary.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
from dataclasses import dataclass
from typing import Sequence

from .errors import QualityFlowError
from .model import (
    ExecutionResult,
    ExecutionStatus,
    TestCase,
    TestExecution,
)

PROTOCOL_VERSION = "1"
DEFAULT_TIMEOUT_MS = 5000
MIN_TIMEOUT_MS = 100

# Spawn/teardown headroom on top of the per-test budgets.
_REQUEST_GRACE_MS = 10_000


class ExecutionError(QualityFlowError):
    pass


class RunnerNotFound(ExecutionError):
    """The configured runner command cannot be launched."""


class ProtocolError(ExecutionError):
    """The runner exited cleanly but its output is not a valid response."""


@dataclass(frozen=True)
class ExecutionRequest:
    source: str
    tests: tuple[TestCase, ...]
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    memory_note: str | None = None  # advisory only; not transmitted

    def __post_init__(self) -> None:
        if not self.tests:
            raise ValueError("execution request needs at least one test")
        if self.timeout_ms < MIN_TIMEOUT_MS:
            raise ValueError(f"timeout_ms must be >= {MIN_TIMEOUT_MS}")


def default_runner_command() -> tuple[str, ...]:
    return (sys.executable, "-m", "qf_runner")


class ExecutionClient:
    """Runs assert tests against candidate source via the runner protocol.

    Shareable across threads; each call spawns its own runner process.
    """

    def __init__(self, runner_command: Sequence[str] | None = None):
        self.runner_command = tuple(runner_command or default_runner_command())

    def run_tests(self, request: ExecutionRequest) -> ExecutionResult:
        document = json.dumps(
            {
                "version": PROTOCOL_VERSION,
                "source": request.source,
                "tests": [
                    {"index": i, "raw_assert": t.raw_assert, "call_expr": t.call_expr}
                    for i, t in enumerate(request.tests)
                ],
                "timeout_ms": request.timeout_ms,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        executable = self.runner_command[0]
        if shutil.which(executable) is None:
            raise RunnerNotFound(f"runner executable {executable!r} not found")
        deadline_s = (len(request.tests) * request.timeout_ms + _REQUEST_GRACE_MS) / 1000
        try:
            process = subprocess.Popen(
                self.runner_command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
            )
        except OSError as exc:
            raise RunnerNotFound(f"cannot launch runner {self.runner_command}: {exc}") from exc
        try:
            stdout, stderr = process.communicate(document, timeout=deadline_s)
        except subprocess.TimeoutExpired:
            process.kill()
            stdout, stderr = process.communicate()
            return self._crash_result(request, "runner exceeded the request deadline")
        parsed = self._try_parse(stdout)
        if parsed is not None:
            return self._fill_missing(request, parsed)
        if process.returncode != 0:
            diagnostic = (stderr or "").strip().splitlines()
            detail = diagnostic[-1] if diagnostic else f"exit code {process.returncode}"
            return self._crash_result(request, f"runner crashed: {detail}")
        raise ProtocolError(
            f"runner produced no parsable response (stdout was {stdout[:200]!r})"
        )

    @staticmethod
    def _try_parse(stdout: str) -> ExecutionResult | None:
        try:
            data = json.loads(stdout)
            per_test = tuple(
                TestExecution(
                    index=entry["index"],
                    status=ExecutionStatus(entry["status"]),
                    error_message=entry.get("error_message", ""),
                    actual_value_repr=entry.get("actual_value_repr"),
                )
                for entry in data["per_test"]
            )
            return ExecutionResult(
                per_test=per_test, runner_version=str(data.get("version", ""))
            )
        except (ValueError, KeyError, TypeError):
            return None

    @staticmethod
    def _crash_result(request: ExecutionRequest, diagnostic: str) -> ExecutionResult:
        per_test = tuple(
            TestExecution(index=i, status=ExecutionStatus.ERROR, error_message=diagnostic)
            for i in range(len(request.tests))
        )
        return ExecutionResult(per_test=per_test, runner_version="")

    @staticmethod
    def _fill_missing(request: ExecutionRequest, result: ExecutionResult) -> ExecutionResult:
        """Mark any test the runner did not report as an error."""
        reported = {t.index: t for t in result.per_test}
        per_test = tuple(
            reported.get(
                i,
                TestExecution(
                    index=i,
                    status=ExecutionStatus.ERROR,
                    error_message="unreported by runner",
                ),
            )
            for i in range(len(request.tests))
        )
        return ExecutionResult(per_test=per_test, runner_version=result.runner_version)


def count_triggered(result: ExecutionResult) -> int:
    """Number of tests whose execution produced self-debugging feedback
    (any non-passed status)."""
    return sum(1 for t in result.per_test if t.status is not ExecutionStatus.PASSED)
