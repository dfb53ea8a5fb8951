"""Supervisor: reads one request document from stdin, runs every test in its
own timeout-supervised worker process, and writes one response document to
stdout.

    request:  {version, source, tests: [{index, raw_assert, call_expr}], timeout_ms}
    response: {version, per_test: [{index, status, error_message, actual_value_repr}]}

Exit code 0 iff a well-formed response was emitted; malformed input produces
a diagnostic on stderr and a nonzero exit.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import tempfile
from dataclasses import dataclass

from . import DEFAULT_MAX_OUTPUT_BYTES, MIN_MAX_OUTPUT_BYTES, PROTOCOL_VERSION
from .worker import truncate, worker_main

# Interpreter startup allowance on top of the per-test budget; the combined
# detection latency stays well inside the client's +1s grace window.
_SPAWN_ALLOWANCE_MS = 500


@dataclass(frozen=True)
class RunnerConfig:
    version: str = PROTOCOL_VERSION
    max_output_bytes: int = DEFAULT_MAX_OUTPUT_BYTES

    def __post_init__(self) -> None:
        if self.max_output_bytes < MIN_MAX_OUTPUT_BYTES:
            raise ValueError(f"max_output_bytes must be >= {MIN_MAX_OUTPUT_BYTES}")


class RequestError(Exception):
    pass


def load_config(path: str | None) -> RunnerConfig:
    if path is None:
        return RunnerConfig()
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, ValueError) as exc:
        raise RequestError(f"unreadable config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise RequestError(f"config file {path} must hold a JSON object")
    try:
        return RunnerConfig(
            max_output_bytes=int(data.get("max_output_bytes", DEFAULT_MAX_OUTPUT_BYTES))
        )
    except (TypeError, ValueError) as exc:
        raise RequestError(f"invalid config: {exc}") from exc


def parse_request(text: str) -> dict:
    try:
        request = json.loads(text)
    except ValueError as exc:
        raise RequestError(f"request is not valid JSON: {exc}") from exc
    if not isinstance(request, dict):
        raise RequestError("request must be a JSON object")
    if str(request.get("version")) != PROTOCOL_VERSION:
        raise RequestError(
            f"unsupported protocol version {request.get('version')!r}; "
            f"this runner speaks {PROTOCOL_VERSION}"
        )
    for field_name in ("source", "tests", "timeout_ms"):
        if field_name not in request:
            raise RequestError(f"request is missing {field_name!r}")
    if not isinstance(request["tests"], list) or not request["tests"]:
        raise RequestError("request needs a nonempty tests list")
    for test in request["tests"]:
        if not isinstance(test, dict) or "index" not in test or "raw_assert" not in test:
            raise RequestError("each test needs index and raw_assert")
    return request


def run_supervised(
    source: str, test: dict, timeout_ms: int, config: RunnerConfig
) -> dict:
    """Run one test in a fresh worker process under a wall-clock timeout."""
    payload = json.dumps(
        {
            "source": source,
            "raw_assert": test["raw_assert"],
            "call_expr": test.get("call_expr", ""),
            "max_output_bytes": config.max_output_bytes,
        }
    )
    fd, result_path = tempfile.mkstemp(prefix="qf-runner-", suffix=".json")
    os.close(fd)
    try:
        process = subprocess.Popen(
            [sys.executable, "-m", "qf_runner", "--worker", result_path],
            stdin=subprocess.PIPE,
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
            text=True,
        )
        try:
            process.communicate(payload, timeout=(timeout_ms + _SPAWN_ALLOWANCE_MS) / 1000)
        except subprocess.TimeoutExpired:
            process.kill()
            process.wait()
            return {
                "index": test["index"],
                "status": "timeout",
                "error_message": truncate(
                    f"wall-clock timeout after {timeout_ms} ms", config.max_output_bytes
                ),
                "actual_value_repr": None,
            }
        try:
            with open(result_path, encoding="utf-8") as handle:
                result = json.load(handle)
            return {
                "index": test["index"],
                "status": result["status"],
                "error_message": result.get("error_message", ""),
                "actual_value_repr": result.get("actual_value_repr"),
            }
        except (OSError, ValueError, KeyError):
            return {
                "index": test["index"],
                "status": "error",
                "error_message": truncate(
                    f"worker produced no result (exit code {process.returncode})",
                    config.max_output_bytes,
                ),
                "actual_value_repr": None,
            }
    finally:
        try:
            os.unlink(result_path)
        except OSError:
            pass


def execute_request(text: str, config: RunnerConfig) -> str:
    """Turn one request document into one response document."""
    request = parse_request(text)
    per_test = [
        run_supervised(request["source"], test, int(request["timeout_ms"]), config)
        for test in request["tests"]
    ]
    return json.dumps(
        {"version": PROTOCOL_VERSION, "per_test": per_test}, sort_keys=True
    )


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "--worker":
        if len(argv) != 2:
            print("usage: qf-runner --worker RESULT_PATH", file=sys.stderr)
            return 2
        return worker_main(argv[1])
    if len(argv) > 1:
        print("usage: qf-runner [CONFIG_PATH]", file=sys.stderr)
        return 2
    try:
        config = load_config(argv[0] if argv else None)
        response = execute_request(sys.stdin.read(), config)
    except (RequestError, ValueError) as exc:
        print(f"qf-runner: {exc}", file=sys.stderr)
        return 2
    print(response)
    return 0


if __name__ == "__main__":
    sys.exit(main())
