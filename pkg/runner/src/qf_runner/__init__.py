"""Sandbox test runner: executes candidate source and assert tests, one
isolated worker process per test, speaking a JSON stdio protocol.

This is a test harness, not a security boundary.
"""

PROTOCOL_VERSION = "1"
DEFAULT_MAX_OUTPUT_BYTES = 4096
MIN_MAX_OUTPUT_BYTES = 256

__version__ = "0.1.0"
