"""Protocol-level tests: every case drives `python -m qf_runner` as a real
subprocess, exactly the way clients do."""

import json
import subprocess
import sys
import time

import pytest

RUNNER = (sys.executable, "-m", "qf_runner")

FIRST_DIGIT = "def first_Digit(n):\n    return int(str(n)[0])"

BUGGY_REPLACE_CHAR = (
    "def replace_char(string, old_char, new_char):\n"
    "    return string.replace(old_char, '')"
)

BUGGY_MERGE = (
    "def merge_dictionaries_three(dict1, dict2, dict3):\n"
    "    merged_dict = dict1.copy()\n"
    "    merged_dict.update(dict2)\n"
    "    merged_dict.update(dict3)\n"
    "    return merged_dict"
)
MERGE_CALL = (
    "merge_dictionaries_three({'R': 'Red', 'B': 'Black', 'P': 'Pink'}, "
    "{'G': 'Green', 'W': 'White'}, {'L': 'lavender', 'B': 'Blue'})"
)
MERGE_EXPECTED = (
    "{'W': 'White', 'P': 'Pink', 'B': 'Black', 'R': 'Red', 'G': 'Green', 'L': 'lavender'}"
)


def run_request(source, tests, timeout_ms=5000, config_path=None, raw_stdin=None):
    request = raw_stdin
    if request is None:
        request = json.dumps(
            {
                "version": "1",
                "source": source,
                "tests": [
                    {"index": i, "raw_assert": t[0], "call_expr": t[1]}
                    for i, t in enumerate(tests)
                ],
                "timeout_ms": timeout_ms,
            }
        )
    command = list(RUNNER) + ([str(config_path)] if config_path else [])
    return subprocess.run(command, input=request, capture_output=True, text=True)


def response_of(completed):
    assert completed.returncode == 0, completed.stderr
    return json.loads(completed.stdout)


class TestBasicExecution:
    def test_passing_assert(self):
        completed = run_request(
            FIRST_DIGIT, [("assert first_Digit(123) == 1", "first_Digit(123)")]
        )
        response = response_of(completed)
        assert response["version"] == "1"
        assert response["per_test"][0]["status"] == "passed"
        assert response["per_test"][0]["error_message"] == ""

    def test_failing_assert_reports_actual_value(self):
        completed = run_request(
            BUGGY_REPLACE_CHAR,
            [
                (
                    "assert replace_char('polygon', 'y', 'l') == 'pollgon'",
                    "replace_char('polygon', 'y', 'l')",
                )
            ],
        )
        record = response_of(completed)["per_test"][0]
        assert record["status"] == "failed"
        assert record["actual_value_repr"] == "'polgon'"

    def test_buggy_merge_reports_blue_mapping(self):
        completed = run_request(
            BUGGY_MERGE, [(f"assert {MERGE_CALL} == {MERGE_EXPECTED}", MERGE_CALL)]
        )
        record = response_of(completed)["per_test"][0]
        assert record["status"] == "failed"
        assert "'B': 'Blue'" in record["actual_value_repr"]

    def test_exception_reports_type_message_and_location(self):
        source = "def f(x):\n    return undefined_name + x"
        completed = run_request(source, [("assert f(1) == 1", "f(1)")])
        record = response_of(completed)["per_test"][0]
        assert record["status"] == "error"
        assert "NameError" in record["error_message"]
        assert "undefined_name" in record["error_message"]
        assert "line 2" in record["error_message"]

    def test_syntax_error_in_source(self):
        completed = run_request("def f(:\n    pass", [("assert f() == 1", "f()")])
        record = response_of(completed)["per_test"][0]
        assert record["status"] == "error"
        assert "SyntaxError" in record["error_message"]

    def test_isclose_and_math_are_preloaded(self):
        source = "def half(x):\n    return x / 2"
        completed = run_request(
            source,
            [
                ("assert isclose(half(3), 1.5, rel_tol=0.001)", "half(3)"),
                ("assert math.isclose(half(5), 2.5, rel_tol=0.001)", "half(5)"),
            ],
        )
        statuses = [t["status"] for t in response_of(completed)["per_test"]]
        assert statuses == ["passed", "passed"]

    def test_candidate_prints_do_not_corrupt_the_protocol(self):
        source = (
            "import sys\n"
            "print('noise on stdout')\n"
            "sys.stderr.write('noise on stderr')\n"
            "def f(x):\n"
            "    print('more noise')\n"
            "    return x"
        )
        completed = run_request(source, [("assert f(1) == 1", "f(1)")])
        response = response_of(completed)
        assert response["per_test"][0]["status"] == "passed"

    def test_system_exit_is_contained(self):
        source = "import sys\nsys.exit(7)\ndef f(x):\n    return x"
        completed = run_request(source, [("assert f(1) == 1", "f(1)")])
        record = response_of(completed)["per_test"][0]
        assert record["status"] == "error"
        assert "SystemExit" in record["error_message"]


class TestTimeout:
    def test_infinite_loop_times_out_within_budget_plus_grace(self):
        source = "def spin():\n    while True:\n        pass"
        started = time.monotonic()
        completed = run_request(source, [("assert spin() == 1", "spin()")], timeout_ms=200)
        elapsed = time.monotonic() - started
        record = response_of(completed)["per_test"][0]
        assert record["status"] == "timeout"
        assert elapsed < 1.2

    def test_later_tests_still_run_after_a_timeout(self):
        source = (
            "def spin_if(n):\n"
            "    while n == 0:\n"
            "        pass\n"
            "    return n"
        )
        completed = run_request(
            source,
            [("assert spin_if(0) == 1", "spin_if(0)"), ("assert spin_if(2) == 2", "spin_if(2)")],
            timeout_ms=200,
        )
        statuses = [t["status"] for t in response_of(completed)["per_test"]]
        assert statuses == ["timeout", "passed"]


class TestIsolation:
    STATEFUL = (
        "calls = []\n"
        "def bump():\n"
        "    calls.append(1)\n"
        "    return len(calls)"
    )

    def test_each_test_sees_fresh_state(self):
        tests = [("assert bump() == 1", "bump()")] * 3
        statuses = [
            t["status"] for t in response_of(run_request(self.STATEFUL, tests))["per_test"]
        ]
        assert statuses == ["passed", "passed", "passed"]

    def test_permuting_tests_permutes_results_identically(self):
        tests = [
            ("assert bump() == 1", "bump()"),
            ("assert bump() == 2", "bump()"),
            ("assert bump() == 0", "bump()"),
        ]
        forward = response_of(run_request(self.STATEFUL, tests))["per_test"]
        backward = response_of(run_request(self.STATEFUL, list(reversed(tests))))["per_test"]
        by_assert_forward = {tests[t["index"]][0]: t["status"] for t in forward}
        reversed_tests = list(reversed(tests))
        by_assert_backward = {reversed_tests[t["index"]][0]: t["status"] for t in backward}
        assert by_assert_forward == by_assert_backward
        assert by_assert_forward["assert bump() == 1"] == "passed"
        assert by_assert_forward["assert bump() == 2"] == "failed"

    def test_deterministic_for_pure_programs(self):
        tests = [
            ("assert first_Digit(123) == 1", "first_Digit(123)"),
            ("assert first_Digit(99) == 1", "first_Digit(99)"),
        ]
        first = response_of(run_request(FIRST_DIGIT, tests))
        second = response_of(run_request(FIRST_DIGIT, tests))
        assert first == second


class TestTruncation:
    def test_error_message_is_bounded(self):
        source = "def f(x):\n    raise ValueError('x' * 100000)"
        record = response_of(run_request(source, [("assert f(1) == 1", "f(1)")]))[
            "per_test"
        ][0]
        assert record["status"] == "error"
        assert len(record["error_message"].encode()) <= 4096 + 32

    def test_actual_value_is_bounded(self):
        source = "def f(x):\n    return 'y' * 100000"
        record = response_of(run_request(source, [("assert f(1) == 1", "f(1)")]))[
            "per_test"
        ][0]
        assert record["status"] == "failed"
        assert len(record["actual_value_repr"].encode()) <= 4096 + 32

    def test_config_file_overrides_the_bound(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text('{"max_output_bytes": 300}')
        source = "def f(x):\n    return 'y' * 100000"
        record = response_of(
            run_request(source, [("assert f(1) == 1", "f(1)")], config_path=config)
        )["per_test"][0]
        assert len(record["actual_value_repr"].encode()) <= 300 + 32

    def test_config_bound_below_minimum_is_rejected(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text('{"max_output_bytes": 16}')
        completed = run_request(
            "def f(x):\n    return x",
            [("assert f(1) == 1", "f(1)")],
            config_path=config,
        )
        assert completed.returncode != 0
        assert "max_output_bytes" in completed.stderr


class TestProtocolErrors:
    def test_malformed_json_exits_nonzero_with_diagnostic(self):
        completed = run_request(None, None, raw_stdin="this is not json")
        assert completed.returncode != 0
        assert completed.stdout == ""
        assert "JSON" in completed.stderr

    def test_wrong_version_rejected(self):
        request = json.dumps(
            {
                "version": "99",
                "source": "x = 1",
                "tests": [{"index": 0, "raw_assert": "assert True", "call_expr": ""}],
                "timeout_ms": 1000,
            }
        )
        completed = run_request(None, None, raw_stdin=request)
        assert completed.returncode != 0
        assert "version" in completed.stderr

    def test_empty_tests_rejected(self):
        request = json.dumps(
            {"version": "1", "source": "x = 1", "tests": [], "timeout_ms": 1000}
        )
        completed = run_request(None, None, raw_stdin=request)
        assert completed.returncode != 0

    def test_exit_zero_iff_wellformed_response(self):
        good = run_request("def f(x):\n    return x", [("assert f(1) == 1", "f(1)")])
        assert good.returncode == 0 and json.loads(good.stdout)
        bad = run_request(None, None, raw_stdin="{}")
        assert bad.returncode != 0 and bad.stdout == ""


@pytest.mark.parametrize(
    "source",
    [
        "def broken(:",
        "import nonexistent_module_xyz",
        "raise RuntimeError('at import time')",
        "\x00\x01\x02",
        "while True:\n    pass"[:5],
        "class C:\n    def __init__(self):\n        raise ValueError('no')\nc = C()",
    ],
)
def test_response_is_wellformed_for_hostile_sources(source):
    completed = run_request(
        source, [("assert f(1) == 1", "f(1)"), ("assert g() == 2", "g()")]
    )
    response = response_of(completed)
    assert len(response["per_test"]) == 2
    for record in response["per_test"]:
        assert record["status"] in ("passed", "failed", "error", "timeout")
        assert record["status"] == "error"
