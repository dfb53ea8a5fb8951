"""Deterministic scripted completion backends for tests and fixture recording.

`ScriptedBackend` plays the model's role for a corpus of scenario problems:
each problem's script says which stage each progression gets accepted at,
what source every stage produces, which tests the designer emits, and how the
test checker should vote. Recording its exchanges yields a replay fixture set.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from qualityflow import parsing
from qualityflow.gateway import CompletionRequest, CompletionResponse
from qualityflow.model import TokenUsage

WRONG_VALUE = '"__wrong__"'

_SKELETON_EQ = re.compile(r"^\s*assert\s+(.*?)\s*==\s*\?\s*$", re.MULTILINE)
_SKELETON_CLOSE = re.compile(
    r"^\s*assert\s+(?:math\.)?isclose\(\s*(.*?)\s*,\s*\?\s*,\s*rel_tol=([0-9.eE+-]+)\)\s*$",
    re.MULTILINE,
)


def _usage_for(prompt: str, response: str) -> TokenUsage:
    return TokenUsage(max(1, len(prompt) // 4), max(1, len(response) // 4))


class FunctionBackend:
    """Backend whose responses come from a function of the request."""

    def __init__(self, responder: Callable[[CompletionRequest], str], backend_id: str = "scripted"):
        self.responder = responder
        self.backend_id = backend_id
        self.requests: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        self.requests.append(request)
        content = self.responder(request)
        prompt = "".join(m.content for m in request.messages)
        return CompletionResponse(
            content=content,
            usage=_usage_for(prompt, content),
            backend_id=self.backend_id,
        )


class QueueBackend:
    """Backend that pops canned responses in order."""

    def __init__(self, responses: list[str]):
        self.responses = list(responses)
        self.requests: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        self.requests.append(request)
        if not self.responses:
            raise AssertionError("QueueBackend ran out of scripted responses")
        content = self.responses.pop(0)
        prompt = "".join(m.content for m in request.messages)
        return CompletionResponse(
            content=content, usage=_usage_for(prompt, content), backend_id="queue"
        )


@dataclass
class ProblemScript:
    """Scenario for one corpus problem."""

    pid: str
    statement: str
    fn: str
    visible: tuple[tuple[str, str], ...]  # (call_expr, expected_expr)
    canonical: str
    accept: dict[int, str | None]  # progression -> accepting stage label (None = reject all)
    sources: dict[tuple[int, str], str] = field(default_factory=dict)
    designer_rounds: tuple[tuple[str, ...], ...] = ()
    designed: tuple[tuple[str, bool], ...] = ()  # (assert line, tqc keeps it)
    clarify_texts: dict[int, str] = field(default_factory=dict)
    bare_cqc_answers: bool = False  # answer without the <test_case> tag

    def source_for(self, progression: int, stage_label: str) -> str:
        source = self.sources.get((progression, stage_label))
        if source is not None:
            return source
        return (
            "# stub: *=failed\n"
            f"# auto-filler {self.pid} p{progression} {stage_label}\n"
            f"def {self.fn}(*args):\n"
            "    return None\n"
        )

    def expected_for_call(self, call: str) -> str | None:
        normalized = parsing.normalize_expr(call)
        for visible_call, expected in self.visible:
            if parsing.normalize_expr(visible_call) == normalized:
                return expected
        return None

    def designed_lookup(self, call: str) -> tuple[str, bool] | None:
        normalized = parsing.normalize_expr(call)
        for line, keep in self.designed:
            parsed = parsing.parse_assert_line(line)
            if parsed is None:
                continue
            if parsing.normalize_expr(parsed.call_expr) == normalized:
                return parsed.expected_expr, keep
        return None


def _queried_call(prompt: str) -> tuple[str, str | None]:
    """Extract (call, rel_tol) from a checker turn-2 skeleton."""
    close = _SKELETON_CLOSE.search(prompt)
    if close:
        return close.group(1), close.group(2)
    eq = _SKELETON_EQ.search(prompt)
    if eq:
        return eq.group(1), None
    raise AssertionError(f"no test skeleton found in prompt:\n{prompt}")


def _turn1_call(prompt: str) -> tuple[str, str | None]:
    """Extract (call, rel_tol) from a turn-1 <function_call> region, which
    holds either a bare call or an isclose skeleton."""
    region = re.search(r"<function_call>\n(.*?)\n</function_call>", prompt, re.DOTALL)
    if region is None:
        raise AssertionError(f"no function_call region in prompt:\n{prompt}")
    body = region.group(1).strip()
    close = _SKELETON_CLOSE.search(body)
    if close:
        return close.group(1), close.group(2)
    return body, None


def _wrap_test_case(call: str, value: str, rel_tol: str | None, bare: bool) -> str:
    if rel_tol is not None:
        line = f"assert math.isclose({call}, {value}, rel_tol={rel_tol})"
    else:
        line = f"assert {call} == {value}"
    if bare:
        return f"Based on the reasoning above:\n{line}"
    return f"<test_case>\n{line}\n</test_case>"


class ScriptedBackend:
    """Deterministic model stand-in driven by per-problem scripts."""

    def __init__(self, scripts: dict[str, ProblemScript]):
        self.scripts = scripts
        self.requests: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        self.requests.append(request)
        content = self._respond(request)
        prompt = "".join(m.content for m in request.messages)
        return CompletionResponse(
            content=content, usage=_usage_for(prompt, content), backend_id="scripted"
        )

    def _respond(self, request: CompletionRequest) -> str:
        tag = request.tag
        script = self.scripts[tag.problem_id]
        parts = tag.stage.split(":")
        progression = int(parts[0][1:])
        agent = tag.agent
        if agent == "generator":
            stage_label = parts[1]
            source = script.source_for(progression, stage_label)
            return f"Here is my solution.\n\n```python\n{source}\n```\n"
        if agent == "designer":
            round_index = int(parts[2][1:])
            if script.designer_rounds:
                lines = script.designer_rounds[round_index % len(script.designer_rounds)]
            else:
                lines = tuple(line for line, _ in script.designed)
            return "Here are the tests:\n" + "\n".join(lines) + "\n"
        if agent == "debugger":
            stage_label = parts[1]
            source = script.source_for(progression, stage_label)
            return (
                "Let me analyze the failing tests step by step.\n"
                "The root cause is an incorrect operation; here is the fix.\n\n"
                f"```python\n{source}\n```\n"
            )
        if agent == "clarifier":
            attempt = int(parts[2][1:])
            text = script.clarify_texts.get(
                attempt,
                f"Clarified: {script.statement} (attempt {attempt}: be careful about "
                f"the exact operation requested)",
            )
            if text == "ECHO":
                return script.statement
            return text
        if agent == "cqc":
            return self._checker_response(request, script, progression, parts)
        if agent == "tqc":
            return self._tqc_response(request, script)
        raise AssertionError(f"unexpected agent {agent!r}")

    def _checker_response(
        self,
        request: CompletionRequest,
        script: ProblemScript,
        progression: int,
        parts: list[str],
    ) -> str:
        last = request.messages[-1].content
        candidate_stage = ":".join(parts[2:])
        accepting = script.accept.get(progression) == candidate_stage
        if "Answer Yes or No" in last:
            return "Yes, the program is correct." if accepting else "No, it is not correct."
        if "complete the following test case" not in last:
            call, _ = _turn1_call(last)
            expected = script.expected_for_call(call) if accepting else WRONG_VALUE
            value = expected if expected is not None else WRONG_VALUE
            return (
                "Let me trace through the execution step by step.\n"
                f"1) The call under consideration is {call}.\n"
                "2) Following the function body line by line gives the result.\n"
                f"The output is: {value}"
            )
        call, rel_tol = _queried_call(last)
        expected = script.expected_for_call(call) if accepting else WRONG_VALUE
        value = expected if expected is not None else WRONG_VALUE
        return _wrap_test_case(call, value, rel_tol, script.bare_cqc_answers)

    def _tqc_response(self, request: CompletionRequest, script: ProblemScript) -> str:
        last = request.messages[-1].content
        if "complete the following test case" not in last:
            call, _ = _turn1_call(last)
            return (
                "Reasoning about the problem statement alone, step by step, "
                f"for the call {call}."
            )
        call, rel_tol = _queried_call(last)
        entry = script.designed_lookup(call)
        if entry is None:
            return _wrap_test_case(call, WRONG_VALUE, rel_tol, bare=False)
        expected, keep = entry
        value = expected if keep else WRONG_VALUE
        return _wrap_test_case(call, value, rel_tol, bare=False)
