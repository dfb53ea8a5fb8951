"""Quality checkers: the code quality checker (imagined execution, real
execution of visible tests, and a plain yes/no critic) and the test quality
checker.

Imagined execution is a two-turn protocol: the model first reasons step by
step about what a given call returns, then completes the test case so the
predicted value can be parsed and compared against the expected one. The test
quality checker runs the same protocol from the problem statement alone; the
candidate program is never part of its prompt, because an unverified program
cannot be trusted to judge tests.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import parsing
from .comparator import compare_outputs
from .errors import BenchmarkRuleError
from .execution import ExecutionClient, ExecutionRequest
from .gateway import CompletionBackend, CompletionRequest, RequestTag
from .model import (
    BenchmarkFlavor,
    CandidateProgram,
    CheckMode,
    ComparisonKind,
    ExecutionStatus,
    Message,
    Problem,
    TestCase,
    TestComparison,
    TokenUsage,
    Verdict,
)
from .recorder import ProgressionRecorder

CQC = "cqc"
TQC = "tqc"

DEFAULT_MAX_TOKENS = 4096


@dataclass(frozen=True)
class ImaginedExchange:
    """The two turns of one imagined execution, plus what was parsed out."""

    turn1_prompt: str
    turn1_response: str
    turn2_prompt: str
    turn2_response: str
    extracted_assert: str | None
    predicted_expr: str | None
    usage: TokenUsage
    transcript_ref: str


def _test_skeleton(test: TestCase) -> str:
    if test.hint.kind is ComparisonKind.NUMERIC_CLOSE:
        return f"assert math.isclose({test.call_expr}, ?, rel_tol={test.hint.rel_tol})"
    return f"assert {test.call_expr} == ?"


def _turn1_code_prompt(source: str, test: TestCase) -> str:
    if test.hint.kind is ComparisonKind.NUMERIC_CLOSE:
        queried = _test_skeleton(test)
    else:
        queried = test.call_expr
    return (
        "<function>\n"
        "```python\n"
        f"{source}\n"
        "```\n"
        "</function>\n"
        "Think step by step and find the output.\n"
        "<function_call>\n"
        f"{queried}\n"
        "</function_call>"
    )


def _turn1_statement_prompt(statement: str, test: TestCase) -> str:
    if test.hint.kind is ComparisonKind.NUMERIC_CLOSE:
        queried = _test_skeleton(test)
    else:
        queried = test.call_expr
    return (
        "<problem>\n"
        f"{statement}\n"
        "</problem>\n"
        "Think step by step and find the output of the function described by "
        "the problem for the following call.\n"
        "<function_call>\n"
        f"{queried}\n"
        "</function_call>"
    )


def _turn2_prompt(test: TestCase) -> str:
    return (
        "Given the reasoning above, complete the following test case.\n"
        f"{_test_skeleton(test)}\n"
        "Answer in <test_case> ... </test_case> tag."
    )


def _extract_prediction(response: str, test: TestCase) -> tuple[str | None, str | None]:
    """Pull the predicted expression out of a turn-2 response.

    The <test_case> tag is preferred; without it, the last parsable assert
    line anywhere in the response is used. The extracted assert must query
    the same call (modulo formatting), otherwise nothing is extracted.
    """
    candidates: list[parsing.ParsedAssert] = []
    raw_lines: list[str] = []
    tagged = parsing.extract_tagged(response, "test_case")
    if tagged is not None:
        for line in parsing.iter_assert_lines(tagged):
            parsed = parsing.parse_assert_line(line)
            if parsed is not None:
                candidates.append(parsed)
                raw_lines.append(line)
    if not candidates:
        for line in parsing.iter_assert_lines(response):
            parsed = parsing.parse_assert_line(line)
            if parsed is not None:
                candidates.append(parsed)
                raw_lines.append(line)
        candidates = candidates[-1:]
        raw_lines = raw_lines[-1:]
    if not candidates:
        return None, None
    parsed, raw = candidates[0], raw_lines[0]
    queried = parsing.normalize_expr(test.call_expr)
    answered = parsing.normalize_expr(parsed.call_expr)
    if queried is None or answered is None or queried != answered:
        return None, raw
    return parsed.expected_expr, raw


def imagined_execute(
    source: str,
    test: TestCase,
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    *,
    problem_id: str,
    stage: str,
    agent: str = CQC,
    statement: str | None = None,
    temperature: float = 0.0,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> ImaginedExchange:
    """Emulate executing `test.call_expr` and predict the returned value.

    With `statement` set the reasoning is grounded in the problem statement
    instead of program source (the test quality checker's program-blind mode).
    """
    if not test.call_expr.strip():
        raise ValueError("imagined execution needs a nonempty call expression")
    if statement is None:
        turn1 = _turn1_code_prompt(source, test)
    else:
        turn1 = _turn1_statement_prompt(statement, test)
    tag = RequestTag(agent=agent, problem_id=problem_id, stage=stage, variant=0)
    request1 = CompletionRequest(
        messages=(Message("user", turn1),),
        temperature=temperature,
        max_tokens=max_tokens,
        tag=tag,
    )
    response1 = backend.complete(request1)
    recorder.exchange(agent, stage, request1, response1)
    turn2 = _turn2_prompt(test)
    request2 = CompletionRequest(
        messages=(
            Message("user", turn1),
            Message("assistant", response1.content),
            Message("user", turn2),
        ),
        temperature=temperature,
        max_tokens=max_tokens,
        tag=tag,
    )
    response2 = backend.complete(request2)
    ref = recorder.exchange(agent, stage, request2, response2)
    predicted, extracted = _extract_prediction(response2.content, test)
    return ImaginedExchange(
        turn1_prompt=turn1,
        turn1_response=response1.content,
        turn2_prompt=turn2,
        turn2_response=response2.content,
        extracted_assert=extracted,
        predicted_expr=predicted,
        usage=response1.usage + response2.usage,
        transcript_ref=ref,
    )


def _imagined_verdict(
    candidate: CandidateProgram,
    problem: Problem,
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    stage: str,
    max_tokens: int,
) -> Verdict:
    per_test = []
    tokens = TokenUsage()
    for test in problem.visible_tests:
        exchange = imagined_execute(
            candidate.source,
            test,
            backend,
            recorder,
            problem_id=problem.id,
            stage=stage,
            max_tokens=max_tokens,
        )
        tokens = tokens + exchange.usage
        if exchange.predicted_expr is None:
            # An unextractable emulation only forestalls acceptance.
            per_test.append(
                TestComparison(
                    test_id=test.case_id,
                    predicted_output="",
                    expected_output=test.expected_expr,
                    equal=False,
                    transcript_ref=exchange.transcript_ref,
                )
            )
            continue
        outcome = compare_outputs(exchange.predicted_expr, test.expected_expr, test.hint)
        per_test.append(
            TestComparison(
                test_id=test.case_id,
                predicted_output=exchange.predicted_expr,
                expected_output=test.expected_expr,
                equal=outcome.equal,
                transcript_ref=exchange.transcript_ref,
            )
        )
    accept = bool(per_test) and all(c.equal for c in per_test)
    return Verdict(
        accept=accept,
        mode=CheckMode.IMAGINED,
        per_test=tuple(per_test),
        checker_tokens=tokens,
    )


def _python_exec_verdict(
    candidate: CandidateProgram,
    problem: Problem,
    executor: ExecutionClient,
    recorder: ProgressionRecorder,
    stage: str,
    timeout_ms: int,
) -> Verdict:
    result = executor.run_tests(
        ExecutionRequest(
            source=candidate.source,
            tests=problem.visible_tests,
            timeout_ms=timeout_ms,
        )
    )
    recorder.execution(stage, result)
    per_test = tuple(
        TestComparison(
            test_id=problem.visible_tests[record.index].case_id,
            predicted_output=record.actual_value_repr or record.status.value,
            expected_output=problem.visible_tests[record.index].expected_expr,
            equal=record.status is ExecutionStatus.PASSED,
        )
        for record in result.per_test
    )
    accept = bool(per_test) and all(c.equal for c in per_test)
    return Verdict(accept=accept, mode=CheckMode.PYTHON_EXEC, per_test=per_test)


def _yes_no_verdict(
    candidate: CandidateProgram,
    problem: Problem,
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    stage: str,
    max_tokens: int,
) -> Verdict:
    prompt = (
        "<problem>\n"
        f"{problem.statement}\n"
        "</problem>\n"
        "<function>\n"
        "```python\n"
        f"{candidate.source}\n"
        "```\n"
        "</function>\n"
        "<visible_tests>\n"
        + "\n".join(t.raw_assert for t in problem.visible_tests)
        + "\n</visible_tests>\n"
        "Is this program a correct solution to the problem? Answer Yes or No."
    )
    request = CompletionRequest(
        messages=(Message("user", prompt),),
        temperature=0.0,
        max_tokens=max_tokens,
        tag=RequestTag(agent=CQC, problem_id=problem.id, stage=stage, variant=0),
    )
    response = backend.complete(request)
    recorder.exchange(CQC, stage, request, response)
    answer = parsing.first_yes_no(response.content)
    return Verdict(
        accept=answer is True,  # absent both tokens -> reject
        mode=CheckMode.YES_NO,
        checker_tokens=response.usage,
    )


def check_code_quality(
    candidate: CandidateProgram,
    problem: Problem,
    mode: CheckMode,
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    *,
    executor: ExecutionClient | None = None,
    timeout_ms: int = 5000,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> Verdict:
    """Judge a candidate against the visible tests; accept only if every
    check passes."""
    stage = f"p{candidate.progression}:cqc:{candidate.stage.label}"
    if not problem.visible_tests:
        verdict = Verdict(
            accept=False, mode=mode, error="no visible tests; rejected as degenerate"
        )
        recorder.verdict(CQC, stage, verdict)
        return verdict
    if mode is CheckMode.PYTHON_EXEC:
        if problem.flavor is not BenchmarkFlavor.HUMANEVAL:
            raise BenchmarkRuleError(
                "running visible tests is forbidden when they double as "
                f"evaluation tests (problem {problem.id})"
            )
        if executor is None:
            raise ValueError("python-exec checking needs an execution client")
        verdict = _python_exec_verdict(
            candidate, problem, executor, recorder, stage, timeout_ms
        )
    elif mode is CheckMode.IMAGINED:
        verdict = _imagined_verdict(candidate, problem, backend, recorder, stage, max_tokens)
    elif mode is CheckMode.YES_NO:
        verdict = _yes_no_verdict(candidate, problem, backend, recorder, stage, max_tokens)
    else:
        raise ValueError(f"unknown check mode {mode}")
    recorder.verdict(CQC, stage, verdict)
    return verdict


def check_test_quality(
    problem: Problem,
    test: TestCase,
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    *,
    progression: int,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> bool:
    """Accept a synthesized test iff the output predicted from the problem
    statement alone matches the test's proclaimed expected value.

    Tests textually identical to a visible test are ground truth and accepted
    without any backend call. Unextractable predictions reject conservatively.
    """
    if test.origin.value != "synthesized":
        raise ValueError("only synthesized tests go through the test quality checker")
    if any(test.raw_assert == visible.raw_assert for visible in problem.visible_tests):
        return True
    stage = f"p{progression}:tqc"
    exchange = imagined_execute(
        "",
        test,
        backend,
        recorder,
        problem_id=problem.id,
        stage=stage,
        agent=TQC,
        statement=problem.statement,
        max_tokens=max_tokens,
    )
    if exchange.predicted_expr is None:
        return False
    return compare_outputs(exchange.predicted_expr, test.expected_expr, test.hint).equal
