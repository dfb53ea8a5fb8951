"""The four generative agents: program generator, test designer, self-debugger,
and problem clarifier.

Prompt builders are pure functions of their inputs, which is what makes replay
keying sound. Parsers never raise on arbitrary response text.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import parsing
from .gateway import (
    CompletionBackend,
    CompletionRequest,
    CompletionResponse,
    RequestTag,
)
from .model import (
    CandidateProgram,
    ComparisonHint,
    ComparisonKind,
    ExecutionResult,
    ExecutionStatus,
    Message,
    Problem,
    Stage,
    TestCase,
    TestOrigin,
)
from .recorder import ProgressionRecorder
from .templates import PromptVariant

GENERATOR = "generator"
DESIGNER = "designer"
DEBUGGER = "debugger"
CLARIFIER = "clarifier"

DEFAULT_MAX_TOKENS = 4096


@dataclass(frozen=True)
class FeedbackEntry:
    test_id: str
    status: ExecutionStatus  # passed | failed | error (timeouts map to error)
    error_message: str = ""
    actual_value: str | None = None

    def __post_init__(self) -> None:
        if self.status is ExecutionStatus.PASSED and self.error_message:
            raise ValueError("passed feedback entries carry no error message")
        if self.status is ExecutionStatus.ERROR and not self.error_message:
            raise ValueError("error feedback entries need an error message")
        if self.status is ExecutionStatus.TIMEOUT:
            raise ValueError("timeouts are reported as errors in feedback")


@dataclass(frozen=True)
class DebugFeedback:
    per_test: tuple[FeedbackEntry, ...]

    @property
    def non_passed(self) -> tuple[FeedbackEntry, ...]:
        return tuple(e for e in self.per_test if e.status is not ExecutionStatus.PASSED)


def feedback_from_execution(
    result: ExecutionResult, tests: tuple[TestCase, ...]
) -> DebugFeedback:
    """Convert an execution result into debugger feedback, keyed by test id."""
    entries = []
    for record in result.per_test:
        test = tests[record.index]
        status = record.status
        message = record.error_message
        if status is ExecutionStatus.TIMEOUT:
            status = ExecutionStatus.ERROR
            message = message or "execution timed out"
        if status is ExecutionStatus.ERROR and not message:
            message = "unknown execution error"
        entries.append(
            FeedbackEntry(
                test_id=test.case_id,
                status=status,
                error_message=message if status is not ExecutionStatus.PASSED else "",
                actual_value=record.actual_value_repr,
            )
        )
    return DebugFeedback(per_test=tuple(entries))


@dataclass(frozen=True)
class ClarifiedProblem:
    original: str  # problem id
    clarified_statement: str
    context_digest: str


@dataclass(frozen=True)
class TestDesignOutcome:
    tests: tuple[TestCase, ...]
    parsed: int
    dropped_unparsable: int
    dropped_duplicate: int
    dropped_visible: int

    @property
    def summary(self) -> str:
        return (
            f"designed {len(self.tests)} tests "
            f"(parsed {self.parsed}, dropped {self.dropped_unparsable} unparsable, "
            f"{self.dropped_duplicate} duplicate, {self.dropped_visible} visible)"
        )


def format_visible_tests(problem: Problem) -> str:
    return "\n".join(t.raw_assert for t in problem.visible_tests)


def format_feedback(feedback: DebugFeedback) -> str:
    lines = []
    for entry in feedback.non_passed:
        line = f"- test {entry.test_id}: {entry.status.value}"
        if entry.error_message:
            line += f": {entry.error_message}"
        if entry.actual_value is not None:
            line += f" (actual value: {entry.actual_value})"
        lines.append(line)
    return "\n".join(lines)


def _complete(
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    agent: str,
    stage: str,
    problem_id: str,
    variant: int,
    prompt: str,
    temperature: float,
    max_tokens: int,
) -> CompletionResponse:
    request = CompletionRequest(
        messages=(Message("user", prompt),),
        temperature=temperature,
        max_tokens=max_tokens,
        tag=RequestTag(agent=agent, problem_id=problem_id, stage=stage, variant=variant),
    )
    response = backend.complete(request)
    recorder.exchange(agent, stage, request, response)
    return response


def _source_from_response(content: str, fallback: str | None) -> tuple[str, bool]:
    """Extract code from a response; fall back and flag when none is found."""
    code = parsing.extract_code(content)
    if code is not None:
        return code, False
    if fallback is not None:
        return fallback, True
    return (content if content.strip() else "# empty response"), True


def generate_program(
    problem: Problem,
    variant: PromptVariant,
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    *,
    progression: int,
    stage: Stage | None = None,
    clarified: ClarifiedProblem | None = None,
    prior_source: str | None = None,
    temperature: float = 0.0,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> CandidateProgram:
    """Run the program generator once and extract the candidate source.

    With a `clarified` problem the clarified statement replaces the original
    one and the prompt asks for a different implementation than `prior_source`.
    """
    if clarified is None:
        if variant.role != "generator":
            raise ValueError(f"expected a generator variant, got {variant.role}")
        prompt = variant.render(
            {"statement": problem.statement, "visible_tests": format_visible_tests(problem)}
        )
        stage = stage or Stage.generated()
    else:
        if variant.role != "regenerator":
            raise ValueError(f"expected a regenerator variant, got {variant.role}")
        if stage is None or stage.kind.value != "clarified":
            raise ValueError("clarified generation needs a clarified stage")
        prompt = variant.render(
            {
                "clarified_statement": clarified.clarified_statement,
                "visible_tests": format_visible_tests(problem),
                "code": prior_source or "",
            }
        )
    stage_tag = f"p{progression}:{stage.label}"
    response = _complete(
        backend,
        recorder,
        GENERATOR,
        stage_tag,
        problem.id,
        variant.index,
        prompt,
        temperature,
        max_tokens,
    )
    source, suspect = _source_from_response(response.content, fallback=None)
    candidate = CandidateProgram(
        source=source,
        stage=stage,
        progression=progression,
        prompt_variant=variant.index,
        suspect=suspect,
    )
    if suspect:
        recorder.note(GENERATOR, stage_tag, "no code block extracted; raw response kept")
    recorder.candidate(GENERATOR, candidate)
    return candidate


def design_tests(
    problem: Problem,
    rounds: int,
    batch: int,
    variants: tuple[PromptVariant, ...],
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    *,
    progression: int,
    temperature: float = 0.1,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> TestDesignOutcome:
    """Synthesize up to rounds*batch tests, then deduplicate and drop junk.

    Per round at most `batch` assert-looking lines are considered; unparsable
    lines and duplicates are counted, and tests textually identical to a
    visible test are discarded.
    """
    if rounds < 1 or batch < 1:
        raise ValueError("rounds and batch must be >= 1")
    visible_asserts = {t.raw_assert for t in problem.visible_tests}
    seen: set[str] = set()
    kept: list[TestCase] = []
    parsed_total = 0
    dropped_unparsable = 0
    dropped_duplicate = 0
    dropped_visible = 0
    for round_index in range(rounds):
        variant = variants[round_index % len(variants)]
        prompt = variant.render(
            {
                "statement": problem.statement,
                "visible_tests": format_visible_tests(problem),
                "batch": str(batch),
            }
        )
        response = _complete(
            backend,
            recorder,
            DESIGNER,
            f"p{progression}:design:r{round_index}",
            problem.id,
            variant.index,
            prompt,
            temperature,
            max_tokens,
        )
        for line in parsing.iter_assert_lines(response.content)[:batch]:
            parsed = parsing.parse_assert_line(line)
            if parsed is None:
                dropped_unparsable += 1
                continue
            parsed_total += 1
            hint = ComparisonHint()
            if parsed.rel_tol is not None:
                hint = ComparisonHint(ComparisonKind.NUMERIC_CLOSE, parsed.rel_tol)
            case = TestCase(
                call_expr=parsed.call_expr,
                expected_expr=parsed.expected_expr,
                origin=TestOrigin.SYNTHESIZED,
                hint=hint,
            )
            if case.raw_assert in visible_asserts:
                dropped_visible += 1
                continue
            if case.raw_assert in seen:
                dropped_duplicate += 1
                continue
            seen.add(case.raw_assert)
            kept.append(case)
    outcome = TestDesignOutcome(
        tests=tuple(kept[: rounds * batch]),
        parsed=parsed_total,
        dropped_unparsable=dropped_unparsable,
        dropped_duplicate=dropped_duplicate,
        dropped_visible=dropped_visible,
    )
    recorder.tests(f"p{progression}:design", outcome.tests, outcome.summary)
    return outcome


def self_debug(
    problem: Problem,
    candidate: CandidateProgram,
    feedback: DebugFeedback,
    variant: PromptVariant,
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    *,
    progression: int,
    epoch: int,
    temperature: float = 0.0,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> CandidateProgram:
    """One self-debugging epoch: reason about the failures, then revise.

    Callers must not invoke this with all-passed feedback; with nothing
    triggered there is nothing to debug.
    """
    if variant.role != "debugger":
        raise ValueError(f"expected a debugger variant, got {variant.role}")
    if not feedback.non_passed:
        raise ValueError("self_debug requires at least one non-passed feedback entry")
    prompt = variant.render(
        {
            "statement": problem.statement,
            "code": candidate.source,
            "feedback": format_feedback(feedback),
        }
    )
    stage = Stage.debugged(epoch)
    stage_tag = f"p{progression}:{stage.label}"
    response = _complete(
        backend,
        recorder,
        DEBUGGER,
        stage_tag,
        problem.id,
        variant.index,
        prompt,
        temperature,
        max_tokens,
    )
    source, suspect = _source_from_response(response.content, fallback=candidate.source)
    debugged = CandidateProgram(
        source=source,
        stage=stage,
        progression=progression,
        prompt_variant=variant.index,
        suspect=suspect,
    )
    if suspect:
        recorder.note(DEBUGGER, stage_tag, "no code block extracted; previous source kept")
    recorder.candidate(DEBUGGER, debugged)
    return debugged


def clarify(
    problem: Problem,
    context_digest: str,
    variant: PromptVariant,
    backend: CompletionBackend,
    recorder: ProgressionRecorder,
    *,
    progression: int,
    attempt: int,
    temperature: float = 0.0,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> ClarifiedProblem | None:
    """Ask the clarifier to restate the problem given the trajectory so far.

    Returns None on an empty clarification (blank response, or a response
    that just echoes the original statement); the attempt still counts
    against the budget.
    """
    if variant.role != "clarifier":
        raise ValueError(f"expected a clarifier variant, got {variant.role}")
    prompt = variant.render(
        {"statement": problem.statement, "context_digest": context_digest}
    )
    stage_tag = f"p{progression}:clarify:a{attempt}"
    response = _complete(
        backend,
        recorder,
        CLARIFIER,
        stage_tag,
        problem.id,
        variant.index,
        prompt,
        temperature,
        max_tokens,
    )
    statement = response.content.strip()
    if not statement or statement == problem.statement.strip():
        recorder.note(CLARIFIER, stage_tag, "empty clarification; attempt skipped")
        return None
    return ClarifiedProblem(
        original=problem.id,
        clarified_statement=statement,
        context_digest=context_digest,
    )
