"""Core value types shared by the whole workflow, plus their canonical serialization.

Everything here is an immutable value: safe to share across concurrently
running progressions. The canonical document format is sorted-key, UTF-8,
LF-only JSON so determinism checks can use byte equality.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Any

TRACE_FORMAT = "qf-trace"
RESULTS_FORMAT = "qf-results"
FORMAT_VERSION = 1


def canonical_text(payload: dict[str, Any]) -> str:
    """Render a JSON-able payload as canonical document text.

    Sorted keys, UTF-8 (no ASCII escaping), LF line endings, trailing newline.
    Byte-identical output for equal payloads.
    """
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=1) + "\n"


class BenchmarkFlavor(str, Enum):
    MBPP = "mbpp"  # visible tests double as the evaluation tests
    HUMANEVAL = "humaneval"  # visible tests disjoint from the evaluation tests


class TestOrigin(str, Enum):
    VISIBLE = "visible"
    SYNTHESIZED = "synthesized"


class ComparisonKind(str, Enum):
    EXACT = "exact"
    NUMERIC_CLOSE = "numeric-close"


DEFAULT_REL_TOL = 0.001


@dataclass(frozen=True)
class ComparisonHint:
    kind: ComparisonKind = ComparisonKind.EXACT
    rel_tol: float = DEFAULT_REL_TOL

    def __post_init__(self) -> None:
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


EXACT = ComparisonHint()


@dataclass(frozen=True)
class TestCase:
    """One assert-style check: a call expression and its expected-value expression."""

    call_expr: str
    expected_expr: str
    origin: TestOrigin
    hint: ComparisonHint = EXACT

    def __post_init__(self) -> None:
        if not self.call_expr.strip():
            raise ValueError("call_expr must be nonempty")
        if not self.expected_expr.strip():
            raise ValueError("expected_expr must be nonempty")

    @property
    def raw_assert(self) -> str:
        """The canonical single-line assert this case stands for."""
        if self.hint.kind is ComparisonKind.NUMERIC_CLOSE:
            return (
                f"assert isclose({self.call_expr}, {self.expected_expr}, "
                f"rel_tol={self.hint.rel_tol})"
            )
        return f"assert {self.call_expr} == {self.expected_expr}"

    @property
    def case_id(self) -> str:
        digest = hashlib.sha1(self.raw_assert.encode("utf-8")).hexdigest()
        return digest[:12]


@dataclass(frozen=True)
class Problem:
    """One benchmark task with its visible/evaluation test split."""

    id: str
    statement: str
    visible_tests: tuple[TestCase, ...]
    evaluation_tests: tuple[TestCase, ...]
    canonical_solution: str | None = None
    entry_point: str | None = None
    flavor: BenchmarkFlavor = BenchmarkFlavor.MBPP

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("problem id must be nonempty")
        if not self.visible_tests:
            raise ValueError(f"problem {self.id}: visible tests must be nonempty")


class StageKind(str, Enum):
    GENERATED = "generated"
    DEBUGGED = "debugged"
    CLARIFIED = "clarified"
    REVERTED = "reverted"


@dataclass(frozen=True)
class Stage:
    """A workflow position: generation, a debug epoch, a clarifier attempt, or revert."""

    kind: StageKind
    ordinal: int | None = None  # 1-based debug epoch or clarifier attempt

    def __post_init__(self) -> None:
        needs_ordinal = self.kind in (StageKind.DEBUGGED, StageKind.CLARIFIED)
        if needs_ordinal and (self.ordinal is None or self.ordinal < 1):
            raise ValueError(f"stage {self.kind.value} needs a positive ordinal")
        if not needs_ordinal and self.ordinal is not None:
            raise ValueError(f"stage {self.kind.value} takes no ordinal")

    @classmethod
    def generated(cls) -> "Stage":
        return cls(StageKind.GENERATED)

    @classmethod
    def debugged(cls, epoch: int) -> "Stage":
        return cls(StageKind.DEBUGGED, epoch)

    @classmethod
    def clarified(cls, attempt: int) -> "Stage":
        return cls(StageKind.CLARIFIED, attempt)

    @classmethod
    def reverted(cls) -> "Stage":
        return cls(StageKind.REVERTED)

    @property
    def label(self) -> str:
        if self.ordinal is None:
            return self.kind.value
        return f"{self.kind.value}({self.ordinal})"

    @property
    def order(self) -> int:
        """Total order of workflow positions; later stages sort higher."""
        if self.kind is StageKind.GENERATED:
            return 0
        if self.kind is StageKind.DEBUGGED:
            return self.ordinal or 0
        if self.kind is StageKind.CLARIFIED:
            return 100 + (self.ordinal or 0)
        return 10_000

    @classmethod
    def parse(cls, label: str) -> "Stage":
        if "(" in label:
            kind, _, rest = label.partition("(")
            return cls(StageKind(kind), int(rest.rstrip(")")))
        return cls(StageKind(label))


@dataclass(frozen=True)
class CandidateProgram:
    """One synthesized program plus where in the workflow it came from."""

    source: str
    stage: Stage
    progression: int
    prompt_variant: int
    suspect: bool = False  # set when no code block could be extracted

    def __post_init__(self) -> None:
        if not self.source:
            raise ValueError("candidate source must be nonempty")
        if self.stage.kind is StageKind.REVERTED:
            raise ValueError("a candidate cannot be created at the revert stage")
        if self.progression < 0 or self.prompt_variant < 0:
            raise ValueError("progression and prompt_variant must be nonnegative")


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be nonnegative")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.input_tokens + other.input_tokens,
            self.output_tokens + other.output_tokens,
        )


class CheckMode(str, Enum):
    IMAGINED = "imagined"
    PYTHON_EXEC = "python-exec"
    YES_NO = "yes-no-baseline"


@dataclass(frozen=True)
class TestComparison:
    """One visible test's predicted-versus-expected comparison inside a verdict."""

    test_id: str
    predicted_output: str
    expected_output: str
    equal: bool
    transcript_ref: str = ""


@dataclass(frozen=True)
class Verdict:
    """A quality-check outcome. Acceptance is the conjunction of per-test equality."""

    accept: bool
    mode: CheckMode
    per_test: tuple[TestComparison, ...] = ()
    checker_tokens: TokenUsage = TokenUsage()
    error: str | None = None

    def __post_init__(self) -> None:
        if self.mode is CheckMode.YES_NO:
            if self.per_test:
                raise ValueError("yes/no verdicts carry no per-test records")
            return
        conjunction = bool(self.per_test) and all(c.equal for c in self.per_test)
        if self.accept != conjunction:
            raise ValueError(
                f"verdict violates conjunction law: accept={self.accept} "
                f"but per-test outcomes give {conjunction}"
            )


class ExecutionStatus(str, Enum):
    PASSED = "passed"
    FAILED = "failed"
    ERROR = "error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class TestExecution:
    index: int
    status: ExecutionStatus
    error_message: str = ""
    actual_value_repr: str | None = None

    def __post_init__(self) -> None:
        if self.status is ExecutionStatus.PASSED and self.error_message:
            raise ValueError("passed tests carry no error message")


@dataclass(frozen=True)
class ExecutionResult:
    per_test: tuple[TestExecution, ...]
    runner_version: str = ""


@dataclass(frozen=True)
class Message:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class Exchange:
    """One completion call as recorded in a trace."""

    messages: tuple[Message, ...]
    response: str
    usage: TokenUsage = TokenUsage()
    backend_id: str = ""


class EventKind(str, Enum):
    EXCHANGE = "exchange"
    CANDIDATE = "candidate"
    VERDICT = "verdict"
    EXECUTION = "execution"
    TESTS = "tests"
    FILTER = "filter"
    NOTE = "note"


@dataclass(frozen=True)
class TraceEvent:
    """One step of one problem's run; `seq` numbers events within a progression."""

    seq: int
    progression: int
    agent: str
    stage: str
    kind: EventKind
    exchange: Exchange | None = None
    candidate: CandidateProgram | None = None
    verdict: Verdict | None = None
    execution: ExecutionResult | None = None
    tests: tuple[TestCase, ...] | None = None
    decisions: tuple[tuple[str, bool], ...] | None = None  # (test id, kept)
    note: str | None = None


@dataclass(frozen=True)
class FinalSubmission:
    candidate: CandidateProgram
    stage: Stage  # may be reverted; otherwise equals candidate.stage
    accepted_by_checker: bool
    failed: bool = False


@dataclass(frozen=True)
class WorkflowTrace:
    """The full ordered record of one problem's run."""

    problem_id: str
    config: tuple[tuple[str, Any], ...]  # sorted key/value snapshot
    events: tuple[TraceEvent, ...]
    final: FinalSubmission


def validate_trace(trace: WorkflowTrace) -> None:
    """Raise ValueError when a trace breaks its structural invariants."""
    candidates = [e.candidate for e in trace.events if e.kind is EventKind.CANDIDATE]
    final = trace.final
    if final.candidate not in candidates:
        raise ValueError("final candidate does not appear in the trace events")
    if final.stage.kind is StageKind.REVERTED:
        generated = [
            c
            for c in candidates
            if c is not None
            and c.progression == final.candidate.progression
            and c.stage.kind is StageKind.GENERATED
        ]
        if not generated or generated[0].source != final.candidate.source:
            raise ValueError("reverted submission must equal the generated source")
        if final.accepted_by_checker:
            raise ValueError("a reverted submission cannot be checker-accepted")
    # Verdict conjunction is enforced at construction; re-check deserialized data.
    for event in trace.events:
        if event.verdict is not None:
            Verdict(
                accept=event.verdict.accept,
                mode=event.verdict.mode,
                per_test=event.verdict.per_test,
                checker_tokens=event.verdict.checker_tokens,
                error=event.verdict.error,
            )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_case_to_dict(case: TestCase) -> dict[str, Any]:
    return {
        "call_expr": case.call_expr,
        "expected_expr": case.expected_expr,
        "origin": case.origin.value,
        "hint": {"kind": case.hint.kind.value, "rel_tol": case.hint.rel_tol},
        "raw_assert": case.raw_assert,
        "id": case.case_id,
    }


def test_case_from_dict(data: dict[str, Any]) -> TestCase:
    hint = data.get("hint", {})
    return TestCase(
        call_expr=data["call_expr"],
        expected_expr=data["expected_expr"],
        origin=TestOrigin(data["origin"]),
        hint=ComparisonHint(
            kind=ComparisonKind(hint.get("kind", "exact")),
            rel_tol=hint.get("rel_tol", DEFAULT_REL_TOL),
        ),
    )


def problem_to_dict(problem: Problem) -> dict[str, Any]:
    return {
        "id": problem.id,
        "statement": problem.statement,
        "visible_tests": [test_case_to_dict(t) for t in problem.visible_tests],
        "evaluation_tests": [test_case_to_dict(t) for t in problem.evaluation_tests],
        "canonical_solution": problem.canonical_solution,
        "entry_point": problem.entry_point,
        "flavor": problem.flavor.value,
    }


def problem_from_dict(data: dict[str, Any]) -> Problem:
    return Problem(
        id=data["id"],
        statement=data["statement"],
        visible_tests=tuple(test_case_from_dict(t) for t in data["visible_tests"]),
        evaluation_tests=tuple(
            test_case_from_dict(t) for t in data["evaluation_tests"]
        ),
        canonical_solution=data.get("canonical_solution"),
        entry_point=data.get("entry_point"),
        flavor=BenchmarkFlavor(data.get("flavor", "mbpp")),
    )


def candidate_to_dict(candidate: CandidateProgram) -> dict[str, Any]:
    return {
        "source": candidate.source,
        "stage": candidate.stage.label,
        "progression": candidate.progression,
        "prompt_variant": candidate.prompt_variant,
        "suspect": candidate.suspect,
    }


def candidate_from_dict(data: dict[str, Any]) -> CandidateProgram:
    return CandidateProgram(
        source=data["source"],
        stage=Stage.parse(data["stage"]),
        progression=data["progression"],
        prompt_variant=data["prompt_variant"],
        suspect=data.get("suspect", False),
    )


def usage_to_dict(usage: TokenUsage) -> dict[str, Any]:
    return {"input_tokens": usage.input_tokens, "output_tokens": usage.output_tokens}


def usage_from_dict(data: dict[str, Any]) -> TokenUsage:
    return TokenUsage(data.get("input_tokens", 0), data.get("output_tokens", 0))


def verdict_to_dict(verdict: Verdict) -> dict[str, Any]:
    return {
        "accept": verdict.accept,
        "mode": verdict.mode.value,
        "per_test": [
            {
                "test_id": c.test_id,
                "predicted_output": c.predicted_output,
                "expected_output": c.expected_output,
                "equal": c.equal,
                "transcript_ref": c.transcript_ref,
            }
            for c in verdict.per_test
        ],
        "checker_tokens": usage_to_dict(verdict.checker_tokens),
        "error": verdict.error,
    }


def verdict_from_dict(data: dict[str, Any]) -> Verdict:
    return Verdict(
        accept=data["accept"],
        mode=CheckMode(data["mode"]),
        per_test=tuple(
            TestComparison(
                test_id=c["test_id"],
                predicted_output=c["predicted_output"],
                expected_output=c["expected_output"],
                equal=c["equal"],
                transcript_ref=c.get("transcript_ref", ""),
            )
            for c in data["per_test"]
        ),
        checker_tokens=usage_from_dict(data.get("checker_tokens", {})),
        error=data.get("error"),
    )


def execution_to_dict(result: ExecutionResult) -> dict[str, Any]:
    return {
        "per_test": [
            {
                "index": t.index,
                "status": t.status.value,
                "error_message": t.error_message,
                "actual_value_repr": t.actual_value_repr,
            }
            for t in result.per_test
        ],
        "runner_version": result.runner_version,
    }


def execution_from_dict(data: dict[str, Any]) -> ExecutionResult:
    return ExecutionResult(
        per_test=tuple(
            TestExecution(
                index=t["index"],
                status=ExecutionStatus(t["status"]),
                error_message=t.get("error_message", ""),
                actual_value_repr=t.get("actual_value_repr"),
            )
            for t in data["per_test"]
        ),
        runner_version=data.get("runner_version", ""),
    )


def exchange_to_dict(exchange: Exchange) -> dict[str, Any]:
    return {
        "messages": [{"role": m.role, "content": m.content} for m in exchange.messages],
        "response": exchange.response,
        "usage": usage_to_dict(exchange.usage),
        "backend_id": exchange.backend_id,
    }


def exchange_from_dict(data: dict[str, Any]) -> Exchange:
    return Exchange(
        messages=tuple(Message(m["role"], m["content"]) for m in data["messages"]),
        response=data["response"],
        usage=usage_from_dict(data.get("usage", {})),
        backend_id=data.get("backend_id", ""),
    )


def event_to_dict(event: TraceEvent) -> dict[str, Any]:
    data: dict[str, Any] = {
        "seq": event.seq,
        "progression": event.progression,
        "agent": event.agent,
        "stage": event.stage,
        "kind": event.kind.value,
    }
    if event.exchange is not None:
        data["exchange"] = exchange_to_dict(event.exchange)
    if event.candidate is not None:
        data["candidate"] = candidate_to_dict(event.candidate)
    if event.verdict is not None:
        data["verdict"] = verdict_to_dict(event.verdict)
    if event.execution is not None:
        data["execution"] = execution_to_dict(event.execution)
    if event.tests is not None:
        data["tests"] = [test_case_to_dict(t) for t in event.tests]
    if event.decisions is not None:
        data["decisions"] = [[test_id, kept] for test_id, kept in event.decisions]
    if event.note is not None:
        data["note"] = event.note
    return data


def event_from_dict(data: dict[str, Any]) -> TraceEvent:
    return TraceEvent(
        seq=data["seq"],
        progression=data["progression"],
        agent=data["agent"],
        stage=data["stage"],
        kind=EventKind(data["kind"]),
        exchange=exchange_from_dict(data["exchange"]) if "exchange" in data else None,
        candidate=candidate_from_dict(data["candidate"]) if "candidate" in data else None,
        verdict=verdict_from_dict(data["verdict"]) if "verdict" in data else None,
        execution=execution_from_dict(data["execution"]) if "execution" in data else None,
        tests=tuple(test_case_from_dict(t) for t in data["tests"])
        if "tests" in data
        else None,
        decisions=tuple((d[0], d[1]) for d in data["decisions"])
        if "decisions" in data
        else None,
        note=data.get("note"),
    )


def trace_to_dict(trace: WorkflowTrace) -> dict[str, Any]:
    return {
        "format": TRACE_FORMAT,
        "version": FORMAT_VERSION,
        "problem_id": trace.problem_id,
        "config": [[k, v] for k, v in trace.config],
        "events": [event_to_dict(e) for e in trace.events],
        "final": {
            "candidate": candidate_to_dict(trace.final.candidate),
            "stage": trace.final.stage.label,
            "accepted_by_checker": trace.final.accepted_by_checker,
            "failed": trace.final.failed,
        },
    }


def trace_from_dict(data: dict[str, Any]) -> WorkflowTrace:
    if data.get("format") != TRACE_FORMAT:
        raise ValueError(f"not a trace document: format={data.get('format')!r}")
    final = data["final"]
    return WorkflowTrace(
        problem_id=data["problem_id"],
        config=tuple((k, v) for k, v in data["config"]),
        events=tuple(event_from_dict(e) for e in data["events"]),
        final=FinalSubmission(
            candidate=candidate_from_dict(final["candidate"]),
            stage=Stage.parse(final["stage"]),
            accepted_by_checker=final["accepted_by_checker"],
            failed=final.get("failed", False),
        ),
    )


def serialize_trace(trace: WorkflowTrace) -> str:
    return canonical_text(trace_to_dict(trace))


def deserialize_trace(text: str) -> WorkflowTrace:
    return trace_from_dict(json.loads(text))
