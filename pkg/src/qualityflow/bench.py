"""Benchmark loading, ground-truth labeling, pass@k, checker confusion
statistics, and token accounting.

Ground truth comes exclusively from the sandbox: candidates are labeled by
executing the hidden evaluation tests, synthesized tests by executing them
against the benchmark's canonical solution. No checker output ever feeds a
label.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from . import parsing
from .errors import QualityFlowError
from .execution import ExecutionClient, ExecutionRequest
from .model import (
    RESULTS_FORMAT,
    FORMAT_VERSION,
    BenchmarkFlavor,
    CandidateProgram,
    ComparisonHint,
    ComparisonKind,
    ExecutionStatus,
    Problem,
    Stage,
    TestCase,
    TestOrigin,
    WorkflowTrace,
    canonical_text,
)
from .engine import PasskPolicy

CHECKER_AGENTS = ("cqc", "tqc")


class BenchmarkError(QualityFlowError):
    pass


class MalformedLine(BenchmarkError):
    def __init__(self, path: str, line_number: int, detail: str):
        super().__init__(f"{path}:{line_number}: {detail}")
        self.line_number = line_number


class MissingField(BenchmarkError):
    pass


class EmptyVisibleTests(BenchmarkError):
    pass


def _parse_benchmark_assert(line: str, origin: TestOrigin) -> TestCase | None:
    """Parse a benchmark assert, tolerating bare boolean asserts."""
    parsed = parsing.parse_assert_line(line)
    if parsed is not None:
        hint = ComparisonHint()
        if parsed.rel_tol is not None:
            hint = ComparisonHint(ComparisonKind.NUMERIC_CLOSE, parsed.rel_tol)
        return TestCase(
            call_expr=parsed.call_expr,
            expected_expr=parsed.expected_expr,
            origin=origin,
            hint=hint,
        )
    stripped = line.strip()
    if not stripped.startswith("assert "):
        return None
    body = stripped[len("assert ") :].strip()
    if not body:
        return None
    expected = "True"
    if body.startswith("not "):
        body, expected = body[len("not ") :].strip(), "False"
    if parsing.normalize_expr(body) is None or "==" in body:
        return None
    return TestCase(call_expr=body, expected_expr=expected, origin=origin)


def _iter_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    path = Path(path)
    if not path.is_file():
        raise BenchmarkError(f"benchmark file {path} does not exist")
    with path.open(encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except ValueError as exc:
                raise MalformedLine(str(path), number, f"invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise MalformedLine(str(path), number, "record is not an object")
            yield number, record


def _require(record: dict, field_name: str, path: str, number: int):
    if field_name not in record:
        raise MissingField(f"{path}:{number}: missing field {field_name!r}")
    return record[field_name]


def _load_mbpp(path: str | Path) -> list[Problem]:
    problems = []
    for number, record in _iter_jsonl(path):
        task_id = str(_require(record, "task_id", str(path), number))
        text = _require(record, "text", str(path), number)
        code = record.get("code")
        test_list = _require(record, "test_list", str(path), number)
        tests = []
        for line in test_list:
            case = _parse_benchmark_assert(line, TestOrigin.VISIBLE)
            if case is None:
                raise MalformedLine(str(path), number, f"unparsable test {line!r}")
            tests.append(case)
        if not tests:
            raise EmptyVisibleTests(f"{path}:{number}: task {task_id} has no visible tests")
        evaluation = list(tests)
        for line in record.get("challenge_test_list", []):
            case = _parse_benchmark_assert(line, TestOrigin.VISIBLE)
            if case is not None:
                evaluation.append(case)
        problems.append(
            Problem(
                id=task_id,
                statement=text,
                visible_tests=tuple(tests),
                evaluation_tests=tuple(evaluation),
                canonical_solution=code,
                entry_point=None,
                flavor=BenchmarkFlavor.MBPP,
            )
        )
    return problems


_DOCTEST_CALL = re.compile(r"^\s*>>>\s+(.*)$")


def _visible_from_prompt(prompt: str) -> list[TestCase]:
    """Pull example tests out of a docstring: `>>> call` / result pairs and
    explicit assert lines."""
    tests: list[TestCase] = []
    lines = prompt.splitlines()
    for i, line in enumerate(lines):
        match = _DOCTEST_CALL.match(line)
        if match:
            call = match.group(1).strip()
            if i + 1 >= len(lines):
                continue
            result = lines[i + 1].strip()
            if not result or result.startswith(">>>"):
                continue
            if parsing.normalize_expr(call) is None:
                continue
            if parsing.normalize_expr(result) is None:
                continue
            tests.append(
                TestCase(call_expr=call, expected_expr=result, origin=TestOrigin.VISIBLE)
            )
            continue
        stripped = line.strip()
        if stripped.startswith("assert "):
            case = _parse_benchmark_assert(stripped, TestOrigin.VISIBLE)
            if case is not None:
                tests.append(case)
    return tests


def _evaluation_from_check(test_source: str, entry_point: str) -> list[TestCase]:
    """Turn a check-function test block into concrete test cases by
    substituting the entry point for the candidate parameter."""
    tests = []
    for line in test_source.splitlines():
        stripped = line.strip()
        if not stripped.startswith("assert "):
            continue
        concrete = re.sub(r"\bcandidate\b", entry_point, stripped)
        case = _parse_benchmark_assert(concrete, TestOrigin.VISIBLE)
        if case is not None:
            tests.append(case)
    return tests


def _load_humaneval(path: str | Path) -> list[Problem]:
    problems = []
    for number, record in _iter_jsonl(path):
        task_id = str(_require(record, "task_id", str(path), number))
        prompt = _require(record, "prompt", str(path), number)
        entry_point = _require(record, "entry_point", str(path), number)
        test_source = _require(record, "test", str(path), number)
        canonical = record.get("canonical_solution")
        visible = _visible_from_prompt(prompt)
        if not visible:
            raise EmptyVisibleTests(
                f"{path}:{number}: task {task_id} has no parsable example tests"
            )
        evaluation = _evaluation_from_check(test_source, entry_point)
        if not evaluation:
            raise MalformedLine(str(path), number, "no parsable evaluation asserts")
        solution = None
        if canonical is not None:
            solution = canonical if "def " in canonical else prompt + canonical
        problems.append(
            Problem(
                id=task_id,
                statement=prompt,
                visible_tests=tuple(visible),
                evaluation_tests=tuple(evaluation),
                canonical_solution=solution,
                entry_point=entry_point,
                flavor=BenchmarkFlavor.HUMANEVAL,
            )
        )
    return problems


def apply_evalplus_overlay(problems: list[Problem], overlay_path: str | Path) -> list[Problem]:
    """Replace evaluation tests with an extended pre-exported suite keyed by
    task id; visible tests are unchanged."""
    suites: dict[str, list[TestCase]] = {}
    for number, record in _iter_jsonl(overlay_path):
        task_id = str(_require(record, "task_id", str(overlay_path), number))
        tests = []
        for line in _require(record, "test_list", str(overlay_path), number):
            case = _parse_benchmark_assert(line, TestOrigin.VISIBLE)
            if case is None:
                raise MalformedLine(str(overlay_path), number, f"unparsable test {line!r}")
            tests.append(case)
        suites[task_id] = tests
    overlaid = []
    for problem in problems:
        if problem.id in suites:
            overlaid.append(
                Problem(
                    id=problem.id,
                    statement=problem.statement,
                    visible_tests=problem.visible_tests,
                    evaluation_tests=tuple(suites[problem.id]),
                    canonical_solution=problem.canonical_solution,
                    entry_point=problem.entry_point,
                    flavor=problem.flavor,
                )
            )
        else:
            overlaid.append(problem)
    return overlaid


def load_benchmark(
    path: str | Path,
    flavor: BenchmarkFlavor | str,
    evalplus_overlay: str | Path | None = None,
) -> list[Problem]:
    """Load a benchmark file; optionally overlay an extended evaluation suite."""
    flavor = BenchmarkFlavor(flavor)
    if flavor is BenchmarkFlavor.MBPP:
        problems = _load_mbpp(path)
    else:
        problems = _load_humaneval(path)
    seen: set[str] = set()
    for problem in problems:
        if problem.id in seen:
            raise BenchmarkError(f"duplicate task id {problem.id!r} in {path}")
        seen.add(problem.id)
    if evalplus_overlay is not None:
        problems = apply_evalplus_overlay(problems, evalplus_overlay)
    return problems


# ---------------------------------------------------------------------------
# Ground-truth labeling (sandbox only; no completion backend is ever involved)
# ---------------------------------------------------------------------------


class Labeler:
    """Executes tests for ground truth, caching by source text."""

    def __init__(self, executor: ExecutionClient, timeout_ms: int = 5000):
        self.executor = executor
        self.timeout_ms = timeout_ms
        self._cache: dict[tuple[str, tuple[str, ...]], tuple[bool, ...]] = {}

    def passed_vector(self, source: str, tests: tuple[TestCase, ...]) -> tuple[bool, ...]:
        if not tests:
            return ()
        key = (source, tuple(t.raw_assert for t in tests))
        if key not in self._cache:
            try:
                result = self.executor.run_tests(
                    ExecutionRequest(source=source, tests=tests, timeout_ms=self.timeout_ms)
                )
                vector = tuple(
                    r.status is ExecutionStatus.PASSED
                    for r in sorted(result.per_test, key=lambda r: r.index)
                )
            except QualityFlowError:
                vector = tuple(False for _ in tests)
            self._cache[key] = vector
        return self._cache[key]

    def all_pass(self, source: str, tests: tuple[TestCase, ...]) -> bool:
        vector = self.passed_vector(source, tests)
        return bool(vector) and all(vector)


def label_candidate(
    candidate: CandidateProgram, problem: Problem, labeler: Labeler
) -> bool:
    """True iff the candidate passes every evaluation test."""
    if not problem.evaluation_tests:
        raise BenchmarkError(f"problem {problem.id} has no evaluation tests")
    return labeler.all_pass(candidate.source, problem.evaluation_tests)


# ---------------------------------------------------------------------------
# Evaluation records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CandidateRecord:
    progression: int
    stage: str  # stage label
    passed_evaluation: bool
    checker_accepted: bool | None  # None when no verdict exists for this stage


@dataclass(frozen=True)
class TestRecord:
    progression: int
    test_id: str
    raw_assert: str
    tqc_rejected: bool | None  # None when filtering was disabled
    incorrect: bool | None  # canonical solution fails it; None without canonical
    triggered: bool  # non-passed on that progression's generated program


@dataclass(frozen=True)
class EvaluationRecord:
    problem_id: str
    candidates: tuple[CandidateRecord, ...]
    final_stage: str
    final_passed: bool
    final_accepted: bool
    tests: tuple[TestRecord, ...]
    tokens: tuple[tuple[str, int, int], ...]  # (agent, input, output)


def _verdicts_by_candidate(trace: WorkflowTrace) -> dict[tuple[int, str], bool]:
    verdicts = {}
    for event in trace.events:
        if event.verdict is None or event.agent != "cqc":
            continue
        stage_label = event.stage.split(":cqc:", 1)[-1]
        verdicts[(event.progression, stage_label)] = event.verdict.accept
    return verdicts


def _token_table(trace: WorkflowTrace) -> tuple[tuple[str, int, int], ...]:
    totals: dict[str, list[int]] = {}
    for event in trace.events:
        if event.exchange is None:
            continue
        entry = totals.setdefault(event.agent, [0, 0])
        entry[0] += event.exchange.usage.input_tokens
        entry[1] += event.exchange.usage.output_tokens
    return tuple((agent, io[0], io[1]) for agent, io in sorted(totals.items()))


def evaluate_trace(
    problem: Problem, trace: WorkflowTrace, labeler: Labeler
) -> EvaluationRecord:
    """Derive one problem's evaluation record from its trace."""
    accepts = _verdicts_by_candidate(trace)
    candidates = []
    generated_by_progression: dict[int, CandidateProgram] = {}
    for event in trace.events:
        if event.candidate is None:
            continue
        candidate = event.candidate
        if candidate.stage.kind.value == "generated":
            generated_by_progression.setdefault(candidate.progression, candidate)
        candidates.append(
            CandidateRecord(
                progression=candidate.progression,
                stage=candidate.stage.label,
                passed_evaluation=label_candidate(candidate, problem, labeler),
                checker_accepted=accepts.get((candidate.progression, candidate.stage.label)),
            )
        )
    decisions: dict[tuple[int, str], bool] = {}
    filtering_seen: set[int] = set()
    for event in trace.events:
        if event.decisions is None:
            continue
        filtering_seen.add(event.progression)
        for test_id, kept in event.decisions:
            decisions[(event.progression, test_id)] = kept
    test_records = []
    for event in trace.events:
        if event.tests is None:
            continue
        progression = event.progression
        designed = event.tests
        generated = generated_by_progression.get(progression)
        triggered_vector: tuple[bool, ...] = tuple(True for _ in designed)
        if generated is not None and designed:
            passed = labeler.passed_vector(generated.source, designed)
            triggered_vector = tuple(not p for p in passed)
        incorrect_vector: tuple[bool | None, ...] = tuple(None for _ in designed)
        if problem.canonical_solution is not None and designed:
            passed = labeler.passed_vector(problem.canonical_solution, designed)
            incorrect_vector = tuple(not p for p in passed)
        for i, test in enumerate(designed):
            kept = decisions.get((progression, test.case_id))
            test_records.append(
                TestRecord(
                    progression=progression,
                    test_id=test.case_id,
                    raw_assert=test.raw_assert,
                    tqc_rejected=(None if progression not in filtering_seen else not bool(kept)),
                    incorrect=incorrect_vector[i],
                    triggered=triggered_vector[i],
                )
            )
    return EvaluationRecord(
        problem_id=trace.problem_id,
        candidates=tuple(candidates),
        final_stage=trace.final.stage.label,
        final_passed=label_candidate(trace.final.candidate, problem, labeler),
        final_accepted=trace.final.accepted_by_checker,
        tests=tuple(test_records),
        tokens=_token_table(trace),
    )


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def pass_at_k(
    records: list[EvaluationRecord] | tuple[EvaluationRecord, ...],
    k: int,
    policy: PasskPolicy = PasskPolicy.FIRST,
) -> float:
    """Fraction of problems solved when k ordered candidates may be submitted.

    k=1 scores the final submission; larger k scores the first-k (or last-k)
    intermediate outputs in workflow order, solved iff any passes.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not records:
        return 0.0
    solved = 0
    for record in records:
        if k == 1:
            solved += 1 if record.final_passed else 0
            continue
        bits = [c.passed_evaluation for c in record.candidates]
        window = bits[:k] if policy is PasskPolicy.FIRST else bits[max(0, len(bits) - k):]
        solved += 1 if any(window) else 0
    return solved / len(records)


@dataclass(frozen=True)
class ConfusionStats:
    population: int
    tp: int
    fp: int
    tn: int
    fn: int
    actual_positive_rate: float | None
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    specificity: float | None
    pct_final_output: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "population": self.population,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "actual_positive_rate": self.actual_positive_rate,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "specificity": self.specificity,
            "pct_final_output": self.pct_final_output,
        }


def _ratio(numerator: int, denominator: int) -> float | None:
    # Undefined ratios are absent, never reported as zero.
    return numerator / denominator if denominator else None


def confusion_from_pairs(pairs: list[tuple[bool, bool]]) -> ConfusionStats:
    """Build confusion statistics from (label, prediction) pairs."""
    tp = sum(1 for label, predicted in pairs if label and predicted)
    fp = sum(1 for label, predicted in pairs if not label and predicted)
    tn = sum(1 for label, predicted in pairs if not label and not predicted)
    fn = sum(1 for label, predicted in pairs if label and not predicted)
    population = len(pairs)
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = None
    if precision is not None and recall is not None and (precision + recall) > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return ConfusionStats(
        population=population,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        actual_positive_rate=_ratio(tp + fn, population),
        accuracy=_ratio(tp + tn, population),
        precision=precision,
        recall=recall,
        f1=f1,
        specificity=_ratio(tn, tn + fp),
    )


def checker_stats(
    records: list[EvaluationRecord] | tuple[EvaluationRecord, ...],
    stage_filter: str | None = None,
) -> ConfusionStats | None:
    """Code-checker confusion statistics, optionally restricted to one stage.

    Positive = candidate passes the evaluation tests; prediction = the
    checker accepted it. pct_final_output is the fraction of problems whose
    final submission was checker-accepted at or before the filter stage.
    Returns None when no verdicts exist in the population.
    """
    pairs = []
    for record in records:
        for candidate in record.candidates:
            if candidate.checker_accepted is None:
                continue
            if stage_filter is not None and candidate.stage != stage_filter:
                continue
            pairs.append((candidate.passed_evaluation, candidate.checker_accepted))
    if not pairs:
        return None
    stats = confusion_from_pairs(pairs)
    cutoff = Stage.parse(stage_filter).order if stage_filter else None
    accepted_by_cutoff = 0
    for record in records:
        if not record.final_accepted:
            continue
        if cutoff is None or Stage.parse(record.final_stage).order <= cutoff:
            accepted_by_cutoff += 1
    pct = _ratio(accepted_by_cutoff, len(records)) if records else None
    return ConfusionStats(
        population=stats.population,
        tp=stats.tp,
        fp=stats.fp,
        tn=stats.tn,
        fn=stats.fn,
        actual_positive_rate=stats.actual_positive_rate,
        accuracy=stats.accuracy,
        precision=stats.precision,
        recall=stats.recall,
        f1=stats.f1,
        specificity=stats.specificity,
        pct_final_output=pct,
    )


@dataclass(frozen=True)
class TqcStats:
    total_problems: int
    covered_programs: int  # problems with at least one triggered synthesized test
    total_tests: int
    triggered_tests: int
    stats: ConfusionStats | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_problems": self.total_problems,
            "covered_programs": self.covered_programs,
            "total_tests": self.total_tests,
            "triggered_tests": self.triggered_tests,
            "stats": self.stats.to_dict() if self.stats else None,
        }


def tqc_stats(
    records: list[EvaluationRecord] | tuple[EvaluationRecord, ...],
) -> TqcStats:
    """Test-checker statistics over triggered synthesized tests.

    Positive = the test is incorrect (the canonical solution fails it);
    prediction = the checker rejected it. The population is restricted to
    tests that were triggered on the generated program, for problems where
    the generated program did not pass the code checker (tests are only
    designed in that case).
    """
    pairs = []
    covered = 0
    total_tests = 0
    triggered_tests = 0
    for record in records:
        problem_triggered = 0
        for test in record.tests:
            total_tests += 1
            if test.triggered:
                triggered_tests += 1
                problem_triggered += 1
                if test.incorrect is not None and test.tqc_rejected is not None:
                    pairs.append((test.incorrect, test.tqc_rejected))
        if problem_triggered:
            covered += 1
    return TqcStats(
        total_problems=len(records),
        covered_programs=covered,
        total_tests=total_tests,
        triggered_tests=triggered_tests,
        stats=confusion_from_pairs(pairs) if pairs else None,
    )


def stage_pass_table(
    records: list[EvaluationRecord] | tuple[EvaluationRecord, ...],
    debug_epochs: int,
    clarifier_attempts: int,
) -> dict[str, float | None]:
    """Pass@1 of the would-be submission after each workflow step.

    At step s the submission is the lowest-index progression accepted at or
    before s, else progression 0's latest candidate at or before s. The
    "single" column is progression 0's generated program alone; "final" is
    the actual submission.
    """
    stages = [Stage.generated().label]
    stages += [Stage.debugged(e).label for e in range(1, debug_epochs + 1)]
    stages += [Stage.clarified(a).label for a in range(1, clarifier_attempts + 1)]
    table: dict[str, float | None] = {}
    if not records:
        return {"single": None, **{s: None for s in stages}, "final": None}

    def single_attempt(record: EvaluationRecord) -> bool:
        for candidate in record.candidates:
            if candidate.progression == 0 and candidate.stage == Stage.generated().label:
                return candidate.passed_evaluation
        return False

    table["single"] = sum(1 for r in records if single_attempt(r)) / len(records)
    for stage_label in stages:
        cutoff = Stage.parse(stage_label).order
        solved = 0
        for record in records:
            accepted = [
                c
                for c in record.candidates
                if c.checker_accepted and Stage.parse(c.stage).order <= cutoff
            ]
            if accepted:
                winner = min(accepted, key=lambda c: c.progression)
                solved += 1 if winner.passed_evaluation else 0
                continue
            base = [
                c
                for c in record.candidates
                if c.progression == 0 and Stage.parse(c.stage).order <= cutoff
            ]
            if base:
                latest = max(base, key=lambda c: Stage.parse(c.stage).order)
                solved += 1 if latest.passed_evaluation else 0
        table[stage_label] = solved / len(records)
    table["final"] = sum(1 for r in records if r.final_passed) / len(records)
    return table


def token_report(
    records: list[EvaluationRecord] | tuple[EvaluationRecord, ...],
) -> dict[str, Any]:
    """Per-agent mean and total token usage across problems."""
    totals: dict[str, list[int]] = {}
    for record in records:
        for agent, input_tokens, output_tokens in record.tokens:
            entry = totals.setdefault(agent, [0, 0])
            entry[0] += input_tokens
            entry[1] += output_tokens
    problems = len(records)
    per_agent = {}
    grand = [0, 0]
    for agent in sorted(totals):
        input_total, output_total = totals[agent]
        grand[0] += input_total
        grand[1] += output_total
        per_agent[agent] = {
            "input_total": input_total,
            "output_total": output_total,
            "input_mean": input_total / problems if problems else None,
            "output_mean": output_total / problems if problems else None,
        }
    return {
        "problems": problems,
        "per_agent": per_agent,
        "total": {
            "input_total": grand[0],
            "output_total": grand[1],
            "input_mean": grand[0] / problems if problems else None,
            "output_mean": grand[1] / problems if problems else None,
        },
    }


# ---------------------------------------------------------------------------
# Results document
# ---------------------------------------------------------------------------


def record_to_dict(record: EvaluationRecord) -> dict[str, Any]:
    return {
        "problem_id": record.problem_id,
        "candidates": [
            {
                "progression": c.progression,
                "stage": c.stage,
                "passed_evaluation": c.passed_evaluation,
                "checker_accepted": c.checker_accepted,
            }
            for c in record.candidates
        ],
        "final_stage": record.final_stage,
        "final_passed": record.final_passed,
        "final_accepted": record.final_accepted,
        "tests": [
            {
                "progression": t.progression,
                "test_id": t.test_id,
                "raw_assert": t.raw_assert,
                "tqc_rejected": t.tqc_rejected,
                "incorrect": t.incorrect,
                "triggered": t.triggered,
            }
            for t in record.tests
        ],
        "tokens": [[agent, i, o] for agent, i, o in record.tokens],
    }


def record_from_dict(data: dict[str, Any]) -> EvaluationRecord:
    return EvaluationRecord(
        problem_id=data["problem_id"],
        candidates=tuple(
            CandidateRecord(
                progression=c["progression"],
                stage=c["stage"],
                passed_evaluation=c["passed_evaluation"],
                checker_accepted=c["checker_accepted"],
            )
            for c in data["candidates"]
        ),
        final_stage=data["final_stage"],
        final_passed=data["final_passed"],
        final_accepted=data["final_accepted"],
        tests=tuple(
            TestRecord(
                progression=t["progression"],
                test_id=t["test_id"],
                raw_assert=t["raw_assert"],
                tqc_rejected=t["tqc_rejected"],
                incorrect=t["incorrect"],
                triggered=t["triggered"],
            )
            for t in data["tests"]
        ),
        tokens=tuple((t[0], t[1], t[2]) for t in data["tokens"]),
    )


def build_results(
    records: list[EvaluationRecord],
    config: dict[str, Any],
    k: int,
    policy: PasskPolicy,
) -> dict[str, Any]:
    """Assemble the aggregate results document from per-problem records."""
    debug_epochs = int(config.get("debug_epochs", 3))
    clarifier_attempts = int(config.get("clarifier_attempts", 3))
    stage_labels = (
        [Stage.generated().label]
        + [Stage.debugged(e).label for e in range(1, debug_epochs + 1)]
        + [Stage.clarified(a).label for a in range(1, clarifier_attempts + 1)]
    )
    cqc_by_stage = {}
    for label in stage_labels:
        stats = checker_stats(records, label)
        if stats is not None:
            cqc_by_stage[label] = stats.to_dict()
    overall = checker_stats(records)
    return {
        "format": RESULTS_FORMAT,
        "version": FORMAT_VERSION,
        "config": dict(sorted(config.items())),
        "problems": [record_to_dict(r) for r in records],
        "aggregate": {
            "pass_at_1": pass_at_k(records, 1),
            "pass_at_k": {
                "k": k,
                "policy": policy.value,
                "value": pass_at_k(records, k, policy),
            },
            "stage_pass": stage_pass_table(records, debug_epochs, clarifier_attempts),
            "cqc": overall.to_dict() if overall else None,
            "cqc_by_stage": cqc_by_stage,
            "tqc": tqc_stats(records).to_dict(),
            "tokens": token_report(records),
        },
    }


def serialize_results(document: dict[str, Any]) -> str:
    return canonical_text(document)


def load_results(path: str | Path) -> dict[str, Any]:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    if document.get("format") != RESULTS_FORMAT:
        raise BenchmarkError(f"not a results document: format={document.get('format')!r}")
    return document
