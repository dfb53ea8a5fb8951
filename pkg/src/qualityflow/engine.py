"""The workflow engine: one progression of the generate / check / design /
filter / debug / clarify / revert loop, and the diversified composition that
runs several progressions with different prompt variants.

A progression returns as soon as a quality check accepts a candidate, so no
later-stage backend exchanges exist for it. When every check rejects, the
submission reverts to the initially generated program (unless reverting is
ablated away). With the checker disabled there is no termination condition
and every stage is traversed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from . import agents, checkers
from .errors import BenchmarkRuleError, ConfigError
from .execution import ExecutionClient, ExecutionError, ExecutionRequest, count_triggered
from .gateway import CompletionBackend, GatewayError
from .model import (
    BenchmarkFlavor,
    CandidateProgram,
    CheckMode,
    FinalSubmission,
    Problem,
    Stage,
    TraceEvent,
    Verdict,
    WorkflowTrace,
)
from .recorder import ProgressionRecorder
from .templates import TemplateSet


class CqcMode(str, Enum):
    IMAGINED = "imagined"
    PYTHON_EXEC = "python-exec"
    YES_NO = "yes-no-baseline"
    DISABLED = "disabled"

    @property
    def check_mode(self) -> CheckMode:
        if self is CqcMode.DISABLED:
            raise ValueError("disabled checker has no check mode")
        return CheckMode(self.value)


class PasskPolicy(str, Enum):
    FIRST = "first"
    LAST = "last"


def default_temperatures() -> dict[str, float]:
    # Only the test designer samples above zero, to diversify its tests.
    return {"generator": 0.0, "designer": 0.1, "debugger": 0.0, "clarifier": 0.0}


@dataclass(frozen=True)
class WorkflowConfig:
    progressions: int = 6
    debug_epochs: int = 3
    clarifier_attempts: int = 3
    designer_rounds: int = 5
    designer_batch: int = 10
    cqc_mode: CqcMode = CqcMode.IMAGINED
    use_tqc: bool = True
    use_clarifier: bool = True
    use_revert: bool = True
    temperatures: dict[str, float] = field(default_factory=default_temperatures)
    max_tokens: int = 4096
    test_timeout_ms: int = 5000

    def validate(self, flavor: BenchmarkFlavor | None = None) -> None:
        if min(self.progressions, self.debug_epochs, self.clarifier_attempts) < 1:
            raise ConfigError("progressions, debug_epochs and clarifier_attempts must be >= 1")
        if min(self.designer_rounds, self.designer_batch) < 1:
            raise ConfigError("designer rounds and batch must be >= 1")
        if self.cqc_mode is CqcMode.PYTHON_EXEC and flavor is BenchmarkFlavor.MBPP:
            raise BenchmarkRuleError(
                "python-exec quality checking would run the visible tests, which "
                "this benchmark forbids because they double as evaluation tests"
            )

    def temperature(self, agent: str) -> float:
        return self.temperatures.get(agent, 0.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "progressions": self.progressions,
            "debug_epochs": self.debug_epochs,
            "clarifier_attempts": self.clarifier_attempts,
            "designer_rounds": self.designer_rounds,
            "designer_batch": self.designer_batch,
            "cqc_mode": self.cqc_mode.value,
            "use_tqc": self.use_tqc,
            "use_clarifier": self.use_clarifier,
            "use_revert": self.use_revert,
            "temperatures": dict(sorted(self.temperatures.items())),
            "max_tokens": self.max_tokens,
            "test_timeout_ms": self.test_timeout_ms,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "WorkflowConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(data)
        if "cqc_mode" in kwargs:
            kwargs["cqc_mode"] = CqcMode(kwargs["cqc_mode"])
        return cls(**kwargs)

    def snapshot(self) -> tuple[tuple[str, Any], ...]:
        return tuple(sorted(self.to_dict().items(), key=lambda kv: kv[0]))


@dataclass
class Services:
    """The shared clients a run needs: completions, execution, prompts."""

    backend: CompletionBackend
    executor: ExecutionClient
    templates: TemplateSet


@dataclass(frozen=True)
class ProgressionOutcome:
    index: int
    final_candidate: CandidateProgram
    final_stage: Stage
    accepted: bool
    verdicts: tuple[tuple[str, Verdict], ...]
    intermediates: tuple[CandidateProgram, ...]
    failed: bool = False
    failure: str | None = None

    def __post_init__(self) -> None:
        if self.accepted and self.verdicts and not self.verdicts[-1][1].accept:
            raise ValueError("accepted outcome must end on an accepting verdict")
        if self.final_stage.kind.value == "reverted" and self.accepted:
            raise ValueError("reverted outcomes are never accepted")


_FATAL = (GatewayError, ExecutionError, OSError)


def _context_digest(
    problem: Problem,
    rejected: list[str],
    designed: int,
    kept: int,
    last_triggered: int | None,
) -> str:
    lines = [f"problem {problem.id}: all quality checks so far rejected"]
    for stage in rejected:
        lines.append(f"- rejected: {stage}")
    lines.append(f"- synthesized tests: {designed} designed, {kept} kept after filtering")
    if last_triggered is not None:
        lines.append(f"- last execution: {last_triggered} tests triggered")
    return "\n".join(lines)


def run_progression(
    problem: Problem,
    config: WorkflowConfig,
    index: int,
    services: Services,
) -> tuple[ProgressionOutcome, tuple[TraceEvent, ...]]:
    """Run one full pass of the workflow with prompt variant `index`."""
    recorder = ProgressionRecorder(index)
    try:
        outcome = _run_progression_inner(problem, config, index, services, recorder)
    except _FATAL as exc:
        outcome = _failed_outcome(index, recorder, exc)
        if outcome is None:
            raise
    return outcome, tuple(recorder.events)


def _failed_outcome(
    index: int, recorder: ProgressionRecorder, exc: Exception
) -> ProgressionOutcome | None:
    """Close out a progression that hit a fatal agent/executor error.

    The best candidate so far (preferring the initially generated one) is
    kept; without any candidate the failure propagates.
    """
    candidates = [e.candidate for e in recorder.events if e.candidate is not None]
    if not candidates:
        return None
    recorder.note("engine", f"p{index}:failed", f"progression failed: {exc}")
    best = candidates[0]
    return ProgressionOutcome(
        index=index,
        final_candidate=best,
        final_stage=best.stage,
        accepted=False,
        verdicts=(),
        intermediates=tuple(candidates),
        failed=True,
        failure=str(exc),
    )


def _run_progression_inner(
    problem: Problem,
    config: WorkflowConfig,
    index: int,
    services: Services,
    recorder: ProgressionRecorder,
) -> ProgressionOutcome:
    cqc_on = config.cqc_mode is not CqcMode.DISABLED
    verdicts: list[tuple[str, Verdict]] = []
    rejected_stages: list[str] = []

    def checked_accept(candidate: CandidateProgram) -> bool:
        if not cqc_on:
            return False
        verdict = checkers.check_code_quality(
            candidate,
            problem,
            config.cqc_mode.check_mode,
            services.backend,
            recorder,
            executor=services.executor,
            timeout_ms=config.test_timeout_ms,
            max_tokens=config.max_tokens,
        )
        verdicts.append((candidate.stage.label, verdict))
        if not verdict.accept:
            rejected_stages.append(candidate.stage.label)
        return verdict.accept

    def outcome(candidate: CandidateProgram, accepted: bool, stage: Stage) -> ProgressionOutcome:
        return ProgressionOutcome(
            index=index,
            final_candidate=candidate,
            final_stage=stage,
            accepted=accepted,
            verdicts=tuple(verdicts),
            intermediates=tuple(intermediates),
        )

    generated = agents.generate_program(
        problem,
        services.templates.variant("generator", index),
        services.backend,
        recorder,
        progression=index,
        temperature=config.temperature("generator"),
        max_tokens=config.max_tokens,
    )
    intermediates = [generated]
    if checked_accept(generated):
        return outcome(generated, True, generated.stage)

    designed = agents.design_tests(
        problem,
        config.designer_rounds,
        config.designer_batch,
        services.templates.for_role("designer"),
        services.backend,
        recorder,
        progression=index,
        temperature=config.temperature("designer"),
        max_tokens=config.max_tokens,
    )
    if config.use_tqc:
        decisions = tuple(
            (
                test.case_id,
                checkers.check_test_quality(
                    problem,
                    test,
                    services.backend,
                    recorder,
                    progression=index,
                    max_tokens=config.max_tokens,
                ),
            )
            for test in designed.tests
        )
        kept_ids = {test_id for test_id, kept in decisions if kept}
        filtered = tuple(t for t in designed.tests if t.case_id in kept_ids)
        recorder.filter_decisions(
            f"p{index}:tqc",
            decisions,
            f"kept {len(filtered)} of {len(designed.tests)} synthesized tests",
        )
    else:
        filtered = designed.tests
        recorder.note(
            "tqc", f"p{index}:tqc", "test quality checking disabled; all tests kept"
        )

    current = generated
    last_triggered: int | None = None
    for epoch in range(1, config.debug_epochs + 1):
        if not filtered:
            recorder.note(
                "engine", f"p{index}:debugged({epoch})", "no tests to run; debugging skipped"
            )
            break
        result = services.executor.run_tests(
            ExecutionRequest(
                source=current.source,
                tests=filtered,
                timeout_ms=config.test_timeout_ms,
            )
        )
        recorder.execution(f"p{index}:debugged({epoch})", result)
        last_triggered = count_triggered(result)
        if last_triggered == 0:
            recorder.note(
                "engine",
                f"p{index}:debugged({epoch})",
                "no synthesized tests triggered; debugging skipped",
            )
            break
        feedback = agents.feedback_from_execution(result, filtered)
        current = agents.self_debug(
            problem,
            current,
            feedback,
            services.templates.variant("debugger", epoch - 1),
            services.backend,
            recorder,
            progression=index,
            epoch=epoch,
            temperature=config.temperature("debugger"),
            max_tokens=config.max_tokens,
        )
        intermediates.append(current)
        if checked_accept(current):
            return outcome(current, True, current.stage)

    if config.use_clarifier:
        for attempt in range(1, config.clarifier_attempts + 1):
            digest = _context_digest(
                problem,
                rejected_stages,
                len(designed.tests),
                len(filtered),
                last_triggered,
            )
            clarified = agents.clarify(
                problem,
                digest,
                services.templates.variant("clarifier", attempt - 1),
                services.backend,
                recorder,
                progression=index,
                attempt=attempt,
                temperature=config.temperature("clarifier"),
                max_tokens=config.max_tokens,
            )
            if clarified is None:
                rejected_stages.append(f"clarify-attempt({attempt})")
                continue
            current = agents.generate_program(
                problem,
                services.templates.variant("regenerator", attempt - 1),
                services.backend,
                recorder,
                progression=index,
                stage=Stage.clarified(attempt),
                clarified=clarified,
                prior_source=current.source,
                temperature=config.temperature("generator"),
                max_tokens=config.max_tokens,
            )
            intermediates.append(current)
            if checked_accept(current):
                return outcome(current, True, current.stage)

    # Without a checker there are no rejections to revert from; the last
    # candidate is the submission.
    if config.use_revert and cqc_on:
        recorder.note(
            "engine",
            f"p{index}:reverted",
            "all quality checks rejected; reverting to the generated program",
        )
        return outcome(generated, False, Stage.reverted())
    return outcome(current, False, current.stage)


def run_diversified(
    problem: Problem,
    config: WorkflowConfig,
    services: Services,
    *,
    parallel: int = 1,
) -> tuple[CandidateProgram, WorkflowTrace]:
    """Run all progressions and pick the lowest-index accepted candidate.

    The trace aggregates every progression's events in index order, so the
    result is identical no matter how progressions were scheduled.
    """
    config.validate(problem.flavor)
    indices = list(range(config.progressions))
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            runs = list(
                pool.map(
                    lambda i: run_progression(problem, config, i, services), indices
                )
            )
    else:
        runs = [run_progression(problem, config, i, services) for i in indices]

    outcomes = [r[0] for r in runs]
    events: list[TraceEvent] = []
    for _, progression_events in runs:
        events.extend(progression_events)

    accepted = [o for o in outcomes if o.accepted]
    all_failed = all(o.failed for o in outcomes)
    if accepted:
        winner = accepted[0]
        final = FinalSubmission(
            candidate=winner.final_candidate,
            stage=winner.final_stage,
            accepted_by_checker=True,
        )
    elif all_failed:
        fallback = outcomes[0].intermediates[0]
        final = FinalSubmission(
            candidate=fallback,
            stage=fallback.stage,
            accepted_by_checker=False,
            failed=True,
        )
    else:
        base = outcomes[0]
        final = FinalSubmission(
            candidate=base.final_candidate,
            stage=base.final_stage,
            accepted_by_checker=False,
            failed=base.failed,
        )
    trace = WorkflowTrace(
        problem_id=problem.id,
        config=config.snapshot(),
        events=tuple(events),
        final=final,
    )
    return final.candidate, trace


def collect_passk_candidates(
    trace: WorkflowTrace, k: int, policy: PasskPolicy = PasskPolicy.FIRST
) -> tuple[CandidateProgram, ...]:
    """The k intermediate outputs to submit for pass@k evaluation.

    Candidates are ordered progression-major, then by workflow step within a
    progression; the policy takes the first or the last k of that order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ordered = [e.candidate for e in trace.events if e.candidate is not None]
    if len(ordered) <= k:
        return tuple(ordered)
    if policy is PasskPolicy.FIRST:
        return tuple(ordered[:k])
    return tuple(ordered[-k:])
