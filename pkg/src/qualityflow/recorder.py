"""Mutable event recorder used while a progression runs.

Traces are immutable values; this is the builder that accumulates events in
order and hands out transcript references ("p<progression>:<seq>") for
verdicts to point back at their exchanges.
"""

from __future__ import annotations

from .gateway import CompletionRequest, CompletionResponse
from .model import (
    CandidateProgram,
    EventKind,
    Exchange,
    ExecutionResult,
    TestCase,
    TraceEvent,
    Verdict,
)


class ProgressionRecorder:
    def __init__(self, progression: int):
        self.progression = progression
        self.events: list[TraceEvent] = []

    def _ref(self, seq: int) -> str:
        return f"p{self.progression}:{seq}"

    def _append(self, **kwargs) -> str:
        seq = len(self.events)
        self.events.append(TraceEvent(seq=seq, progression=self.progression, **kwargs))
        return self._ref(seq)

    def exchange(
        self,
        agent: str,
        stage: str,
        request: CompletionRequest,
        response: CompletionResponse,
    ) -> str:
        return self._append(
            agent=agent,
            stage=stage,
            kind=EventKind.EXCHANGE,
            exchange=Exchange(
                messages=request.messages,
                response=response.content,
                usage=response.usage,
                backend_id=response.backend_id,
            ),
        )

    def candidate(self, agent: str, candidate: CandidateProgram) -> str:
        return self._append(
            agent=agent,
            stage=candidate.stage.label,
            kind=EventKind.CANDIDATE,
            candidate=candidate,
        )

    def verdict(self, agent: str, stage: str, verdict: Verdict) -> str:
        return self._append(agent=agent, stage=stage, kind=EventKind.VERDICT, verdict=verdict)

    def execution(self, stage: str, result: ExecutionResult) -> str:
        return self._append(
            agent="executor", stage=stage, kind=EventKind.EXECUTION, execution=result
        )

    def tests(self, stage: str, tests: tuple[TestCase, ...], note: str) -> str:
        return self._append(
            agent="designer", stage=stage, kind=EventKind.TESTS, tests=tests, note=note
        )

    def filter_decisions(
        self, stage: str, decisions: tuple[tuple[str, bool], ...], note: str
    ) -> str:
        return self._append(
            agent="tqc", stage=stage, kind=EventKind.FILTER, decisions=decisions, note=note
        )

    def note(self, agent: str, stage: str, text: str) -> str:
        return self._append(agent=agent, stage=stage, kind=EventKind.NOTE, note=text)
