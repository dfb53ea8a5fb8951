"""Agentic program-synthesis workflow navigated by quality checkers.

A program generator, test designer, self-debugger and problem clarifier are
composed into progressions whose intermediate programs are vetted by a code
quality checker (imagined execution, real execution of visible tests, or a
yes/no critic); a test quality checker filters synthesized tests before they
feed self-debugging. A benchmark harness computes pass@k and checker
statistics, and a CLI drives runs over benchmark files with record/replay
completion fixtures.
"""

from .model import (
    BenchmarkFlavor,
    CandidateProgram,
    CheckMode,
    ComparisonHint,
    ComparisonKind,
    ExecutionResult,
    ExecutionStatus,
    Problem,
    Stage,
    StageKind,
    TestCase,
    TestOrigin,
    TokenUsage,
    Verdict,
    WorkflowTrace,
    deserialize_trace,
    serialize_trace,
)
from .engine import (
    CqcMode,
    PasskPolicy,
    Services,
    WorkflowConfig,
    collect_passk_candidates,
    run_diversified,
    run_progression,
)
from .comparator import ComparisonMethod, ComparisonOutcome, compare_outputs

__version__ = "0.1.0"

__all__ = [
    "BenchmarkFlavor",
    "CandidateProgram",
    "CheckMode",
    "ComparisonHint",
    "ComparisonKind",
    "ComparisonMethod",
    "ComparisonOutcome",
    "CqcMode",
    "ExecutionResult",
    "ExecutionStatus",
    "PasskPolicy",
    "Problem",
    "Services",
    "Stage",
    "StageKind",
    "TestCase",
    "TestOrigin",
    "TokenUsage",
    "Verdict",
    "WorkflowConfig",
    "WorkflowTrace",
    "collect_passk_candidates",
    "compare_outputs",
    "deserialize_trace",
    "run_diversified",
    "run_progression",
    "serialize_trace",
    "__version__",
]
