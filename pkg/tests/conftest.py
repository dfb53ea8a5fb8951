"""Shared fixtures: a session-scoped scenario corpus recorded into replay
fixtures, plus ready-made services for replay runs."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pytest

from helpers import corpus as corpus_mod
from helpers.scripted import ProblemScript

from qualityflow.bench import load_benchmark
from qualityflow.engine import Services
from qualityflow.execution import ExecutionClient
from qualityflow.gateway import ReplayBackend
from qualityflow.model import BenchmarkFlavor, Problem
from qualityflow.templates import default_templates


@dataclass(frozen=True)
class Corpus:
    root: Path
    structural_benchmark: Path
    diversified_benchmark: Path
    exchanges: Path
    structural_scripts: dict[str, ProblemScript]
    diversified_scripts: dict[str, ProblemScript]
    recorded: dict[str, dict[str, object]]  # config key -> problem id -> trace

    def structural_problems(self) -> list[Problem]:
        return load_benchmark(self.structural_benchmark, BenchmarkFlavor.MBPP)

    def diversified_problems(self) -> list[Problem]:
        return load_benchmark(self.diversified_benchmark, BenchmarkFlavor.MBPP)

    def replay_services(self) -> Services:
        return Services(
            backend=ReplayBackend(self.exchanges),
            executor=ExecutionClient(corpus_mod.STUB_RUNNER),
            templates=default_templates(),
        )

    def recorded_trace(self, config, problem_id: str):
        return self.recorded[corpus_mod.config_key(config)][problem_id]

    def recorded_run(self, config) -> dict[str, object]:
        return self.recorded[corpus_mod.config_key(config)]


@pytest.fixture(scope="session")
def corpus(tmp_path_factory) -> Corpus:
    root = tmp_path_factory.mktemp("corpus")
    structural = corpus_mod.structural_scripts()
    diversified = corpus_mod.diversified_scripts()
    structural_benchmark = root / "structural.jsonl"
    diversified_benchmark = root / "diversified.jsonl"
    corpus_mod.write_benchmark(structural, structural_benchmark)
    corpus_mod.write_benchmark(diversified, diversified_benchmark)
    exchanges = root / "exchanges"
    recorded = corpus_mod.record_corpus(
        structural, structural_benchmark, exchanges, corpus_mod.ablation_matrix()
    )
    recorded.update(
        corpus_mod.record_corpus(
            diversified, diversified_benchmark, exchanges, [corpus_mod.diversified_config()]
        )
    )
    return Corpus(
        root=root,
        structural_benchmark=structural_benchmark,
        diversified_benchmark=diversified_benchmark,
        exchanges=exchanges,
        structural_scripts=structural,
        diversified_scripts=diversified,
        recorded=recorded,
    )


@pytest.fixture(scope="session")
def stub_runner() -> tuple[str, ...]:
    return corpus_mod.STUB_RUNNER
