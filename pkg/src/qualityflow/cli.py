"""Command-line entry point: run workflows over a benchmark and render reports.

Exit codes: 0 success, 2 configuration errors, 3 backend/transport errors.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import bench, report
from .engine import (
    CqcMode,
    PasskPolicy,
    Services,
    WorkflowConfig,
    run_diversified,
)
from .errors import ConfigError, QualityFlowError
from .execution import ExecutionClient, ExecutionError, default_runner_command
from .gateway import GatewayError, build_backend
from .model import (
    BenchmarkFlavor,
    Problem,
    serialize_trace,
    WorkflowTrace,
)
from .templates import TemplateSet, default_templates, load_templates

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3


def _parse_backend(value: str) -> tuple[str, str | None]:
    mode, _, directory = value.partition(":")
    if mode not in ("live", "record", "replay"):
        raise ConfigError(f"unknown backend {value!r}; use live, record:DIR or replay:DIR")
    if mode in ("record", "replay") and not directory:
        raise ConfigError(f"{mode} backend needs a fixture directory: {mode}:DIR")
    return mode, directory or None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the workflow over a benchmark")
    run.add_argument("--benchmark", required=True, help="benchmark file (jsonl)")
    run.add_argument("--flavor", required=True, choices=["mbpp", "humaneval"])
    run.add_argument("--evalplus", help="extended evaluation suite overlay (jsonl)")
    run.add_argument(
        "--backend",
        default="live",
        help="completion backend: live, record:DIR or replay:DIR",
    )
    run.add_argument("--mode", choices=["standard", "relaxed"], default="standard")
    run.add_argument(
        "--cqc",
        choices=[m.value for m in CqcMode],
        help="code quality checker mode (overrides --mode)",
    )
    run.add_argument("--no-cqc", action="store_true", help="disable the code quality checker")
    run.add_argument("--no-tqc", action="store_true", help="disable test filtering")
    run.add_argument("--no-clarifier", action="store_true", help="disable the clarifier stage")
    run.add_argument("--no-revert", action="store_true", help="submit the last candidate instead of reverting")
    run.add_argument("--progressions", type=int)
    run.add_argument("--debug-epochs", type=int)
    run.add_argument("--clarifier-attempts", type=int)
    run.add_argument("--designer-rounds", type=int)
    run.add_argument("--designer-batch", type=int)
    run.add_argument("--k", type=int, default=5, help="k for the pass@k aggregate")
    run.add_argument("--passk-policy", choices=["first", "last"], default="first")
    run.add_argument("--templates", help="directory of prompt templates")
    run.add_argument("--runner", help="sandbox runner command (shell-quoted)")
    run.add_argument("--timeout-ms", type=int, help="per-test execution timeout")
    run.add_argument("--jobs", type=int, default=1, help="problems evaluated in parallel")
    run.add_argument("--config", help="workflow config file (json)")
    run.add_argument("--out", required=True, help="output directory")

    rep = sub.add_parser("report", help="render tables from a results document")
    rep.add_argument("results", help="results document path")
    return parser


def _load_config(args: argparse.Namespace) -> WorkflowConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            config = WorkflowConfig.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid config file {path}: {exc}") from exc
    else:
        config = WorkflowConfig()
    overrides = {}
    if args.progressions is not None:
        overrides["progressions"] = args.progressions
    if args.debug_epochs is not None:
        overrides["debug_epochs"] = args.debug_epochs
    if args.clarifier_attempts is not None:
        overrides["clarifier_attempts"] = args.clarifier_attempts
    if args.designer_rounds is not None:
        overrides["designer_rounds"] = args.designer_rounds
    if args.designer_batch is not None:
        overrides["designer_batch"] = args.designer_batch
    if args.timeout_ms is not None:
        overrides["test_timeout_ms"] = args.timeout_ms
    cqc_mode = config.cqc_mode
    if args.mode == "relaxed":
        cqc_mode = CqcMode.PYTHON_EXEC
    if args.cqc:
        cqc_mode = CqcMode(args.cqc)
    if args.no_cqc:
        cqc_mode = CqcMode.DISABLED
    overrides["cqc_mode"] = cqc_mode
    if args.no_tqc:
        overrides["use_tqc"] = False
    if args.no_clarifier:
        overrides["use_clarifier"] = False
    if args.no_revert:
        overrides["use_revert"] = False
    return replace(config, **overrides)


def _load_template_set(args: argparse.Namespace) -> TemplateSet:
    if args.templates:
        return load_templates(args.templates)
    return default_templates()


def _safe_filename(problem_id: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in problem_id)


def _run_one(
    problem: Problem, config: WorkflowConfig, services: Services
) -> WorkflowTrace:
    _, trace = run_diversified(problem, config, services)
    return trace


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    flavor = BenchmarkFlavor(args.flavor)
    config.validate(flavor)
    backend_mode, fixture_dir = _parse_backend(args.backend)
    templates = _load_template_set(args)
    problems = bench.load_benchmark(args.benchmark, flavor, args.evalplus)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    runner_command = shlex.split(args.runner) if args.runner else default_runner_command()
    backend = build_backend(backend_mode, fixture_dir)
    executor = ExecutionClient(runner_command)
    services = Services(backend=backend, executor=executor, templates=templates)

    out_dir = Path(args.out)
    trace_dir = out_dir / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            traces = list(pool.map(lambda p: _run_one(p, config, services), problems))
    else:
        traces = [_run_one(problem, config, services) for problem in problems]

    labeler = bench.Labeler(executor, timeout_ms=config.test_timeout_ms)
    records = []
    for i, (problem, trace) in enumerate(zip(problems, traces), start=1):
        (trace_dir / f"{_safe_filename(problem.id)}.json").write_text(
            serialize_trace(trace), encoding="utf-8"
        )
        record = bench.evaluate_trace(problem, trace, labeler)
        records.append(record)
        print(
            f"[{i}/{len(problems)}] {problem.id}: "
            f"final={record.final_stage} accepted={record.final_accepted} "
            f"passed={record.final_passed}"
        )

    document = bench.build_results(
        records, config.to_dict(), args.k, PasskPolicy(args.passk_policy)
    )
    results_path = out_dir / "results.json"
    results_path.write_text(bench.serialize_results(document), encoding="utf-8")
    aggregate = document["aggregate"]
    print(
        f"pass@1 = {aggregate['pass_at_1']:.4f} over {len(records)} problems "
        f"(results: {results_path})"
    )
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    document = bench.load_results(args.results)
    print(report.render_report(document), end="")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_report(args)
    except (ConfigError, bench.BenchmarkError) as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GatewayError, ExecutionError) as exc:
        print(f"error (backend): {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except QualityFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
