"""Scenario corpora: synthetic benchmark problems with scripted model behavior.

The structural corpus covers every termination shape of the workflow
(accept at generation, at each debug epoch, at each clarifier attempt,
reject-all/revert, a checker false-accept, and designer-output junk). Buggy
sources carry a `# stub: *=failed` directive understood by the stub runner
and genuinely fail their tests under real execution, so the same corpus works
with either runner. Every problem's designed tests include one poisoned test
the filter keeps (expected value "__boom__"), guaranteeing debug feedback in
checker-disabled runs, and one the filter rejects (expected "__bad__").
"""

from __future__ import annotations

import itertools
import json
import sys
from pathlib import Path

from qualityflow.engine import CqcMode, Services, WorkflowConfig, run_diversified
from qualityflow.bench import load_benchmark
from qualityflow.execution import ExecutionClient
from qualityflow.gateway import RecordBackend
from qualityflow.model import BenchmarkFlavor
from qualityflow.templates import default_templates

from .scripted import ProblemScript, ScriptedBackend

STUB_RUNNER = (sys.executable, "-S", str(Path(__file__).with_name("stub_runner.py")))

GEN = "generated"
D1, D2, D3 = "debugged(1)", "debugged(2)", "debugged(3)"
C1, C2, C3 = "clarified(1)", "clarified(2)", "clarified(3)"


def _correct(fn: str, body: str) -> str:
    return f"def {fn}{body}"

def _buggy(fn: str, body: str, note: str) -> str:
    return f"# stub: *=failed\n# attempt: {note}\ndef {fn}{body}"


def _script(
    pid: str,
    fn: str,
    statement: str,
    visible: tuple[tuple[str, str], ...],
    canonical_body: str,
    accept: dict[int, str | None],
    correct_stages: tuple[tuple[int, str], ...] = (),
    buggy_bodies: dict[tuple[int, str], str] | None = None,
    designed: tuple[tuple[str, bool], ...] = (),
    designer_rounds: tuple[tuple[str, ...], ...] = (),
    clarify_texts: dict[int, str] | None = None,
    bare_cqc_answers: bool = False,
) -> ProblemScript:
    canonical = _correct(fn, canonical_body)
    sources = {}
    for progression, stage in correct_stages:
        sources[(progression, stage)] = canonical
    for (progression, stage), body in (buggy_bodies or {}).items():
        sources[(progression, stage)] = _buggy(fn, body, f"p{progression} {stage}")
    return ProblemScript(
        pid=pid,
        statement=statement,
        fn=fn,
        visible=visible,
        canonical=canonical,
        accept=accept,
        sources=sources,
        designer_rounds=designer_rounds,
        designed=designed,
        clarify_texts=clarify_texts or {},
        bare_cqc_answers=bare_cqc_answers,
    )


def _standard_designed(fn: str, good_call: str, good_value: str, extra_call: str, bad_call: str):
    """One correct kept test, one poisoned kept test, one poisoned rejected test."""
    return (
        (f"assert {good_call} == {good_value}", True),
        (f'assert {extra_call} == "__boom__"', True),
        (f'assert {bad_call} == "__bad__"', False),
    )


def structural_scripts() -> dict[str, ProblemScript]:
    scripts = {}

    scripts["sp01"] = _script(
        "sp01",
        "first_digit",
        "Write a function first_digit(n) that returns the leading decimal digit "
        "of a positive integer n.",
        (("first_digit(123)", "1"), ("first_digit(45)", "4")),
        "(n):\n    return int(str(n)[0])",
        accept={0: GEN},
        correct_stages=((0, GEN),),
        designed=_standard_designed(
            "first_digit", "first_digit(987)", "9", "first_digit(7)", "first_digit(30)"
        ),
        bare_cqc_answers=True,
    )

    scripts["sp02"] = _script(
        "sp02",
        "double",
        "Write a function double(x) that returns twice the value of x.",
        (("double(2)", "4"), ("double(0)", "0")),
        "(x):\n    return 2 * x",
        accept={0: D1},
        correct_stages=((0, D1),),
        buggy_bodies={(0, GEN): "(x):\n    return x * x"},
        designed=_standard_designed("double", "double(3)", "6", "double(5)", "double(4)"),
    )

    scripts["sp03"] = _script(
        "sp03",
        "increment",
        "Write a function increment(x) that returns x plus one.",
        (("increment(1)", "2"), ("increment(-1)", "0")),
        "(x):\n    return x + 1",
        accept={0: D2},
        correct_stages=((0, D2),),
        buggy_bodies={
            (0, D1): "(x):\n    return x + 2",
        },
        designed=_standard_designed(
            "increment", "increment(10)", "11", "increment(5)", "increment(7)"
        ),
    )
    # This generated program fails only some tests, so one kept synthesized
    # test stays untriggered (exercising the triggered-population filter).
    scripts["sp03"].sources[(0, GEN)] = (
        "# stub: *=failed,0=passed\n"
        "# attempt: p0 generated\n"
        "def increment(x):\n    return x - 1"
    )

    scripts["sp04"] = _script(
        "sp04",
        "negate",
        "Write a function negate(x) that returns the arithmetic negation of x.",
        (("negate(3)", "-3"), ("negate(-4)", "4")),
        "(x):\n    return -x",
        accept={0: D3},
        correct_stages=((0, D3),),
        buggy_bodies={
            (0, GEN): "(x):\n    return x",
            (0, D1): "(x):\n    return abs(x)",
            (0, D2): "(x):\n    return x - x",
        },
        designed=_standard_designed("negate", "negate(9)", "-9", "negate(2)", "negate(6)"),
    )

    scripts["sp05"] = _script(
        "sp05",
        "last_char",
        "Write a function last_char(s) that returns the final character of a "
        "nonempty string s.",
        (("last_char('abc')", "'c'"), ("last_char('q')", "'q'")),
        "(s):\n    return s[-1]",
        accept={0: C1},
        correct_stages=((0, C1),),
        buggy_bodies={
            (0, GEN): "(s):\n    return s[0]",
            (0, D1): "(s):\n    return s[1]",
            (0, D2): "(s):\n    return s[:1]",
            (0, D3): "(s):\n    return s.upper()[0]",
        },
        designed=_standard_designed(
            "last_char", "last_char('xyz')", "'z'", "last_char('hi')", "last_char('no')"
        ),
    )

    scripts["sp06"] = _script(
        "sp06",
        "square",
        "Write a function square(x) that returns x multiplied by itself.",
        (("square(3)", "9"), ("square(-2)", "4")),
        "(x):\n    return x * x",
        accept={0: C2},
        correct_stages=((0, C2),),
        buggy_bodies={
            (0, GEN): "(x):\n    return 2 * x",
            (0, D1): "(x):\n    return x ** 3",
            (0, D2): "(x):\n    return x",
            (0, D3): "(x):\n    return abs(x)",
            (0, C1): "(x):\n    return x * x + 1",
        },
        designed=_standard_designed("square", "square(4)", "16", "square(5)", "square(6)"),
    )

    scripts["sp07"] = _script(
        "sp07",
        "half",
        "Write a function half(x) that returns the integer half of an even "
        "nonnegative integer x.",
        (("half(8)", "4"), ("half(0)", "0")),
        "(x):\n    return x // 2",
        accept={0: C3},
        correct_stages=((0, C3),),
        buggy_bodies={
            (0, GEN): "(x):\n    return x * 2",
            (0, D1): "(x):\n    return x - 2",
            (0, D2): "(x):\n    return x",
            (0, D3): "(x):\n    return x % 2",
            (0, C1): "(x):\n    return x // 2 + 1",
            (0, C2): "(x):\n    return (x + 1) // 2",
        },
        designed=_standard_designed("half", "half(10)", "5", "half(6)", "half(4)"),
    )

    scripts["sp08"] = _script(
        "sp08",
        "area",
        "Write a function area(w, h) that returns the area of a w-by-h rectangle.",
        (("area(2, 3)", "6"), ("area(5, 1)", "5")),
        "(w, h):\n    return w * h",
        accept={0: None},
        buggy_bodies={
            (0, GEN): "(w, h):\n    return w + h",
            (0, D1): "(w, h):\n    return w * h - 1",
            (0, D2): "(w, h):\n    return 2 * (w + h)",
            (0, D3): "(w, h):\n    return w * w",
            (0, C1): "(w, h):\n    return h",
            (0, C2): "(w, h):\n    return w",
            (0, C3): "(w, h):\n    return 0",
        },
        designed=_standard_designed("area", "area(3, 3)", "9", "area(2, 2)", "area(4, 2)"),
    )

    # Checker false-accept: the generated program is wrong but gets accepted.
    scripts["sp09"] = _script(
        "sp09",
        "mean2",
        "Write a function mean2(a, b) that returns the arithmetic mean of a and b.",
        (("mean2(2, 4)", "3"), ("mean2(0, 10)", "5")),
        "(a, b):\n    return (a + b) / 2",
        accept={0: GEN},
        buggy_bodies={(0, GEN): "(a, b):\n    return a + b // 2"},
        designed=_standard_designed("mean2", "mean2(1, 3)", "2", "mean2(6, 2)", "mean2(8, 2)"),
    )

    # Designer emits duplicates, a visible-identical test and an unparsable line.
    scripts["sp10"] = _script(
        "sp10",
        "concat",
        "Write a function concat(a, b) that returns the two strings a and b "
        "joined together.",
        (("concat('a', 'b')", "'ab'"), ("concat('', 'x')", "'x'")),
        "(a, b):\n    return a + b",
        accept={0: D1},
        correct_stages=((0, D1),),
        buggy_bodies={(0, GEN): "(a, b):\n    return b + a"},
        designed=(
            ("assert concat('x', 'y') == 'xy'", True),
            ("assert concat('q', 'r') == \"__boom__\"", True),
            ("assert concat('s', 't') == \"__bad__\"", False),
        ),
        designer_rounds=(
            (
                "assert concat('x', 'y') == 'xy'",
                "assert concat('x', 'y') == 'xy'",
                "assert concat('a', 'b') == 'ab'",
                "assert concat(2 == 3",
                "assert concat('q', 'r') == \"__boom__\"",
            ),
            (
                "assert concat('x', 'y') == 'xy'",
                "assert concat('s', 't') == \"__bad__\"",
            ),
        ),
    )

    for script in scripts.values():
        if not script.designer_rounds:
            lines = tuple(line for line, _ in script.designed)
            script.designer_rounds = (lines, lines[:2])
    return scripts


def diversified_scripts() -> dict[str, ProblemScript]:
    """Problems exercising the cross-progression selection rule (P=3)."""
    scripts = {}
    scripts["dp01"] = _script(
        "dp01",
        "triple",
        "Write a function triple(x) that returns three times x.",
        (("triple(2)", "6"), ("triple(1)", "3")),
        "(x):\n    return 3 * x",
        accept={0: None, 1: GEN, 2: D1},
        correct_stages=((1, GEN), (2, D1)),
        buggy_bodies={
            (0, GEN): "(x):\n    return x",
            (0, D1): "(x):\n    return x + 3",
            (0, D2): "(x):\n    return x * 2",
            (0, D3): "(x):\n    return x ** 3",
            (0, C1): "(x):\n    return 3",
            (0, C2): "(x):\n    return -3 * x",
            (0, C3): "(x):\n    return 0",
            (2, GEN): "(x):\n    return x + x",
        },
        designed=_standard_designed("triple", "triple(4)", "12", "triple(5)", "triple(7)"),
    )
    scripts["dp02"] = _script(
        "dp02",
        "parity",
        "Write a function parity(n) that returns 'even' for even n and 'odd' "
        "for odd n.",
        (("parity(2)", "'even'"), ("parity(3)", "'odd'")),
        "(n):\n    return 'even' if n % 2 == 0 else 'odd'",
        accept={0: None, 1: None, 2: None},
        buggy_bodies={
            (p, s): f"(n):\n    return 'odd'  # variant p{p} {s}"
            for p in range(3)
            for s in (GEN, D1, D2, D3, C1, C2, C3)
        },
        designed=_standard_designed("parity", "parity(4)", "'even'", "parity(6)", "parity(8)"),
    )
    for script in scripts.values():
        lines = tuple(line for line, _ in script.designed)
        script.designer_rounds = (lines, lines[:2])
    return scripts


def write_benchmark(scripts: dict[str, ProblemScript], path: Path) -> None:
    """Write the scenario problems as an mbpp-style benchmark file."""
    with path.open("w", encoding="utf-8") as handle:
        for pid in sorted(scripts):
            script = scripts[pid]
            record = {
                "task_id": pid,
                "text": script.statement,
                "code": script.canonical,
                "test_list": [
                    f"assert {call} == {expected}" for call, expected in script.visible
                ],
            }
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def ablation_matrix() -> list[WorkflowConfig]:
    """All 16 combinations of the four workflow switches."""
    configs = []
    for cqc, tqc, clarifier, revert in itertools.product(
        (CqcMode.IMAGINED, CqcMode.DISABLED), (True, False), (True, False), (True, False)
    ):
        configs.append(
            WorkflowConfig(
                progressions=1,
                debug_epochs=3,
                clarifier_attempts=3,
                designer_rounds=2,
                designer_batch=6,
                cqc_mode=cqc,
                use_tqc=tqc,
                use_clarifier=clarifier,
                use_revert=revert,
            )
        )
    return configs


def structural_config(**overrides) -> WorkflowConfig:
    base = dict(
        progressions=1,
        debug_epochs=3,
        clarifier_attempts=3,
        designer_rounds=2,
        designer_batch=6,
    )
    base.update(overrides)
    return WorkflowConfig(**base)


def diversified_config(**overrides) -> WorkflowConfig:
    return structural_config(progressions=3, **overrides)


def config_key(config: WorkflowConfig) -> str:
    return json.dumps(config.to_dict(), sort_keys=True)


def record_corpus(
    scripts: dict[str, ProblemScript],
    benchmark_path: Path,
    exchanges_dir: Path,
    configs: list[WorkflowConfig],
) -> dict[str, dict[str, object]]:
    """Run every config against the scripted model, recording replay fixtures.

    Returns the traces of the recording runs keyed by config (canonical JSON)
    and problem id; replay runs must reproduce them byte for byte.
    """
    problems = load_benchmark(benchmark_path, BenchmarkFlavor.MBPP)
    backend = RecordBackend(ScriptedBackend(scripts), exchanges_dir)
    services = Services(
        backend=backend,
        executor=ExecutionClient(STUB_RUNNER),
        templates=default_templates(),
    )
    traces: dict[str, dict[str, object]] = {}
    for config in configs:
        per_problem = traces.setdefault(config_key(config), {})
        for problem in problems:
            _, trace = run_diversified(problem, config, services)
            per_problem[problem.id] = trace
    return traces
