"""Plain-text tables rendered from a results document."""

from __future__ import annotations

from typing import Any


def _pct(value: float | None) -> str:
    return f"{value * 100:.2f}" if value is not None else "-"


def _num(value: float | None) -> str:
    if value is None:
        return "-"
    return f"{value:.2f}" if isinstance(value, float) else str(value)


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines)


def _stage_columns(document: dict[str, Any]) -> list[str]:
    config = document.get("config", {})
    epochs = int(config.get("debug_epochs", 3))
    attempts = int(config.get("clarifier_attempts", 3))
    columns = ["generated"]
    columns += [f"debugged({e})" for e in range(1, epochs + 1)]
    columns += [f"clarified({a})" for a in range(1, attempts + 1)]
    return columns


def render_stage_table(document: dict[str, Any]) -> str:
    """Pass@1 of the would-be submission at each workflow step."""
    stage_pass = document["aggregate"]["stage_pass"]
    headers = ["Single Attempt", "Prog. Gen."]
    keys = ["single", "generated"]
    for column in _stage_columns(document):
        if column == "generated":
            continue
        if column.startswith("debugged"):
            headers.append(f"Debug {column[column.index('(') + 1 : -1]}")
        else:
            headers.append(f"Clarifier {column[column.index('(') + 1 : -1]}")
        keys.append(column)
    headers.append("Final")
    keys.append("final")
    rows = []
    if document["problems"]:
        rows.append([_pct(stage_pass.get(key)) for key in keys])
    return "Pass@1 by workflow step\n" + _table(headers, rows)


def render_cqc_table(document: dict[str, Any]) -> str:
    """Code-checker confusion statistics per workflow step."""
    by_stage = document["aggregate"].get("cqc_by_stage") or {}
    overall = document["aggregate"].get("cqc")
    if not by_stage and not overall:
        return "Code quality checker\n(no verdicts recorded; checker disabled)"
    columns = [c for c in _stage_columns(document) if c in by_stage]
    headers = ["Statistic"] + columns + ["Overall"]
    metrics = [
        ("Actual positive", "actual_positive_rate"),
        ("Accuracy", "accuracy"),
        ("Precision", "precision"),
        ("Recall", "recall"),
        ("% of final output", "pct_final_output"),
    ]
    rows = []
    for title, key in metrics:
        row = [title]
        for column in columns:
            row.append(_pct(by_stage[column].get(key)))
        row.append(_pct(overall.get(key)) if overall else "-")
        rows.append(row)
    return "Code quality checker\n" + _table(headers, rows)


def render_tqc_table(document: dict[str, Any]) -> str:
    """Test-checker population counts and classification statistics."""
    tqc = document["aggregate"].get("tqc") or {}
    stats = tqc.get("stats")
    rows = [
        ["Total problems", str(tqc.get("total_problems", 0))],
        ["Covered programs", str(tqc.get("covered_programs", 0))],
        ["Total tests", str(tqc.get("total_tests", 0))],
        ["Total triggered tests", str(tqc.get("triggered_tests", 0))],
    ]
    if stats:
        rows += [
            ["Actual positive", _pct(stats.get("actual_positive_rate"))],
            ["Accuracy", _pct(stats.get("accuracy"))],
            ["Precision", _pct(stats.get("precision"))],
            ["Recall", _pct(stats.get("recall"))],
            ["F1", _num(stats.get("f1"))],
        ]
    return "Test quality checker\n" + _table(["Statistic", "Value"], rows)


def render_token_table(document: dict[str, Any]) -> str:
    """Mean per-problem token usage per agent."""
    tokens = document["aggregate"].get("tokens") or {}
    headers = ["Agent", "Input mean", "Output mean", "Input total", "Output total"]
    rows = []
    for agent, usage in (tokens.get("per_agent") or {}).items():
        rows.append(
            [
                agent,
                _num(usage.get("input_mean")),
                _num(usage.get("output_mean")),
                str(usage.get("input_total", 0)),
                str(usage.get("output_total", 0)),
            ]
        )
    total = tokens.get("total") or {}
    if rows:
        rows.append(
            [
                "total",
                _num(total.get("input_mean")),
                _num(total.get("output_mean")),
                str(total.get("input_total", 0)),
                str(total.get("output_total", 0)),
            ]
        )
    return "Token usage\n" + _table(headers, rows)


def render_report(document: dict[str, Any]) -> str:
    passk = document["aggregate"]["pass_at_k"]
    summary = (
        f"problems: {len(document['problems'])}    "
        f"pass@1: {_pct(document['aggregate']['pass_at_1'] if document['problems'] else None)}    "
        f"pass@{passk['k']} ({passk['policy']}): "
        f"{_pct(passk['value'] if document['problems'] else None)}"
    )
    sections = [
        summary,
        render_stage_table(document),
        render_cqc_table(document),
        render_tqc_table(document),
        render_token_table(document),
    ]
    return "\n\n".join(sections) + "\n"
