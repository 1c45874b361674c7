"""Report rendering: a results table in markdown, the full matrix as CSV/JSON.

The markdown table keeps the canonical column order ARS, Faith., Help.,
Doc. Rel., one row per model. The ARS column shows the binary
answer-reference mean; the ordinal variant, when it was run, gets its own
trailing column.
"""
from __future__ import annotations

import csv
import io

from irag.evals.metrics import (
    ARS_BINARY,
    ARS_ORDINAL,
    DOC_RELEVANCE,
    FAITHFULNESS,
    HELPFULNESS,
)
from irag.evals.runner import EvalReport

FORMATS = ("markdown", "csv", "json")

_TABLE_COLUMNS = (
    ("ARS", ARS_BINARY),
    ("Faith.", FAITHFULNESS),
    ("Help.", HELPFULNESS),
    ("Doc. Rel.", DOC_RELEVANCE),
)


def render_report(report: EvalReport | list[EvalReport], format: str = "markdown") -> str:
    reports = report if isinstance(report, list) else [report]
    if format == "markdown":
        return _render_markdown(reports)
    if format == "csv":
        return _render_csv(reports)
    if format == "json":
        return _render_json(reports)
    raise ValueError(f"unknown report format {format!r} (expected one of {FORMATS})")


def _render_markdown(reports: list[EvalReport]) -> str:
    with_ordinal = any(ARS_ORDINAL in r.metrics for r in reports)
    headers = ["Model"] + [label for label, _ in _TABLE_COLUMNS]
    if with_ordinal:
        headers.append("ARS (ordinal)")

    lines = ["# Evaluation Report", ""]
    for report in reports:
        rate = "n/a" if report.abstention_rate is None else f"{report.abstention_rate:.2f}"
        lines.append(
            f"Dataset: {report.dataset_tag} | Runs: {report.runs} | "
            f"Invalid cells: {report.invalid_cells} | Abstention rate: {rate}"
        )
    lines.append("")
    lines.append("| " + " | ".join(headers) + " |")
    lines.append("|" + "---|" * len(headers))
    for report in reports:
        if not report.cells:
            continue  # an empty report contributes no data row
        row = [report.model]
        for _, metric in _TABLE_COLUMNS:
            row.append(_format_mean(report.means.get(metric)))
        if with_ordinal:
            row.append(_format_mean(report.means.get(ARS_ORDINAL)))
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _format_mean(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.2f}"


def _render_csv(reports: list[EvalReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["model", "dataset_tag", "qa_id", "run_index", "metric", "value", "valid",
         "abstained", "justification"]
    )
    for report in reports:
        for cell in report.cells:
            writer.writerow(
                [report.model, report.dataset_tag, cell.qa_id, cell.run_index,
                 cell.metric, cell.value, cell.valid, cell.abstained,
                 cell.justification]
            )
    return buffer.getvalue()


def _render_json(reports: list[EvalReport]) -> str:
    import json

    if len(reports) == 1:
        return reports[0].to_json()
    return json.dumps(
        [r.to_dict() for r in reports], indent=2, sort_keys=True, ensure_ascii=False
    )
