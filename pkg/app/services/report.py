"""Renders MetricsRows as markdown tables, CSV or one JSON object per line."""

import csv
import io

from enum import Enum

from pydantic import BaseModel

from .metrics import EmptyInput, MetricsRow
from .pipeline.state import Scenario

UNDEFINED = "—"
DECIMALS = 6
CSV_COLUMNS = ["model", "scenario", "ac", "ba", "pr", "re", "f1", "coverage"]
METRIC_FIELDS = ["ac", "ba", "pr", "re", "f1", "coverage"]

SCENARIO_TITLES = {
    Scenario.RAW: "Results on prediction from truncated content",
    Scenario.SUMMARY: "Results on prediction from summary",
}


class ReportFormat(str, Enum):
    MARKDOWN = "md"
    CSV = "csv"
    JSONL = "jsonl"


class ReportMeta(BaseModel):
    """Run settings disclosed under each markdown table."""
    budget: int | None = None
    estimator: str | None = None


def format_metric(value: float | None) -> str:
    return UNDEFINED if value is None else f"{value:.{DECIMALS}f}"


def report(rows: list[MetricsRow], fmt: ReportFormat | str = ReportFormat.MARKDOWN, meta: ReportMeta | None = None) -> str:
    """
    Renders metric rows in the requested format.

    Markdown gets one table per scenario (truncated content first) followed by a
    usage table; CSV has the columns model,scenario,ac,ba,pr,re,f1,coverage; jsonl
    has one MetricsRow object per line. Metrics are written with 6 decimals and
    undefined ones as "—" (null in jsonl).

    Raises:
        EmptyInput: If there are no rows.
    """
    if not rows:
        raise EmptyInput("Nothing to report")

    fmt = ReportFormat(fmt)
    if fmt == ReportFormat.CSV:
        return _csv(rows)
    if fmt == ReportFormat.JSONL:
        return "".join(row.model_dump_json() + "\n" for row in rows)
    return _markdown(rows, meta or ReportMeta())


def _csv(rows: list[MetricsRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([row.backend_id, row.scenario.value] + [format_metric(getattr(row, f)) for f in METRIC_FIELDS])
    return buffer.getvalue()


def _table(header: list[str], body: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(cells) + " |" for cells in body]
    return lines


def _markdown(rows: list[MetricsRow], meta: ReportMeta) -> str:
    lines: list[str] = []
    for scenario in Scenario:
        scenario_rows = [row for row in rows if row.scenario == scenario]
        if not scenario_rows:
            continue

        if lines:
            lines.append("")
        lines.append(f"## {SCENARIO_TITLES[scenario]}")
        lines.append("")
        lines += _table(
            ["Model", "AC", "BA", "PR", "RE", "F1", "Coverage"],
            [[row.backend_id] + [format_metric(getattr(row, f)) for f in METRIC_FIELDS] for row in scenario_rows],
        )
        lines.append("")

        sizes = sorted({row.sample_size for row in scenario_rows})
        lines.append(f"Sample size: {', '.join(str(size) for size in sizes)} emails.")
        if meta.budget is not None:
            lines.append(f"Truncation budget: {meta.budget} tokens ({meta.estimator}).")

        lines.append("")
        lines.append("### Usage")
        lines.append("")
        lines += _usage_table(scenario, scenario_rows)

    return "\n".join(lines) + "\n"


def _usage_table(scenario: Scenario, rows: list[MetricsRow]) -> list[str]:
    header = ["Model", "Prompt tokens", "Completion tokens"]
    if scenario == Scenario.SUMMARY:
        header += ["Summary prompt tokens", "Summary completion tokens"]
    header.append("Failed requests")

    body = []
    for row in rows:
        cells = [row.backend_id, str(row.prompt_tokens), str(row.completion_tokens)]
        if scenario == Scenario.SUMMARY:
            cells += [str(row.summary_prompt_tokens), str(row.summary_completion_tokens)]
        body.append(cells + [str(row.failed)])
    return _table(header, body)
