"""
Leaderboard rendering: one row per system, best value per metric column marked.
"""

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

# column -> True when lower is better
METRIC_DIRECTIONS = {
    "bias_ssc": True,
    "rstd": True,
    "macro_f1": False,
    "ood": False,
}
HEADERS = {
    "system": "System",
    "bias_ssc": "Bias-SSC↓",
    "rstd": "RStd↓",
    "macro_f1": "Macro-F1↑",
    "ood": "OOD↑",
    "notes": "Notes",
}
CSV_COLUMNS = ("system", "bias_ssc", "rstd", "macro_f1", "ood", "notes", "best")
FORMATS = ("markdown", "csv")


@dataclass(frozen=True)
class LeaderboardRow:
    system: str
    bias_ssc: Optional[float]
    rstd: Optional[float]
    macro_f1: Optional[float]
    ood: Optional[float]
    notes: str = ""


def row_from_report(report, notes=""):
    """Build a leaderboard row from a MetricReport; no metric is entered by hand."""
    if not notes and report.n_failed:
        notes = f"{report.n_failed} failed"
    return LeaderboardRow(
        system=report.system,
        bias_ssc=report.bias_ssc,
        rstd=report.rstd,
        macro_f1=report.macro_f1,
        ood=report.ood_macro_f1,
        notes=notes,
    )


def best_cells(rows):
    """
    Metric columns where each row holds the best value.

    With a single row nothing is marked. Ties all count as best.

    Returns:
        list of set: per row, the names of its best columns.
    """
    marks = [set() for _ in rows]
    if len(rows) < 2:
        return marks
    for column, lower_is_better in METRIC_DIRECTIONS.items():
        values = [getattr(row, column) for row in rows]
        defined = [v for v in values if v is not None]
        if len(defined) < 2:
            continue
        best = min(defined) if lower_is_better else max(defined)
        for i, value in enumerate(values):
            if value is not None and value == best:
                marks[i].add(column)
    return marks


def _markdown(rows):
    marks = best_cells(rows)
    header = [HEADERS[c] for c in ("system", *METRIC_DIRECTIONS, "notes")]
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] + ["---:"] * len(METRIC_DIRECTIONS) + ["---"]) + "|"]
    for row, best in zip(rows, marks):
        cells = [row.system]
        for column in METRIC_DIRECTIONS:
            value = getattr(row, column)
            text = "–" if value is None else f"{value:.1f}"
            cells.append(f"**{text}**" if column in best else text)
        cells.append(row.notes)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def leaderboard_frame(rows):
    marks = best_cells(rows)
    frame = pd.DataFrame(
        [
            {
                "system": row.system,
                **{c: np.nan if getattr(row, c) is None else float(getattr(row, c)) for c in METRIC_DIRECTIONS},
                "notes": row.notes,
                "best": ";".join(c for c in METRIC_DIRECTIONS if c in best),
            }
            for row, best in zip(rows, marks)
        ],
        columns=list(CSV_COLUMNS),
    )
    return frame


def render_leaderboard(rows, fmt="markdown"):
    """
    Render rows as a markdown table or RFC 4180 CSV.

    Markdown rounds to one decimal and bolds the best cell per column. CSV
    keeps full precision, uses CRLF line endings, and names the best
    columns of each row in a `best` field.

    Args:
        rows (list of LeaderboardRow): At least one row.
        fmt (str): 'markdown' or 'csv'.

    Returns:
        str
    """
    if not rows:
        raise ValueError("I need at least one row to render a leaderboard.")
    if fmt not in FORMATS:
        raise ValueError(f"Unknown leaderboard format '{fmt}'. Use one of {list(FORMATS)}.")
    if fmt == "markdown":
        return _markdown(list(rows))
    buffer = io.StringIO()
    leaderboard_frame(list(rows)).to_csv(buffer, index=False, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    return buffer.getvalue()


def _optional(value):
    return None if pd.isna(value) else float(value)


def parse_leaderboard_csv(document):
    """Read a CSV leaderboard back into rows (the `best` column is recomputable and dropped)."""
    frame = pd.read_csv(
        io.StringIO(document),
        float_precision="round_trip",
        dtype={"system": str, "notes": str, "best": str},
        keep_default_na=False,
        na_values={c: [""] for c in METRIC_DIRECTIONS},
    )
    return [
        LeaderboardRow(
            system=record["system"],
            bias_ssc=_optional(record["bias_ssc"]),
            rstd=_optional(record["rstd"]),
            macro_f1=_optional(record["macro_f1"]),
            ood=_optional(record["ood"]),
            notes=record["notes"],
        )
        for record in frame.to_dict(orient="records")
    ]


def per_entity_table(reports):
    """
    Plot-ready per-entity breakdown: one row per (system, entity).

    Returns:
        pandas.DataFrame with columns system, entity_id, bias_ssc, rstd, macro_f1, ood.
    """
    records = []
    for report in reports:
        for entity_id, scores in report.per_entity_breakdown.items():
            records.append({
                "system": report.system,
                "entity_id": entity_id,
                **{c: scores.get(c) for c in ("bias_ssc", "rstd", "macro_f1")},
                "ood": report.ood_per_entity.get(entity_id),
            })
    return pd.DataFrame(records, columns=["system", "entity_id", "bias_ssc", "rstd", "macro_f1", "ood"])
