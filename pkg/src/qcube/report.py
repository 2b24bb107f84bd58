"""Deterministic CSV/JSON serialization of experiment reports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class Report:
    kind: str
    columns: list
    rows: list = field(default_factory=list)
    trends: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return table_csv(self.columns, self.rows)

    def trends_csv(self) -> str:
        cols = list(self.trends[0]) if self.trends else []
        return table_csv(cols, self.trends)

    def to_json(self) -> str:
        payload = dict(
            kind=self.kind, columns=self.columns, rows=self.rows,
            trends=self.trends, metadata=self.metadata,
        )
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        return cls(d["kind"], d["columns"], d["rows"], d["trends"], d["metadata"])

    def __eq__(self, other):
        return isinstance(other, Report) and self.to_json() == other.to_json()


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def emit_report(report: Report, fmt: str, path=None) -> str:
    """Render ``report`` as csv or json; write to ``path`` when given."""
    if fmt == "csv":
        text = report.to_csv()
    elif fmt == "json":
        text = report.to_json()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def load_report(path) -> Report:
    return Report.from_json(Path(path).read_text())


def histogram_csv(bins) -> str:
    return table_csv(["bin_left", "bin_right", "count"], [
        dict(bin_left=f"{a:.15g}", bin_right=f"{b:.15g}", count=c) for a, b, c in bins
    ])
