"""Trace CSV and metrics JSON serialization."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import typing
from typing import Iterable, Sequence

from .pipeline import Metrics, TraceRecord

COLUMNS = tuple(f.name for f in dataclasses.fields(TraceRecord))


def format_float(x: float | None) -> str:
    if x is None:
        return ""
    return format(x, ".9g")


def trace_to_csv(trace: Iterable[TraceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for rec in trace:
        w.writerow(
            [v if isinstance(v, str) else format_float(v) for v in dataclasses.astuple(rec)]
        )
    return buf.getvalue()


def write_trace_csv(trace: Sequence[TraceRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(trace_to_csv(trace))


def read_trace_csv(text: str) -> list[TraceRecord]:
    hints = typing.get_type_hints(TraceRecord)
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected trace header: {header}")
    out = []
    for row in reader:
        kwargs = {}
        for name, cell in zip(COLUMNS, row):
            if hints[name] is str:
                kwargs[name] = cell
            else:
                kwargs[name] = float(cell) if cell != "" else None
        out.append(TraceRecord(**kwargs))
    return out


def metrics_to_json(m: Metrics) -> str:
    return json.dumps(m.to_dict(), indent=2, sort_keys=True) + "\n"
