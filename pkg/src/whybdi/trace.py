"""Line-delimited trace records.

One record per line, tab-separated: step_no, kind, payload, detail. Trailing
empty fields are trimmed on write and padded back on read. The detail field
carries the rendered explanation text for explain records and the failure
reason for fail records. The format is stable and golden-file tested.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

RECORD_KINDS = ("adopt", "action", "subgoal", "explain", "fail", "done")


class TraceError(Exception):
    pass


@dataclass(frozen=True)
class TraceRecord:
    step_no: int
    kind: str
    payload: str = ""
    detail: str = ""

    def __post_init__(self) -> None:
        if self.kind not in RECORD_KINDS:
            raise ValueError(f"unknown trace record kind {self.kind!r}")


def format_record(rec: TraceRecord) -> str:
    fields = [str(rec.step_no), rec.kind, rec.payload, rec.detail]
    while fields and fields[-1] == "":
        fields.pop()
    return "\t".join(fields)


def format_trace(records: Iterable[TraceRecord]) -> str:
    lines = [format_record(r) for r in records]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_record(line: str, lineno: int = 0) -> TraceRecord:
    parts = line.rstrip("\n").split("\t")
    if len(parts) < 2 or len(parts) > 4:
        raise TraceError(f"line {lineno}: expected 2-4 tab-separated fields")
    parts += [""] * (4 - len(parts))
    try:
        step_no = int(parts[0])
    except ValueError:
        raise TraceError(f"line {lineno}: step number is not an integer") from None
    try:
        return TraceRecord(step_no, parts[1], parts[2], parts[3])
    except ValueError as exc:
        raise TraceError(f"line {lineno}: {exc}") from None


def parse_trace(text: str) -> list[TraceRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            records.append(parse_record(line, lineno))
    return records


def read_trace(path: str | Path) -> list[TraceRecord]:
    try:
        return parse_trace(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc}") from exc


def write_trace(path: str | Path, records: Iterable[TraceRecord]) -> None:
    Path(path).write_text(format_trace(records), encoding="utf-8")
