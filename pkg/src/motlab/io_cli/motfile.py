"""MOTChallenge-style text files.

Canonical line: ``frame,id,left,top,width,height,conf,class,visibility``.
Reading also accepts 7 and 8 fields (class and visibility default to 1) and the
10-field layout whose 9th field is unused and 10th is visibility. Frames are
1-based on disk; frame tables in memory are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

FIELDS = ("frame", "id", "left", "top", "width", "height", "confidence", "class", "visibility")
FILE_KINDS = ("gt", "det", "pred")


class MotFormatError(ValueError):
    def __init__(self, line: int, field: str, message: str, source: str = ""):
        self.line, self.field, self.source = line, field, source
        where = f"{source}:" if source else "line "
        super().__init__(f"{where}{line}: field '{field}': {message}")


@dataclass(frozen=True)
class MotRecord:
    frame: int
    id: int
    left: float
    top: float
    width: float
    height: float
    confidence: float = 1.0
    cls: int = 1
    visibility: float = 1.0

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.left, self.top, self.width, self.height)

    def validate(self, kind: str = "pred") -> "MotRecord":
        if self.frame < 1:
            raise ValueError("frame must be >= 1")
        if self.width < 0 or self.height < 0:
            raise ValueError("width and height must be >= 0")
        if kind == "gt" and not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        return self


def _num(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r}")
    return repr(x)


def format_record(r: MotRecord) -> str:
    return ",".join([str(int(r.frame)), str(int(r.id)), _num(r.left), _num(r.top), _num(r.width),
                     _num(r.height), _num(r.confidence), str(int(r.cls)), _num(r.visibility)])


def write_mot(records: Iterable[MotRecord], path, kind: str = "pred") -> None:
    """Write records sorted by (frame, id); ties keep their input order."""
    records = sorted(records, key=lambda r: (r.frame, r.id))
    for r in records:
        r.validate(kind)
    text = "".join(format_record(r) + "\n" for r in records)
    Path(path).write_text(text, encoding="ascii")


def _int_field(text: str, line: int, name: str, source: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise MotFormatError(line, name, f"not a number: {text!r}", source) from None
    if not value.is_integer():
        raise MotFormatError(line, name, f"not an integer: {text!r}", source)
    return int(value)


def _float_field(text: str, line: int, name: str, source: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MotFormatError(line, name, f"not a number: {text!r}", source) from None
    if not math.isfinite(value):
        raise MotFormatError(line, name, f"not finite: {text!r}", source)
    return value


def parse_line(text: str, line: int = 1, kind: str = "pred", source: str = "") -> MotRecord:
    parts = [p.strip() for p in text.split(",")]
    if not 7 <= len(parts) <= 10:
        raise MotFormatError(line, "line", f"expected 7-10 comma-separated fields, got {len(parts)}", source)
    frame = _int_field(parts[0], line, "frame", source)
    ident = _int_field(parts[1], line, "id", source)
    left, top, width, height, conf = (_float_field(parts[k], line, FIELDS[k], source) for k in range(2, 7))
    cls = _int_field(parts[7], line, "class", source) if len(parts) >= 8 else 1
    if len(parts) == 9:
        vis = _float_field(parts[8], line, "visibility", source)
    elif len(parts) == 10:
        vis = _float_field(parts[9], line, "visibility", source)
    else:
        vis = 1.0
    if frame < 1:
        raise MotFormatError(line, "frame", "must be >= 1", source)
    if width < 0:
        raise MotFormatError(line, "width", "must be >= 0", source)
    if height < 0:
        raise MotFormatError(line, "height", "must be >= 0", source)
    if kind == "gt" and not 0.0 <= vis <= 1.0:
        raise MotFormatError(line, "visibility", "must lie in [0, 1]", source)
    return MotRecord(frame, ident, left, top, width, height, conf, cls, vis)


def parse_mot(text: str, kind: str = "pred", source: str = "") -> list[MotRecord]:
    if kind not in FILE_KINDS:
        raise ValueError(f"kind must be one of {FILE_KINDS}")
    out = []
    for k, raw in enumerate(text.splitlines(), start=1):
        if raw.strip():
            out.append(parse_line(raw, k, kind, source))
    return sorted(out, key=lambda r: (r.frame, r.id))


def read_mot(path, kind: str = "pred") -> list[MotRecord]:
    path = Path(path)
    return parse_mot(path.read_text(encoding="ascii"), kind, str(path))


# ---------------------------------------------------------------- frame tables

def records_to_table(records: Sequence[MotRecord], n_frames: Optional[int] = None,
                     min_visibility: Optional[float] = None) -> list[list[tuple]]:
    """0-based ``[(id, box), ...]`` per frame, optionally keeping visibility > cutoff."""
    last = max((r.frame for r in records), default=0)
    n = last if n_frames is None else n_frames
    if last > n:
        raise ValueError(f"record at frame {last} lies beyond the {n}-frame range")
    table: list[list[tuple]] = [[] for _ in range(n)]
    for r in records:
        if min_visibility is not None and not r.visibility > min_visibility:
            continue
        table[r.frame - 1].append((r.id, r.box))
    return table


def table_to_records(table: Sequence[Sequence[tuple]]) -> list[MotRecord]:
    return [MotRecord(f + 1, int(i), *map(float, box)) for f, rows in enumerate(table) for i, box in rows]
