"""Deterministic text serialization shared by logs, reports, and the CLI.

Floats are written with 17 significant digits ('.' decimal), which
round-trips every finite 64-bit value exactly.  CSV output follows
RFC-4180 quoting with LF line endings, so identical inputs always produce
identical bytes.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence


def format_float(x: float) -> str:
    return f"{x:.17g}"


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue().encode("utf-8")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_bytes(csv_bytes(header, rows))
