"""Serialization of run records.

Two formats: ``table`` is tab-separated text with exactly one header line,
``machine`` is canonical JSON (sorted keys, compact separators).  Floats go
through ``repr`` so that identical runs produce byte-identical files.
"""

from __future__ import annotations

import sys
from pathlib import Path

from .runner import RunRecord

FORMATS = ("table", "machine")


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr even for numpy scalars
    if isinstance(value, int):
        return str(int(value))
    text = str(value)
    if "\t" in text or "\n" in text:
        raise ValueError(f"cell value contains a delimiter: {text!r}")
    return text


def render_table(record: RunRecord) -> str:
    lines = ["\t".join(record.columns)]
    for row in record.rows:
        lines.append("\t".join(format_cell(row[c]) for c in record.columns))
    return "\n".join(lines) + "\n"


def render_machine(record: RunRecord) -> str:
    return record.canonical_json() + "\n"


def emit(record: RunRecord, out: "Path | None", fmt: str = "table") -> "Path | None":
    """Write the record to ``out`` (or stdout when ``out`` is None)."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    text = render_table(record) if fmt == "table" else render_machine(record)
    if out is None:
        sys.stdout.write(text)
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
