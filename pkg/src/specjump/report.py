"""Deterministic record serialization.

Identical record lists must serialize to identical bytes: newlines are
always "\n", floats are printed with 17 significant digits (enough to
round-trip a double), and column order is the key order of the first
record.  No timestamps, no locale, no environment leakage.
"""

from __future__ import annotations

from typing import IO, Mapping, Sequence

from .errors import EmptyRecords

FORMATS = ("csv", "json")


def format_float(x: float) -> str:
    """17-significant-digit decimal form of a double, round-trip safe."""
    return f"{float(x):.17g}"


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _json_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            return "null"  # strict JSON has no nan/inf
        return format_float(value)
    if isinstance(value, int):
        return str(value)
    escaped = (str(value).replace("\\", "\\\\").replace('"', '\\"')
               .replace("\n", "\\n").replace("\t", "\\t"))
    return f'"{escaped}"'


def emit_report(records: Sequence[Mapping], fmt: str, target) -> None:
    """Serialize records to CSV or JSON with a stable column order.

    ``records`` is a non-empty sequence of flat mappings sharing a schema;
    the column order is the key order of the first record.  ``target`` is a
    path or an open text file.  Raises EmptyRecords on an empty sequence and
    ValueError on an unknown format.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {FORMATS}")
    if not records:
        raise EmptyRecords("refusing to emit a report with no records")
    columns = list(records[0].keys())
    for i, rec in enumerate(records):
        if list(rec.keys()) != columns:
            raise ValueError(f"record {i} columns {list(rec.keys())} != {columns}")

    own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
    fh: IO[str] = open(target, "w", newline="") if own else target
    try:
        if fmt == "csv":
            fh.write(",".join(columns) + "\n")
            for rec in records:
                fh.write(",".join(_cell(rec[c]) for c in columns) + "\n")
        else:
            fh.write("[\n")
            for i, rec in enumerate(records):
                body = ", ".join(f'"{c}": {_json_scalar(rec[c])}' for c in columns)
                comma = "," if i + 1 < len(records) else ""
                fh.write(f"  {{{body}}}{comma}\n")
            fh.write("]\n")
    finally:
        if own:
            fh.close()


def emit_single_json(record: Mapping, target) -> None:
    """One flat mapping as a JSON object, same determinism rules."""
    own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
    fh: IO[str] = open(target, "w", newline="") if own else target
    try:
        fh.write("{\n")
        items = list(record.items())
        for i, (key, value) in enumerate(items):
            comma = "," if i + 1 < len(items) else ""
            fh.write(f'  "{key}": {_json_scalar(value)}{comma}\n')
        fh.write("}\n")
    finally:
        if own:
            fh.close()
