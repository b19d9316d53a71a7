"""CSV and JSON report writers.

CSV output follows RFC 4180 (CRLF line endings, mandatory header row).
Floats are rendered with repr (shortest round-trip form), so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return _cell(value.item())
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_json(path, payload) -> Path:
    path = Path(path)

    def default(obj):
        if hasattr(obj, "item"):
            return obj.item()
        if hasattr(obj, "tolist"):
            return obj.tolist()
        raise TypeError(f"not JSON serializable: {type(obj).__name__}")

    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")
    return path
