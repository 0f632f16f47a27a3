"""Deterministic CSV / JSON-lines writers with atomic file replacement."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np


def csv_number(value) -> str:
    """Format a cell: 9 significant digits for floats, plain text otherwise."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return f"{v:.9g}"
    return str(value)


def json_safe(value):
    """Convert numpy scalars/arrays to JSON types; NaN/Inf become null."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [json_safe(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([csv_number(v) for v in row])
    return buf.getvalue()


def jsonl_text(objects) -> str:
    return "".join(json.dumps(json_safe(obj), allow_nan=False) + "\n" for obj in objects)


def write_text(path, text: str):
    """Write ``text`` to ``path`` via temp file + rename; ``None`` or ``-`` means stdout."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
