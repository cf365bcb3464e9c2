"""Deterministic report serialization.

All floating-point output is printed with enough significant digits for
lossless round-trips (17 for reports, 18 for scale-grid exports), keys
are emitted in sorted order, and no timestamps or environment markers
appear, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

REPORT_DIGITS = 17
GRID_DIGITS = 18


def fmt_float(value, digits=REPORT_DIGITS):
    v = float(value)
    if v != v:
        return '"nan"'
    if v == float("inf"):
        return '"inf"'
    if v == float("-inf"):
        return '"-inf"'
    return format(v, f".{digits}g")


def _serialize(obj, digits):
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        inner = ",".join(f'"{k}":{_serialize(v, digits)}' for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_serialize(v, digits) for v in obj) + "]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj, digits)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dump_json(obj, path, digits=REPORT_DIGITS):
    text = _serialize(obj, digits) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def write_csv(path, header, rows, digits=REPORT_DIGITS):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(format(float(v), f".{digits}g"))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def write_grid_csv(grid, path):
    """Scale grid export: columns x, W, W1, W2, err at 18 significant digits."""
    rows = zip(grid.x, grid.w, grid.w1, grid.w2, grid.err)
    return write_csv(path, ["x", "W", "W1", "W2", "err"], rows, digits=GRID_DIGITS)
