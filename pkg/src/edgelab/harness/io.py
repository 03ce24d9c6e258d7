"""Headered CSV output with exact float round-trips."""

from __future__ import annotations

import csv
import math
from pathlib import Path

__all__ = ["CSV_SCHEMAS", "emit_csv", "read_csv"]

CSV_SCHEMAS = {
    "edge": ("trial", "N", "lambda_max", "rescaled", "seed_lo", "seed_hi"),
    "necessity": ("trial", "N", "lambda_max", "exceeds3", "witness_found"),
    "rigidity": ("trial", "N", "rig_max", "count_sup"),
    "delocalization": ("trial", "N", "deloc", "norm"),
    "tracking": ("trial", "N", "gap", "gap_ok", "rank_E"),
    "tw": ("s", "F1", "F2"),
}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def emit_csv(rows, path, columns) -> Path:
    """Write ``rows`` (mappings) with the given column order.

    Raises:
        OSError: with the offending path in the message.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(row[c]) for c in columns])
    except OSError as exc:
        raise OSError(f"writing {path}: {exc.strerror or exc}") from exc
    return path


def _parse(v: str):
    try:
        n = int(v)
    except ValueError:
        return float(v)
    # "-0" is the float -0.0, not an int
    return n if str(n) == v else float(v)


def read_csv(path):
    """Read a file written by :func:`emit_csv`; returns ``(columns, rows)``."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        columns = tuple(next(r))
        rows = [dict(zip(columns, (_parse(v) for v in line))) for line in r]
    return columns, rows
