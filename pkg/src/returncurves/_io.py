"""Strict two-column CSV input and small file helpers."""
from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def read_xy_csv(path, min_rows: int = 1) -> np.ndarray:
    """Read a comma-separated file with header ``x,y`` into an ``(n, 2)`` array.

    Every row must hold exactly two finite numbers; anything else is an
    error naming the offending row and column.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8") from exc
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None:
        raise DataError(f"{path}: empty file")
    if [h.strip() for h in header] != ["x", "y"]:
        raise DataError(f"{path}: header must be 'x,y', got {','.join(header)!r}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected 2")
        vals = []
        for col, field in zip(("x", "y"), row):
            try:
                v = float(field)
            except ValueError:
                raise DataError(f"{path}: row {lineno}, column {col}: {field!r} is not a number") from None
            if not np.isfinite(v):
                raise DataError(f"{path}: row {lineno}, column {col}: non-finite value {field!r}")
            vals.append(v)
        rows.append(vals)
    if len(rows) < min_rows:
        raise DataError(f"{path}: {len(rows)} data rows, need at least {min_rows}")
    return np.array(rows, dtype=float).reshape(-1, 2)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path
