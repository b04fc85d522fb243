"""CSV reading and writing with provenance headers.

Numbers are written with 17 significant digits so a read/write round trip
is lossless, and ``inf``/``-inf`` stand for the extended-real values.
Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidInput

__all__ = [
    "format_number",
    "provenance_lines",
    "config_hash",
    "write_matrix",
    "read_matrix",
    "read_vector",
    "write_table",
    "read_table",
]


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def config_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def provenance_lines(config_sha256: str, seed, version: Optional[str] = None) -> list:
    """Comment lines identifying the run: config hash, seed and package version."""
    if version is None:
        from . import __version__ as version
    return [
        f"# skit {version}",
        f"# config_sha256 = {config_sha256}",
        f"# seed = {seed}",
    ]


def _dump(rows: Iterable[Sequence], header: Optional[Sequence[str]], provenance: Optional[list]) -> str:
    buf = io.StringIO()
    for line in provenance or ():
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for row in rows:
        w.writerow([format_number(v) for v in row])
    return buf.getvalue()


def write_table(path, rows, header=None, provenance=None) -> None:
    """Write rows of numbers/strings, optionally with a header row."""
    Path(path).write_text(_dump(rows, header, provenance), encoding="utf-8")


def write_matrix(path, M, header=None, provenance=None) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    write_table(path, M.tolist(), header, provenance)


def _rows(path):
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    return list(csv.reader(lines))


def _is_numeric_row(row) -> bool:
    try:
        [float(v) for v in row]
        return True
    except ValueError:
        return False


def read_table(path, header: Optional[bool] = None):
    """Return ``(header, rows)`` with rows as lists of strings.

    ``header=None`` detects a header row by whether the first row parses
    as numbers.
    """
    rows = _rows(path)
    if not rows:
        raise InvalidInput(f"{path}: no data rows")
    if header is None:
        header = not _is_numeric_row(rows[0])
    if header:
        return rows[0], rows[1:]
    return None, rows


def read_matrix(path, header: Optional[bool] = None) -> np.ndarray:
    _, rows = read_table(path, header)
    try:
        M = np.array([[float(v) for v in row] for row in rows], dtype=float)
    except ValueError as exc:
        raise InvalidInput(f"{path}: non-numeric entry ({exc})") from None
    if M.ndim != 2:
        raise InvalidInput(f"{path}: ragged rows")
    return M


def read_vector(path, header: Optional[bool] = None) -> np.ndarray:
    """A vector stored as a single row or a single column."""
    M = read_matrix(path, header)
    if M.shape[0] == 1 or M.shape[1] == 1:
        return M.ravel()
    raise InvalidInput(f"{path}: expected a single row or column, got shape {M.shape}")
