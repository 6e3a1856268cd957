"""Plain CSV reading and writing with fixed header schemas.

Floats are written with ``repr`` (shortest round-trip form) and integers
without a decimal point, so reading a file back and writing it again gives
the same bytes.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

__all__ = ["CSVFormatError", "SCHEMAS", "format_value", "write_table", "read_table", "read_series"]

SCHEMAS = {
    "series": ("x",),
    "estimates": ("scale", "z0", "shat", "lo", "hi", "sigma2"),
    "intervals": ("scale", "z0", "r_lo", "r_hi", "u_lo", "u_hi", "statistic", "threshold",
                  "rejected"),
    "montecarlo": ("z0", "median", "q05", "q95"),
    "metrics": ("mse", "mad", "runtime"),
    "identities": ("identity", "J", "residual", "tolerance", "status"),
}


class CSVFormatError(ValueError):
    """Missing, ragged or non-numeric CSV input."""


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v) or math.isinf(v):
            return repr(v)
        return repr(v + 0.0)        # normalises -0.0
    return str(v)


def write_table(path, header, rows):
    """Write ``rows`` under ``header`` with ``\\n`` line endings."""
    header = tuple(header)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            row = tuple(row)
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([format_value(v) for v in row])


def _parse(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path, header=None):
    """Read a CSV file into ``(header, columns)``.

    ``columns`` maps each name to a list of parsed values (``int`` where the
    text is an integer, ``float`` for numbers, ``str`` otherwise).  With
    ``header`` given the file must carry exactly that header.

    Raises
    ------
    CSVFormatError
        On a missing file, an empty file, a header mismatch or ragged rows.
    """
    path = Path(path)
    if not path.is_file():
        raise CSVFormatError(f"{path}: no such file")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CSVFormatError(f"{path}: empty file")
    names = tuple(h.strip() for h in rows[0])
    if header is not None and names != tuple(header):
        raise CSVFormatError(f"{path}: header {','.join(names)!r}, expected {','.join(header)!r}")
    cols = {n: [] for n in names}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(names):
            raise CSVFormatError(f"{path}:{i}: {len(row)} fields, expected {len(names)}")
        for n, text in zip(names, row):
            cols[n].append(_parse(text.strip()))
    return names, cols


def read_series(path):
    """Read a one-column ``x`` series file as a float array."""
    _, cols = read_table(path, SCHEMAS["series"])
    values = cols["x"]
    bad = [i for i, v in enumerate(values, start=2) if isinstance(v, str)]
    if bad:
        raise CSVFormatError(f"{path}:{bad[0]}: not a number")
    x = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(x)):
        raise CSVFormatError(f"{path}: non-finite values")
    return x
