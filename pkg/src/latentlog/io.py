"""Delimited-text tables in and out.

Input values are kept as the original text so that ``t`` and ``o`` columns are
written back byte-for-byte; computed columns use 15 significant digits.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError

__all__ = ["Table", "read_table", "write_table", "write_columns", "format_value"]

logger = logging.getLogger(__name__)


@dataclass
class Table:
    header: list
    rows: list
    t: np.ndarray
    o: np.ndarray
    delimiter: str = ","
    t_col: str = "t"
    o_col: str = None  # None when o was defaulted to 1

    def __len__(self):
        return len(self.rows)


def format_value(x):
    """15 significant digits; NaN (undefined) becomes an empty field."""
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".15g")


def _parse(text, column, row):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"column {column!r}: cannot parse {text!r} as a number", row=row) from None
    if not math.isfinite(value):
        raise DataError(f"column {column!r}: value {text!r} is not finite", row=row)
    if value < 0:
        raise DataError(f"column {column!r}: negative value {text!r}", row=row)
    return value


def _column(header, name, has_header):
    if has_header:
        if name not in header:
            raise DataError(f"column {name!r} not found; available columns: {', '.join(header)}")
        return header.index(name)
    try:
        return int(name)
    except (TypeError, ValueError):
        raise DataError(f"without a header row columns are 0-based indices, got {name!r}") from None


def read_table(path, t_col="t", o_col=None, delimiter=",", header=True):
    """Read measurements and exposures from a delimited file.

    ``o_col=None`` uses an ``o`` column if there is one and otherwise sets
    every exposure to 1 (with a warning), i.e. the data are treated as rates.
    Data rows are numbered from 1 in error messages.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            records = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if header:
        if not records:
            raise DataError(f"{path} is empty")
        names, records = [c.strip() for c in records[0]], records[1:]
    else:
        width = max((len(r) for r in records), default=0)
        names = [str(i) for i in range(width)]
        if t_col == "t":
            t_col = "0"
    ti = _column(names, t_col, header)
    if o_col is None:
        default_o = "o" if header else "1"
        if default_o in names:
            o_col = default_o
        else:
            logger.warning("no exposure column in %s; using o = 1 for every row", path)
    oi = _column(names, o_col, header) if o_col is not None else None

    t = np.empty(len(records))
    o = np.ones(len(records))
    for k, rec in enumerate(records):
        if len(rec) != len(names):
            raise DataError(f"expected {len(names)} fields, found {len(rec)}", row=k + 1)
        t[k] = _parse(rec[ti].strip(), t_col, k + 1)
        if oi is not None:
            o[k] = _parse(rec[oi].strip(), o_col, k + 1)
        if t[k] > 0 and o[k] == 0:
            raise DataError("positive measurement with zero exposure", row=k + 1)
    logger.info("read %d rows from %s", len(records), path)
    return Table(names, records, t, o, delimiter, t_col, o_col)


def write_columns(path, columns, delimiter=","):
    """Write a dict of equal-length columns; floats get 15 significant digits."""
    names = list(columns)
    data = [np.asarray(columns[k]) for k in names]
    n = len(data[0]) if data else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            w.writerow([_cell(col[i]) for col in data])


def _cell(v):
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format_value(v)


def write_table(table, result, path):
    """Input columns verbatim, then ``z``, ``lag``, ``nlag`` per row."""
    lag = result.lag
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=table.delimiter, lineterminator="\n")
        w.writerow(list(table.header) + ["z", "lag", "nlag"])
        for rec, z, lg in zip(table.rows, result.z, lag):
            w.writerow(list(rec) + [format_value(z), format_value(lg), format_value(z)])
