"""Time-series data model, CSV ingestion and date-keyed joins.

Dates are plain :class:`datetime.date` values (proleptic Gregorian, no
timezone). The numeric time axis used by every interpolator is the number
of days since 1970-01-01.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

EPOCH = date(1970, 1, 1)
_EPOCH_ORDINAL = EPOCH.toordinal()


class SeriesError(ValueError):
    """Invalid series content or an impossible date operation."""


class CsvParseError(SeriesError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def date_to_ordinal(d: date) -> int:
    """Days elapsed since 1970-01-01 (negative before the epoch)."""
    return d.toordinal() - _EPOCH_ORDINAL


def ordinal_to_date(n: int) -> date:
    return date.fromordinal(int(n) + _EPOCH_ORDINAL)


def daily_calendar(start: date, end: date) -> list[date]:
    """Every calendar day from ``start`` to ``end`` inclusive."""
    if start > end:
        raise SeriesError(f"calendar start {start} is after end {end}")
    span = (end - start).days
    return [start + timedelta(days=i) for i in range(span + 1)]


def _frozen(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Ordered ``(date, value)`` observations of a single variable."""

    name: str
    dates: tuple[date, ...]
    values: np.ndarray
    unit: str = ""

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.ndim != 1 or len(self.values) != len(self.dates):
            raise SeriesError(f"{self.name}: dates and values differ in length")
        if not np.all(np.isfinite(self.values)):
            raise SeriesError(f"{self.name}: non-finite value")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise SeriesError(f"{self.name}: dates not strictly increasing at {cur}")

    @classmethod
    def from_pairs(cls, name: str, pairs: Iterable[tuple[date, float]], unit: str = "") -> "TimeSeries":
        pairs = list(pairs)
        return cls(name, tuple(d for d, _ in pairs), [v for _, v in pairs], unit)

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def ordinals(self) -> np.ndarray:
        return np.array([date_to_ordinal(d) for d in self.dates], dtype=np.int64)

    @property
    def start(self) -> date:
        return self.dates[0]

    @property
    def end(self) -> date:
        return self.dates[-1]

    def pairs(self) -> list[tuple[date, float]]:
        return list(zip(self.dates, self.values.tolist()))

    def with_values(self, dates: Sequence[date], values: Iterable[float]) -> "TimeSeries":
        return TimeSeries(self.name, tuple(dates), values, self.unit)


@dataclass(frozen=True)
class AlignedDataset:
    """Paired ``(date, x, y)`` rows; the regression input."""

    dates: tuple[date, ...]
    x: np.ndarray
    y: np.ndarray
    x_name: str = "x"
    y_name: str = "y"

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "y", _frozen(self.y))
        if not (len(self.dates) == len(self.x) == len(self.y)):
            raise SeriesError("aligned columns differ in length")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise SeriesError("aligned dataset contains a missing value")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise SeriesError(f"aligned dates not strictly increasing at {cur}")

    def __len__(self) -> int:
        return len(self.dates)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("date,x,y\n")
        for d, x, y in zip(self.dates, self.x.tolist(), self.y.tolist()):
            buf.write(f"{d.isoformat()},{x!r},{y!r}\n")
        return buf.getvalue()


Source = Union[bytes, str, IO[bytes], IO[str]]


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        raw = source
    elif isinstance(source, str):
        return source.lstrip("\ufeff")
    else:
        raw = source.read()
        if isinstance(raw, str):
            return raw.lstrip("\ufeff")
    return raw.decode("utf-8-sig")


def parse_csv(source: Source, value_column: str, name: str | None = None, unit: str = "") -> TimeSeries:
    """Parse a ``date,<value_column>`` CSV into a date-sorted :class:`TimeSeries`.

    Rows whose value cell is empty are skipped and counted in a warning.
    Malformed dates, non-numeric or non-finite values and duplicate dates
    raise :class:`CsvParseError` carrying the 1-based line number.
    """
    reader = csv.reader(io.StringIO(_read_text(source)))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise CsvParseError("empty input") from None
    if "date" not in header:
        raise CsvParseError("header has no 'date' column", line=1)
    if value_column not in header:
        raise CsvParseError(f"header has no {value_column!r} column", line=1)
    di, vi = header.index("date"), header.index(value_column)

    seen: dict[date, int] = {}
    rows: list[tuple[date, float]] = []
    skipped = 0
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) <= max(di, vi):
            raise CsvParseError("too few columns", line=line_no)
        raw_date, raw_value = row[di].strip(), row[vi].strip()
        try:
            d = date.fromisoformat(raw_date)
        except ValueError:
            raise CsvParseError(f"invalid date {raw_date!r}", line=line_no) from None
        if len(raw_date) != 10:
            raise CsvParseError(f"date {raw_date!r} is not YYYY-MM-DD", line=line_no)
        if raw_value == "":
            skipped += 1
            continue
        try:
            v = float(raw_value)
        except ValueError:
            raise CsvParseError(f"non-numeric value {raw_value!r}", line=line_no) from None
        if not math.isfinite(v):
            raise CsvParseError(f"non-finite value {raw_value!r}", line=line_no)
        if d in seen:
            raise CsvParseError(f"duplicate date {d} (first seen on line {seen[d]})", line=line_no)
        seen[d] = line_no
        rows.append((d, v))

    if skipped:
        msg = f"{name or value_column}: skipped {skipped} row(s) with an empty value"
        logger.warning(msg)
        warnings.warn(msg, stacklevel=2)
    rows.sort(key=lambda r: r[0])
    return TimeSeries.from_pairs(name or value_column, rows, unit)


def read_csv(path: str | Path, value_column: str, name: str | None = None, unit: str = "") -> TimeSeries:
    with open(path, "rb") as fh:
        return parse_csv(fh, value_column, name=name, unit=unit)


def to_csv(ts: TimeSeries, value_column: str = "value") -> str:
    """Serialize so that ``parse_csv(to_csv(ts, c), c)`` reproduces ``ts``."""
    lines = [f"date,{value_column}"]
    lines += [f"{d.isoformat()},{v!r}" for d, v in ts.pairs()]
    return "\n".join(lines) + "\n"


def inner_join(a: TimeSeries, b: TimeSeries) -> AlignedDataset:
    """One row per date present in both series; ``x`` from ``a``, ``y`` from ``b``."""
    b_index = {d: i for i, d in enumerate(b.dates)}
    keep_a, keep_b = [], []
    for i, d in enumerate(a.dates):
        j = b_index.get(d)
        if j is not None:
            keep_a.append(i)
            keep_b.append(j)
    if not keep_a:
        msg = f"no common dates between {a.name!r} and {b.name!r}"
        logger.warning(msg)
        warnings.warn(msg, stacklevel=2)
    return AlignedDataset(
        tuple(a.dates[i] for i in keep_a),
        a.values[keep_a],
        b.values[keep_b],
        x_name=a.name,
        y_name=b.name,
    )
