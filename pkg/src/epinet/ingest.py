"""Parse wide-format cumulative case CSVs and apply the region selection filter.

The expected input layout is the familiar wide table:

    Province/State,Country/Region,Lat,Long,1/22/20,1/23/20,...

with one row per region and one date column per day.  Regions are keyed by
country plus optional province ("Country" or "Country: Province"); provinces
are never aggregated into their country.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

from .errors import (
    CsvFormatError,
    CsvParseError,
    DateRangeError,
    DuplicateKeyError,
)

DEFAULT_MIN_CUMULATIVE = 100_000
DEFAULT_START = date(2020, 1, 22)
DEFAULT_END = date(2022, 5, 29)

EXPECTED_META_COLUMNS = ("Province/State", "Country/Region", "Lat", "Long")


@dataclass(frozen=True, order=True)
class RegionKey:
    country: str
    province: str | None = None

    @property
    def display(self) -> str:
        if self.province:
            return f"{self.country}: {self.province}"
        return self.country

    def __str__(self) -> str:
        return self.display


@dataclass
class CaseSeries:
    """One region's dated cumulative positive-case counts (daily cadence)."""

    key: RegionKey
    dates: list[date]
    cumulative: list[int]

    def __post_init__(self):
        if len(self.dates) != len(self.cumulative):
            raise ValueError("dates and cumulative must have equal length")
        if len(self.dates) < 2:
            raise ValueError("a case series needs at least 2 days")
        for a, b in zip(self.dates, self.dates[1:]):
            if b - a != timedelta(days=1):
                raise ValueError(f"dates must be consecutive days, got {a} -> {b}")

    def value_at(self, when: date) -> int:
        idx = (when - self.dates[0]).days
        if idx < 0 or idx >= len(self.dates):
            raise DateRangeError(
                f"{when} outside available range {self.dates[0]}..{self.dates[-1]}"
            )
        return self.cumulative[idx]


def _parse_header_date(text: str, column: int) -> date:
    text = text.strip()
    for fmt in ("%m/%d/%y", "%Y-%m-%d"):
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise CsvFormatError(f"unparseable date {text!r} in header column {column}")


def parse_cases_csv(data: bytes | str) -> list[CaseSeries]:
    """Parse a wide-format cumulative case CSV into one CaseSeries per row.

    Header dates may be M/D/YY (the upstream feed) or ISO YYYY-MM-DD
    (synthetic fixtures).  Lat/Long are ignored.  Raises CsvFormatError for a
    bad header, CsvParseError (with coordinates) for a bad cell, and
    DuplicateKeyError when two rows key the same region.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(data))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError("empty input: no header row")

    if len(header) < 5:
        raise CsvFormatError(
            f"header has {len(header)} columns, need the 4 metadata columns plus dates"
        )
    for i, expected in enumerate(EXPECTED_META_COLUMNS):
        if header[i].strip() != expected:
            raise CsvFormatError(
                f"header column {i + 1} is {header[i]!r}, expected {expected!r}"
            )
    dates = [_parse_header_date(cell, i + 5) for i, cell in enumerate(header[4:])]

    out: list[CaseSeries] = []
    seen: set[RegionKey] = set()
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise CsvFormatError(
                f"row {row_no} has {len(row)} fields, header has {len(header)}"
            )
        province = row[0].strip() or None
        country = row[1].strip()
        key = RegionKey(country=country, province=province)
        if key in seen:
            raise DuplicateKeyError(f"duplicate region key {key.display!r} at row {row_no}")
        seen.add(key)
        counts = []
        for col, cell in enumerate(row[4:], start=5):
            try:
                counts.append(int(cell.strip()))
            except ValueError:
                raise CsvParseError(
                    f"non-numeric case count {cell!r}", row=row_no, column=col
                )
        out.append(CaseSeries(key=key, dates=list(dates), cumulative=counts))
    return out


def select_regions(
    series: list[CaseSeries],
    min_cumulative: int = DEFAULT_MIN_CUMULATIVE,
    as_of: date = DEFAULT_END,
) -> list[CaseSeries]:
    """Keep regions with at least ``min_cumulative`` cases as of ``as_of``.

    If ``as_of`` is past a series' last date it is clamped to the last
    available date (with a warning), so shorter fixtures still work.
    """
    kept = []
    for s in series:
        when = as_of
        if when > s.dates[-1]:
            warnings.warn(
                f"{s.key.display}: as_of {as_of} past last date {s.dates[-1]}, clamping",
                stacklevel=2,
            )
            when = s.dates[-1]
        if when < s.dates[0]:
            continue
        if s.value_at(when) >= min_cumulative:
            kept.append(s)
    return kept


def restrict_date_range(
    series: CaseSeries,
    start: date = DEFAULT_START,
    end: date = DEFAULT_END,
) -> CaseSeries:
    """Return the inclusive [start, end] sub-series."""
    if start > end:
        raise DateRangeError(f"start {start} after end {end}")
    if start < series.dates[0] or end > series.dates[-1]:
        raise DateRangeError(
            f"requested {start}..{end} outside available "
            f"{series.dates[0]}..{series.dates[-1]}"
        )
    i = (start - series.dates[0]).days
    j = (end - series.dates[0]).days + 1
    return CaseSeries(
        key=series.key,
        dates=series.dates[i:j],
        cumulative=series.cumulative[i:j],
    )


def write_long_csv(series: list[CaseSeries], stream) -> None:
    """Write the normalized long-format CSV ``region,date,cumulative``."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["region", "date", "cumulative"])
    for s in series:
        for d, n in zip(s.dates, s.cumulative):
            writer.writerow([s.key.display, d.isoformat(), n])


def to_wide_csv(series: list[CaseSeries]) -> str:
    """Serialize back to the wide layout (shared date axis required)."""
    if not series:
        return ",".join(EXPECTED_META_COLUMNS) + "\n"
    dates = series[0].dates
    for s in series[1:]:
        if s.dates != dates:
            raise ValueError("wide serialization needs a shared date axis")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(EXPECTED_META_COLUMNS) + [d.strftime("%-m/%-d/%y") for d in dates])
    for s in series:
        writer.writerow(
            [s.key.province or "", s.key.country, "", ""] + [str(n) for n in s.cumulative]
        )
    return buf.getvalue()
