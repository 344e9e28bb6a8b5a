from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class MetricSeries:
    """Date-indexed scalar measurements, strictly increasing in date."""

    name: str
    dates: tuple[date, ...]
    values: np.ndarray
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) != len(self.dates):
            raise ValueError("dates and values must be 1-d and of equal length")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError(f"series {self.name!r}: dates must be strictly increasing")
        values.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {d: i for i, d in enumerate(self.dates)})

    @classmethod
    def from_points(cls, name: str, points: Iterable[tuple[date, float]]) -> MetricSeries:
        points = sorted(points)
        return cls(name, tuple(d for d, _ in points), np.array([v for _, v in points], dtype=float))

    @property
    def points(self) -> list[tuple[date, float]]:
        return list(zip(self.dates, self.values.tolist()))

    def __len__(self) -> int:
        return len(self.dates)

    def __contains__(self, day: date) -> bool:
        return day in self._index

    def __getitem__(self, day: date) -> float:
        return float(self.values[self._index[day]])

    def __eq__(self, other):
        if not isinstance(other, MetricSeries):
            return NotImplemented
        return (
            self.name == other.name
            and self.dates == other.dates
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def write_series_table(
    series: Sequence[MetricSeries],
    stream: IO[str],
    *,
    columns: Sequence[str] | None = None,
    fmt=repr,
) -> None:
    """Write several series as one ``date,<col>...`` table (outer join on date).

    Dates missing from a series are written as empty fields.
    """
    columns = list(columns or [s.name for s in series])
    days = sorted({d for s in series for d in s.dates})
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["date", *columns])
    for day in days:
        writer.writerow([day.isoformat(), *(fmt(s[day]) if day in s else "" for s in series)])


def read_series_table(stream: IO[str]) -> dict[str, MetricSeries]:
    reader = csv.reader(stream)
    header = next(reader)
    cols: Mapping[str, list] = {name: [] for name in header[1:]}
    for row in reader:
        day = date.fromisoformat(row[0])
        for name, cell in zip(header[1:], row[1:]):
            if cell != "":
                cols[name].append((day, float(cell)))
    return {name: MetricSeries.from_points(name, pts) for name, pts in cols.items()}
