"""Z-scores, event windows, day-over-day change tables and detector ranking."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import date, timedelta
from importlib import resources
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .series import MetricSeries

N_PATTERNS = 16


class AnalyticsError(ValueError):
    pass


class MissingDatesError(AnalyticsError):
    def __init__(self, missing: Sequence[date]):
        self.missing = list(missing)
        super().__init__("series lacks dates: " + ", ".join(d.isoformat() for d in self.missing))


@dataclass(frozen=True)
class PopulationStats:
    mean: float
    std: float


def zscore_series(series: MetricSeries) -> tuple[MetricSeries, PopulationStats]:
    """Standardise against the whole series, using the population deviation."""
    x = series.values
    if len(x) < 2:
        raise AnalyticsError(f"series {series.name!r} needs at least 2 points")
    mu = float(x.mean())
    sigma = float(x.std())
    if sigma == 0.0:
        raise AnalyticsError(f"constant series {series.name!r}")
    z = (x - mu) / sigma
    return MetricSeries(series.name, series.dates, z), PopulationStats(mu, sigma)


def flag_anomalies(zseries: MetricSeries, threshold: float = 3.0) -> list[date]:
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    hits = np.abs(zseries.values) >= threshold
    return [d for d, hit in zip(zseries.dates, hits) if hit]


@dataclass(frozen=True)
class EventSpec:
    start: date
    end: date
    name: str = ""

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"event starts after it ends: {self.start} > {self.end}")

    @property
    def label(self) -> str:
        return self.name or self.start.isoformat()

    def day(self, offset: int) -> date:
        """Calendar date of ``D+offset`` (``offset > 0``) or ``D-|offset|``."""
        if offset == 0:
            raise ValueError("D+0 is not defined; event days are excluded")
        if offset < 0:
            return self.start + timedelta(days=offset)
        return self.end + timedelta(days=offset)


def window_labels(radius: int = 15) -> tuple[str, ...]:
    return tuple(f"D-{k}" for k in range(radius, 0, -1)) + tuple(
        f"D+{k}" for k in range(1, radius + 1)
    )


def _label_offsets(radius: int) -> list[int]:
    return list(range(-radius, 0)) + list(range(1, radius + 1))


@dataclass(frozen=True, eq=False)
class EventWindow:
    event: EventSpec
    labels: tuple[str, ...]
    dates: tuple[date, ...]
    values: np.ndarray

    def __getitem__(self, label: str) -> float:
        return float(self.values[self.labels.index(label)])


def extract_event_window(
    series: MetricSeries, event: EventSpec, radius: int = 15
) -> EventWindow:
    if radius < 1:
        raise ValueError("radius must be at least 1")
    days = [event.day(k) for k in _label_offsets(radius)]
    missing = [d for d in days if d not in series]
    if missing:
        raise MissingDatesError(missing)
    return EventWindow(
        event, window_labels(radius), tuple(days), np.array([series[d] for d in days])
    )


@dataclass(frozen=True, eq=False)
class ChangeTable:
    """Percent change per window day (rows) and pattern (columns P1..P16).

    Cells hold unrounded percentages; NaN marks an undefined change
    (a pattern rising from zero).
    """

    labels: tuple[str, ...]
    values: np.ndarray
    event: EventSpec | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.labels), N_PATTERNS):
            raise AnalyticsError(f"expected {len(self.labels)}x16 cells, got {values.shape}")
        object.__setattr__(self, "values", values)

    def cell(self, label: str, pattern: int) -> float:
        return float(self.values[self.labels.index(label), pattern - 1])

    def rounded(self) -> np.ndarray:
        """Integer percentages (half away from zero), NaN kept for undefined cells."""
        v = self.values
        return np.sign(v) * np.floor(np.abs(v) + 0.5)


def _percent_change(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    out = np.full(np.broadcast(prev, cur).shape, np.nan)
    nonzero = prev != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[nonzero] = (100.0 * (cur - prev) / prev)[nonzero]
    out[(prev == 0) & (cur == 0)] = 0.0
    return out


def daily_change_table(windows: Sequence[EventWindow]) -> ChangeTable:
    """Day-over-day percent change of each pattern's window.

    ``windows[p]`` is the window of pattern ``p + 1``. The first row is 0 by
    definition and ``D+1`` is compared against ``D-1``.
    """
    if len(windows) != N_PATTERNS:
        raise AnalyticsError(f"need {N_PATTERNS} windows, got {len(windows)}")
    labels = windows[0].labels
    if any(w.labels != labels for w in windows):
        raise AnalyticsError("window labels differ between patterns")
    counts = np.column_stack([w.values for w in windows]).astype(float)
    table = np.zeros_like(counts)
    table[1:] = _percent_change(counts[:-1], counts[1:])
    return ChangeTable(labels, table, windows[0].event)


@dataclass(frozen=True)
class DetectorScore:
    pattern: int
    score: float  # mean |change| at D+1; NaN if undefined for every event
    rebound: float  # mean |change| at D+2


def _mean_abs(cells: Iterable[float]) -> float:
    vals = [abs(c) for c in cells if not math.isnan(c)]
    return sum(vals) / len(vals) if vals else math.nan


def rank_detectors(tables: Sequence[ChangeTable]) -> list[DetectorScore]:
    """Patterns ordered by how hard they are disrupted on D+1.

    Ties on the score are broken by the D+2 rebound (larger first), then by
    pattern number. Undefined cells are left out of the means.
    """
    if not tables:
        raise AnalyticsError("no change tables to rank")
    scores = [
        DetectorScore(
            pattern=p,
            score=_mean_abs(t.cell("D+1", p) for t in tables),
            rebound=_mean_abs(t.cell("D+2", p) for t in tables),
        )
        for p in range(1, N_PATTERNS + 1)
    ]

    def key(s: DetectorScore):
        score = -math.inf if math.isnan(s.score) else s.score
        rebound = -math.inf if math.isnan(s.rebound) else s.rebound
        return (-score, -rebound, s.pattern)

    return sorted(scores, key=key)


# --- file formats -----------------------------------------------------------

def _fmt_percent(x: float) -> str:
    return "NA" if math.isnan(x) else str(int(x))


def write_change_table(table: ChangeTable, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["day", *(f"P{p}" for p in range(1, N_PATTERNS + 1))])
    for label, row in zip(table.labels, table.rounded()):
        writer.writerow([label, *(_fmt_percent(x) for x in row)])


def read_change_table(stream: IO[str], event: EventSpec | None = None) -> ChangeTable:
    """Read a change table; cells may carry a trailing ``%`` and ``NA``."""
    reader = csv.reader(stream)
    header = [h.strip() for h in next(reader)]
    expected = ["day", *(f"P{p}" for p in range(1, N_PATTERNS + 1))]
    if header != expected:
        raise AnalyticsError(f"unexpected change-table header {header}")
    labels, rows = [], []
    for row in reader:
        if not row:
            continue
        labels.append(row[0].strip())
        rows.append([_parse_percent(c) for c in row[1:]])
    return ChangeTable(tuple(labels), np.array(rows, dtype=float), event)


def _parse_percent(cell: str) -> float:
    cell = cell.strip().rstrip("%")
    return math.nan if cell in ("NA", "") else float(cell)


def ranking_to_json(ranking: Sequence[DetectorScore]) -> list[dict]:
    def num(x):
        return None if math.isnan(x) else x

    return [{"pattern": s.pattern, "score": num(s.score), "rebound": num(s.rebound)} for s in ranking]


def write_ranking(ranking: Sequence[DetectorScore], stream: IO[str]) -> None:
    json.dump(ranking_to_json(ranking), stream, indent=2)
    stream.write("\n")


def read_event_calendar(stream: IO[str]) -> list[EventSpec]:
    """Events from a ``year,start,end`` CSV with ISO dates."""
    return [
        EventSpec(date.fromisoformat(r["start"]), date.fromisoformat(r["end"]), r["year"])
        for r in csv.DictReader(stream)
    ]


def write_event_calendar(events: Iterable[EventSpec], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["year", "start", "end"])
    for e in events:
        writer.writerow([e.name or e.start.year, e.start.isoformat(), e.end.isoformat()])


def default_event_calendar() -> list[EventSpec]:
    """Eid al-Fitr holidays 2006-2015 (two days each)."""
    text = resources.files("banknet.data").joinpath("eid_al_fitr_2006_2015.csv").read_text()
    return read_event_calendar(io.StringIO(text))


def census_windows(
    census: Mapping[str, MetricSeries], event: EventSpec, radius: int = 15
) -> list[EventWindow]:
    """Windows of the sixteen census series ``P1``..``P16`` around one event."""
    return [extract_event_window(census[f"P{p}"], event, radius) for p in range(1, N_PATTERNS + 1)]
