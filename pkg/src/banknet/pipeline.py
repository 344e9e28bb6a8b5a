"""End-to-end analysis of a sequence of daily graphs."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from typing import Callable, Iterable, Sequence

from .analytics import (
    AnalyticsError,
    ChangeTable,
    DetectorScore,
    EventSpec,
    MissingDatesError,
    PopulationStats,
    census_windows,
    daily_change_table,
    flag_anomalies,
    rank_detectors,
    zscore_series,
)
from .graph import DailyGraph
from .metrics import (
    DegenerateGraphError,
    MacroMetrics,
    SeriesReport,
    assemble_series,
    compute_macro_metrics,
)
from .series import MetricSeries
from .triads import CensusError, TriadCensus, assemble_census_series, triad_census

logger = logging.getLogger(__name__)


@dataclass
class DayResult:
    date: date
    metrics: MacroMetrics | None
    census: TriadCensus | None
    problems: list[tuple[str, str]] = field(default_factory=list)


def analyze_graph(graph: DailyGraph) -> DayResult:
    result = DayResult(graph.date, None, None)
    try:
        result.metrics = compute_macro_metrics(graph)
    except DegenerateGraphError as exc:
        result.problems.append(("metrics", str(exc)))
    try:
        result.census = triad_census(graph)
    except CensusError as exc:
        result.problems.append(("census", str(exc)))
    return result


def _apply(fn: Callable, items: Iterable, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=32))


def analyze_days(
    graphs: Iterable[DailyGraph], workers: int = 1
) -> list[DayResult]:
    """Per-day metrics and census; output order follows the input."""
    return _apply(analyze_graph, graphs, workers)


@dataclass
class PipelineResult:
    days: list[DayResult]
    metric_series: dict[str, MetricSeries]
    census_series: dict[str, MetricSeries]
    zscores: dict[str, MetricSeries]
    stats: dict[str, PopulationStats]
    flags: dict[str, list[date]]
    change_tables: dict[str, ChangeTable]
    skipped_events: dict[str, list[date]]
    ranking: list[DetectorScore] | None
    report: SeriesReport

    @property
    def all_series(self) -> dict[str, MetricSeries]:
        return {**self.metric_series, **self.census_series}

    @property
    def warnings(self) -> bool:
        return bool(self.skipped_events)


def summarize(
    days: Sequence[DayResult],
    events: Sequence[EventSpec] = (),
    *,
    radius: int = 15,
    threshold: float = 3.0,
) -> PipelineResult:
    """Series, z-scores, anomaly flags, change tables and detector ranking."""
    report = SeriesReport()
    for d in days:
        for what, msg in d.problems:
            report.add(d.date, what, msg)
    metric_series = assemble_series([d.metrics for d in days if d.metrics], report)
    census_series = assemble_census_series([d.census for d in days if d.census])

    zscores, stats, flags = {}, {}, {}
    for name, series in {**metric_series, **census_series}.items():
        try:
            z, st = zscore_series(series)
        except AnalyticsError as exc:
            report.add(None, name, str(exc))
            continue
        zscores[name], stats[name] = z, st
        flags[name] = flag_anomalies(z, threshold)

    tables, skipped = {}, {}
    for event in events:
        try:
            windows = census_windows(census_series, event, radius)
        except MissingDatesError as exc:
            logger.warning("skipping event %s: %s", event.label, exc)
            skipped[event.label] = exc.missing
            continue
        tables[event.label] = daily_change_table(windows)
    ranking = rank_detectors(list(tables.values())) if tables else None
    return PipelineResult(
        list(days), metric_series, census_series, zscores, stats, flags, tables, skipped,
        ranking, report,
    )


def run_pipeline(
    graphs: Iterable[DailyGraph],
    events: Sequence[EventSpec] = (),
    *,
    radius: int = 15,
    threshold: float = 3.0,
    workers: int = 1,
) -> PipelineResult:
    return summarize(analyze_days(graphs, workers), events, radius=radius, threshold=threshold)
