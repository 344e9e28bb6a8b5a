"""Macro properties of a daily graph: size, edge count, average distance, density."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .graph import DailyGraph, build_graph
from .ingest import TransactionRecord
from .series import MetricSeries

logger = logging.getLogger(__name__)

METRIC_NAMES = ("nodes", "edges", "avg_distance", "density")

# recorded alongside metric outputs
DISTANCE_CONVENTION = "unweighted hops; unreachable ordered pairs excluded from the mean"


class DegenerateGraphError(ValueError):
    pass


@dataclass(frozen=True)
class MacroMetrics:
    date: object
    node_count: int
    edge_count: int
    average_distance: float | None  # None when no ordered pair is reachable
    density: float


def hop_distance_totals(adjacency: np.ndarray) -> tuple[int, int]:
    """Sum of shortest-path hop counts and number of reachable ordered pairs.

    Runs a breadth-first search from every node at once: row ``i`` of the
    frontier holds the nodes first reached from ``i`` at the current depth.
    """
    adj = np.asarray(adjacency, dtype=bool)
    n = adj.shape[0]
    step = adj.astype(np.float32)
    reached = adj | np.eye(n, dtype=bool)
    frontier = adj.copy()
    count = int(adj.sum())
    total, pairs, depth = count, count, 1
    while count:
        depth += 1
        frontier = (frontier.astype(np.float32) @ step > 0) & ~reached
        reached |= frontier
        count = int(frontier.sum())
        total += depth * count
        pairs += count
    return total, pairs


def compute_macro_metrics(graph: DailyGraph) -> MacroMetrics:
    n, m = graph.node_count, graph.edge_count
    if n < 2:
        raise DegenerateGraphError(f"degenerate graph: {n} node(s)")
    total, pairs = hop_distance_totals(graph.adjacency())
    return MacroMetrics(
        date=graph.date,
        node_count=n,
        edge_count=m,
        average_distance=total / pairs if pairs else None,
        density=m / (n * (n - 1)),
    )


@dataclass
class SeriesReport:
    """Days that produced no value for some series, with the reason."""

    gaps: list[tuple[date, str, str]] = field(default_factory=list)

    def add(self, day, series: str, reason: str) -> None:
        self.gaps.append((day, series, reason))

    def __bool__(self) -> bool:
        return bool(self.gaps)


def metrics_from_graphs(
    graphs: Iterable[DailyGraph], report: SeriesReport | None = None
) -> list[MacroMetrics]:
    report = report if report is not None else SeriesReport()
    out = []
    for g in graphs:
        try:
            out.append(compute_macro_metrics(g))
        except DegenerateGraphError as exc:
            report.add(g.date, "*", str(exc))
    return out


def assemble_series(
    rows: Sequence[MacroMetrics], report: SeriesReport | None = None
) -> dict[str, MetricSeries]:
    rows = sorted(rows, key=lambda r: r.date)
    dates = tuple(r.date for r in rows)
    dist = [(r.date, r.average_distance) for r in rows if r.average_distance is not None]
    if report is not None:
        for r in rows:
            if r.average_distance is None:
                report.add(r.date, "avg_distance", "no reachable pair")
    return {
        "nodes": MetricSeries("nodes", dates, np.array([r.node_count for r in rows], float)),
        "edges": MetricSeries("edges", dates, np.array([r.edge_count for r in rows], float)),
        "avg_distance": MetricSeries.from_points("avg_distance", dist),
        "density": MetricSeries("density", dates, np.array([r.density for r in rows], float)),
    }


def metrics_series(
    slices: Mapping[date, Sequence[TransactionRecord]],
    report: SeriesReport | None = None,
) -> dict[str, MetricSeries]:
    """Per-day macro metrics as four chronological series keyed by metric name."""
    graphs = (build_graph(rows) for _, rows in sorted(slices.items()))
    return assemble_series(metrics_from_graphs(graphs, report), report)


def write_metrics_csv(rows: Iterable[MacroMetrics], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["date", "nodes", "edges", "avg_distance", "density"])
    for r in sorted(rows, key=lambda r: r.date):
        dist = "" if r.average_distance is None else repr(r.average_distance)
        writer.writerow([r.date.isoformat(), r.node_count, r.edge_count, dist, repr(r.density)])


def read_metrics_csv(stream: IO[str]) -> list[MacroMetrics]:
    return [
        MacroMetrics(
            date=date.fromisoformat(row["date"]),
            node_count=int(row["nodes"]),
            edge_count=int(row["edges"]),
            average_distance=float(row["avg_distance"]) if row["avg_distance"] else None,
            density=float(row["density"]),
        )
        for row in csv.DictReader(stream)
    ]
