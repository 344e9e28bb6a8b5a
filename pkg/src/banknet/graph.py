"""Daily directed weighted transaction graphs.

A :class:`DailyGraph` is stored in coordinate form: sorted node labels plus
parallel ``src``/``dst``/``weight`` arrays indexing into them. Edges are
unique ordered pairs and never self-loops.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Iterable, Sequence

import numpy as np

from .ingest import TransactionRecord

DEGREE_KINDS = ("in", "out", "total", "weighted-in", "weighted-out", "weighted-total")


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DailyGraph:
    date: date | tuple[date, date] | None
    nodes: tuple[str, ...]
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    self_loops_dropped: int = 0
    self_loop_value: int = 0
    _adj: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.src, self.dst, self.weight):
            arr.setflags(write=False)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.src)

    @property
    def total_weight(self) -> int:
        return int(self.weight.sum())

    @property
    def edges(self) -> dict[tuple[str, str], int]:
        nodes = self.nodes
        return {
            (nodes[s], nodes[d]): int(w)
            for s, d, w in zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist())
        }

    def adjacency(self) -> np.ndarray:
        """Dense boolean adjacency matrix, row = origin."""
        if "bool" not in self._adj:
            a = np.zeros((self.node_count, self.node_count), dtype=bool)
            a[self.src, self.dst] = True
            a.setflags(write=False)
            self._adj["bool"] = a
        return self._adj["bool"]

    def __eq__(self, other):
        if not isinstance(other, DailyGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    __hash__ = None


def graph_from_arrays(
    day,
    nodes: Sequence[str],
    origin: np.ndarray,
    destination: np.ndarray,
    value: np.ndarray,
) -> DailyGraph:
    """Aggregate index-coded transactions into a simple graph.

    ``origin``/``destination`` index into ``nodes``. Self-loops are dropped
    and tallied; nodes that end up without any edge are removed.
    """
    origin = np.asarray(origin, dtype=np.int64)
    destination = np.asarray(destination, dtype=np.int64)
    value = np.asarray(value, dtype=np.int64)
    loops = origin == destination
    n_loops = int(loops.sum())
    loop_value = int(value[loops].sum())
    if n_loops:
        keep = ~loops
        origin, destination, value = origin[keep], destination[keep], value[keep]

    nodes = list(nodes)
    if len(origin) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return DailyGraph(day, (), empty, empty.copy(), empty.copy(), n_loops, loop_value)

    # relabel onto sorted active labels so graphs compare by label
    active = np.unique(np.concatenate([origin, destination]))
    labels = [nodes[i] for i in active]
    order = np.argsort(np.array(labels, dtype=object), kind="stable")
    remap = np.empty(len(nodes), dtype=np.int64)
    remap[active[order]] = np.arange(len(active))
    origin, destination = remap[origin], remap[destination]
    labels = tuple(labels[i] for i in order)

    n = len(labels)
    pair = origin * n + destination
    keys, inverse = np.unique(pair, return_inverse=True)
    weight = np.bincount(inverse, weights=value, minlength=len(keys)).astype(np.int64)
    return DailyGraph(day, labels, keys // n, keys % n, weight, n_loops, loop_value)


def build_graph(records: Sequence[TransactionRecord]) -> DailyGraph:
    """Build the simple directed weighted graph of one day's records."""
    days = {rec.date for rec in records}
    if len(days) > 1:
        raise GraphError(f"records span several dates: {sorted(days)}")
    day = days.pop() if days else None
    index: dict[str, int] = {}
    origin = [index.setdefault(rec.origin, len(index)) for rec in records]
    destination = [index.setdefault(rec.destination, len(index)) for rec in records]
    value = [rec.value for rec in records]
    return graph_from_arrays(day, list(index), origin, destination, value)


def merge_slices(graphs: Iterable[DailyGraph]) -> DailyGraph:
    """Union of nodes, weights summed per edge; date becomes (first, last)."""
    graphs = list(graphs)
    index: dict[str, int] = {}
    origin, destination, value = [], [], []
    days = []
    for g in graphs:
        idx = np.array([index.setdefault(v, len(index)) for v in g.nodes], dtype=np.int64)
        if g.edge_count:
            origin.append(idx[g.src])
            destination.append(idx[g.dst])
            value.append(g.weight)
        if isinstance(g.date, tuple):
            days.extend(g.date)
        elif g.date is not None:
            days.append(g.date)
    span = (min(days), max(days)) if days else None
    if not origin:
        empty = np.zeros(0, dtype=np.int64)
        return DailyGraph(span, (), empty, empty, empty)
    merged = graph_from_arrays(
        span, list(index), np.concatenate(origin), np.concatenate(destination),
        np.concatenate(value),
    )
    return merged


def degree_sequence(graph: DailyGraph, kind: str) -> np.ndarray:
    """Per-node degree of the requested kind, aligned with ``graph.nodes``."""
    if kind not in DEGREE_KINDS:
        raise GraphError(f"unknown degree kind {kind!r}; expected one of {DEGREE_KINDS}")
    n = graph.node_count
    weighted = kind.startswith("weighted")
    w = graph.weight if weighted else None
    out_deg = np.bincount(graph.src, weights=w, minlength=n).astype(np.int64)
    in_deg = np.bincount(graph.dst, weights=w, minlength=n).astype(np.int64)
    base = kind.removeprefix("weighted-")
    if base == "in":
        return in_deg
    if base == "out":
        return out_deg
    return in_deg + out_deg


def degree_distribution(graph: DailyGraph, kind: str = "weighted-total") -> dict[int, int]:
    """Histogram ``{degree: number of nodes}`` sorted by degree."""
    if graph.node_count == 0:
        raise GraphError("degree distribution of an empty graph")
    counts = Counter(degree_sequence(graph, kind).tolist())
    return dict(sorted(counts.items()))


def fit_power_law(degrees: Iterable[int], kmin: int) -> float:
    """Discrete power-law exponent by the approximate maximum-likelihood
    estimator ``1 + n / sum(ln(k / (kmin - 1/2)))`` over samples ``k >= kmin``.
    """
    if kmin < 1:
        raise ValueError("kmin must be a positive integer")
    k = np.asarray([d for d in degrees if d >= kmin], dtype=float)
    if len(k) < 2:
        raise ValueError(f"need at least 2 samples >= kmin, got {len(k)}")
    if np.all(k == kmin):
        raise ValueError("degenerate sample: every value equals kmin")
    return 1.0 + len(k) / np.log(k / (kmin - 0.5)).sum()


def write_edge_list(graph: DailyGraph, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["origin", "destination", "weight"])
    for (o, d), w in graph.edges.items():
        writer.writerow([o, d, w])


def read_edge_list(stream: IO[str], day=None) -> DailyGraph:
    rows = list(csv.DictReader(stream))
    index: dict[str, int] = {}
    origin = [index.setdefault(r["origin"], len(index)) for r in rows]
    destination = [index.setdefault(r["destination"], len(index)) for r in rows]
    return graph_from_arrays(day, list(index), origin, destination, [int(r["weight"]) for r in rows])


def write_degree_histogram(histogram: dict[int, int], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["degree", "count"])
    for k, c in sorted(histogram.items()):
        writer.writerow([k, c])
