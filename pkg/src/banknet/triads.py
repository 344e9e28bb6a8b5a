"""Triad census of directed graphs.

Triad classes follow the Holland-Leinhardt taxonomy, numbered 1..16 in the
order of ``TRIAD_CODES``; pattern 16 is ``300`` (three mutual dyads).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from datetime import date
from math import comb
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .graph import DailyGraph, build_graph
from .ingest import TransactionRecord
from .metrics import SeriesReport
from .series import MetricSeries

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional
    njit = None

logger = logging.getLogger(__name__)

TRIAD_CODES = (
    "003", "012", "102", "021D", "021U", "021C", "111D", "111U",
    "030T", "030C", "201", "120D", "120U", "120C", "210", "300",
)
# classes that contain at least one mutual dyad
MUTUAL_CLASSES = ("102", "111D", "111U", "201", "120D", "120U", "120C", "210", "300")

# bit assigned to each ordered pair of a labelled triple (a, b, c) = (0, 1, 2)
_PAIR_BITS = {(0, 1): 1, (1, 0): 2, (0, 2): 4, (2, 0): 8, (1, 2): 16, (2, 1): 32}


class CensusError(ValueError):
    pass


@dataclass(frozen=True)
class TriadClass:
    index: int
    code: str

    @classmethod
    def from_code(cls, code: str) -> TriadClass:
        return cls(TRIAD_CODES.index(code) + 1, code)

    @classmethod
    def from_index(cls, index: int) -> TriadClass:
        if not 1 <= index <= 16:
            raise ValueError(f"triad index must be in 1..16, got {index}")
        return cls(index, TRIAD_CODES[index - 1])


def _triad_label(a: np.ndarray) -> str:
    pairs = ((0, 1), (0, 2), (1, 2))
    mutual = [(i, j) for i, j in pairs if a[i, j] and a[j, i]]
    asym = [(i, j) if a[i, j] else (j, i) for i, j in pairs if a[i, j] != a[j, i]]
    m, k = len(mutual), len(asym)
    man = f"{m}{k}{3 - m - k}"
    if man in ("003", "012", "102", "201", "210", "300"):
        return man
    if man == "021":
        sources = [s for s, _ in asym]
        targets = [t for _, t in asym]
        if sources[0] == sources[1]:
            return "021D"
        if targets[0] == targets[1]:
            return "021U"
        return "021C"
    if man == "030":
        out_deg = a.sum(axis=1)
        return "030C" if np.all(out_deg == 1) else "030T"
    if man == "111":
        # D: the asymmetric edge points into the mutual dyad (A<->B<-C)
        (_, target), = asym
        return "111D" if target in mutual[0] else "111U"
    if man == "120":
        third = ({0, 1, 2} - set(mutual[0])).pop()
        sent = sum(s == third for s, _ in asym)
        return {2: "120D", 0: "120U", 1: "120C"}[sent]
    raise AssertionError(f"impossible dyad census {man}")


def _code_to_matrix(code: int) -> np.ndarray:
    a = np.zeros((3, 3), dtype=bool)
    for (i, j), bit in _PAIR_BITS.items():
        a[i, j] = bool(code & bit)
    return a


def _matrix_to_code(a: np.ndarray) -> int:
    return sum(bit for (i, j), bit in _PAIR_BITS.items() if a[i, j])


def classify_triad(adjacency) -> TriadClass:
    """Isomorphism class of a labelled triple.

    ``adjacency`` is a 3x3 array-like (row = origin; diagonal ignored, weights
    treated as presence) or an iterable of ordered node pairs over exactly
    three labels.
    """
    a = np.asarray(adjacency)
    if a.shape != (3, 3):
        pairs = list(adjacency)
        labels = sorted({x for p in pairs for x in p}, key=repr)
        if len(labels) > 3:
            raise ValueError(f"more than three nodes in {pairs}")
        pos = {lab: i for i, lab in enumerate(labels)}
        a = np.zeros((3, 3), dtype=bool)
        for s, t in pairs:
            a[pos[s], pos[t]] = True
    a = a.astype(bool) & ~np.eye(3, dtype=bool)
    return TriadClass.from_code(_triad_label(a))


# 0-based class index for each of the 64 labelled triples
CODE_TABLE = np.array(
    [classify_triad(_code_to_matrix(c)).index - 1 for c in range(64)], dtype=np.int64
)


@dataclass(frozen=True, eq=False)
class TriadCensus:
    date: object
    node_count: int
    counts: np.ndarray  # 16 ints, ordered as TRIAD_CODES

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (16,) or np.any(counts < 0):
            raise CensusError(f"census must be 16 non-negative counts, got {counts}")
        if counts.sum() != comb(self.node_count, 3):
            raise CensusError(
                f"census sums to {counts.sum()}, expected C({self.node_count}, 3)"
            )
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def __getitem__(self, key: int | str) -> int:
        """Count by code (``"300"``) or by 1-based pattern index."""
        if isinstance(key, str):
            return int(self.counts[TRIAD_CODES.index(key)])
        return int(self.counts[TriadClass.from_index(key).index - 1])

    def as_dict(self) -> dict[str, int]:
        return dict(zip(TRIAD_CODES, self.counts.tolist()))

    def __eq__(self, other):
        if not isinstance(other, TriadCensus):
            return NotImplemented
        return self.node_count == other.node_count and np.array_equal(self.counts, other.counts)

    __hash__ = None


def _census_kernel(adj, indptr, nbrs, table, counts):
    # Batagelj-Mrvar: visit each connected triple once from its linked pairs,
    # and add the 012/102 triples of every linked pair by subtraction.
    n = adj.shape[0]
    stamp = np.full(n, -1, np.int64)
    buf = np.empty(n, np.int64)
    for v in range(n):
        for p in range(indptr[v], indptr[v + 1]):
            u = nbrs[p]
            if u <= v:
                continue
            tag = v * n + u
            k = 0
            for q in range(indptr[u], indptr[u + 1]):
                w = nbrs[q]
                if w != v and stamp[w] != tag:
                    stamp[w] = tag
                    buf[k] = w
                    k += 1
            for q in range(indptr[v], indptr[v + 1]):
                w = nbrs[q]
                if w != u and stamp[w] != tag:
                    stamp[w] = tag
                    buf[k] = w
                    k += 1
            if adj[v, u] and adj[u, v]:
                counts[2] += n - k - 2
            else:
                counts[1] += n - k - 2
            for i in range(k):
                w = buf[i]
                if u < w or (v < w and w < u and adj[v, w] == 0 and adj[w, v] == 0):
                    code = (adj[v, u] + 2 * adj[u, v] + 4 * adj[v, w] + 8 * adj[w, v]
                            + 16 * adj[u, w] + 32 * adj[w, u])
                    counts[table[code]] += 1


_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


def _popcount(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return (x * _H01) >> np.uint64(56)


def _bitset_kernel(adj, out_bits, in_bits, gt_bits, indptr, nbrs, table, counts):
    # Same linked-pair iteration as _census_kernel, but the third nodes of a
    # pair are handled 64 at a time: each node row is a bitset, and the
    # candidates are split by their four edge bits to v and u, then counted.
    n = adj.shape[0]
    nw = out_bits.shape[1]
    tally = np.zeros(16, np.int64)
    for v in range(n):
        for p in range(indptr[v], indptr[v + 1]):
            u = nbrs[p]
            if u <= v:
                continue
            base = adj[v, u] + 2 * adj[u, v]
            linked = 0
            tally[:] = 0
            for t in range(nw):
                ov = out_bits[v, t]
                iv = in_bits[v, t]
                ou = out_bits[u, t]
                iu = in_bits[u, t]
                near_v = ov | iv
                s = near_v | ou | iu
                # drop u and v themselves
                if t == u >> 6:
                    s &= ~(np.uint64(1) << np.uint64(u & 63))
                if t == v >> 6:
                    s &= ~(np.uint64(1) << np.uint64(v & 63))
                linked += _popcount(s)
                above_u = gt_bits[u, t]
                between = gt_bits[v, t] & ~above_u
                e = s & (above_u | (between & ~near_v))
                if e == 0:
                    continue
                for c in range(16):
                    m = e
                    m &= ov if c & 1 else ~ov
                    m &= iv if c & 2 else ~iv
                    m &= ou if c & 4 else ~ou
                    m &= iu if c & 8 else ~iu
                    if m:
                        tally[c] += _popcount(m)
            if base == 3:
                counts[2] += n - linked - 2
            else:
                counts[1] += n - linked - 2
            for c in range(16):
                if tally[c]:
                    counts[table[base + 4 * c]] += tally[c]


_census_kernel_py = _census_kernel
if njit is not None:
    _census_kernel = njit(cache=True, nogil=True)(_census_kernel_py)
    _popcount = njit(cache=True, inline="always")(_popcount)
    _bitset_kernel = njit(cache=True, nogil=True)(_bitset_kernel)
else:  # pragma: no cover
    _bitset_kernel = None


def _pack_rows(mat: np.ndarray) -> np.ndarray:
    """Pack each row of a boolean matrix into little-endian uint64 words."""
    n = mat.shape[1]
    width = -(-n // 64) * 64
    padded = np.zeros((mat.shape[0], width), dtype=bool)
    padded[:, :n] = mat
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").astype(np.uint64)


def census_counts(adjacency: np.ndarray, *, method: str = "bitset") -> np.ndarray:
    """16-class census of a boolean adjacency matrix (no self-loops).

    ``method`` is ``"bitset"`` (fast, needs numba), ``"pairs"`` (jitted
    scalar kernel) or ``"python"`` (the scalar kernel uncompiled).
    """
    adj = np.ascontiguousarray(adjacency, dtype=np.uint8)
    n = adj.shape[0]
    und = (adj | adj.T).astype(bool)
    np.fill_diagonal(und, False)
    rows, nbrs = np.nonzero(und)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    nbrs = nbrs.astype(np.int64)
    counts = np.zeros(16, dtype=np.int64)
    if method == "bitset" and _bitset_kernel is None:
        method = "python"
    if method == "bitset":
        idx = np.arange(n)
        gt = idx[None, :] > idx[:, None]
        _bitset_kernel(
            adj, _pack_rows(adj.astype(bool)), _pack_rows(adj.T.astype(bool)), _pack_rows(gt),
            indptr, nbrs, CODE_TABLE, counts,
        )
    elif method in ("pairs", "python"):
        kernel = _census_kernel if method == "pairs" else _census_kernel_py
        kernel(adj, indptr, nbrs, CODE_TABLE, counts)
    else:
        raise ValueError(f"unknown census method {method!r}")
    counts[0] = comb(n, 3) - counts[1:].sum()
    return counts


def triad_census(graph: DailyGraph) -> TriadCensus:
    n = graph.node_count
    if n < 3:
        raise CensusError(f"triad census needs at least 3 nodes, got {n}")
    return TriadCensus(graph.date, n, census_counts(graph.adjacency()))


def brute_force_census(graph: DailyGraph) -> TriadCensus:
    """Reference census by enumerating every unordered node triple."""
    n = graph.node_count
    if n < 3:
        raise CensusError(f"triad census needs at least 3 nodes, got {n}")
    a = graph.adjacency()
    counts = np.zeros(16, dtype=np.int64)
    i, j, k = _all_triples(n)
    code = np.zeros(len(i), dtype=np.int64)
    for (p, q), bit in _PAIR_BITS.items():
        x, y = (i, j, k)[p], (i, j, k)[q]
        code += bit * a[x, y]
    seen, tally = np.unique(code, return_counts=True)
    for c, t in zip(seen.tolist(), tally.tolist()):
        counts[classify_triad(_code_to_matrix(c)).index - 1] += t
    return TriadCensus(graph.date, n, counts)


def _all_triples(n: int):
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij", sparse=True)
    mask = (i < j) & (j < k)
    return np.nonzero(mask)


def census_from_graphs(
    graphs: Iterable[DailyGraph], report: SeriesReport | None = None
) -> list[TriadCensus]:
    out = []
    for g in graphs:
        try:
            out.append(triad_census(g))
        except CensusError as exc:
            if report is not None:
                report.add(g.date, "census", str(exc))
    return out


def assemble_census_series(censuses: Sequence[TriadCensus]) -> dict[str, MetricSeries]:
    """Sixteen chronological series keyed ``P1``..``P16``."""
    censuses = sorted(censuses, key=lambda c: c.date)
    dates = tuple(c.date for c in censuses)
    table = np.array([c.counts for c in censuses], dtype=float).reshape(len(censuses), 16)
    return {
        f"P{i + 1}": MetricSeries(f"P{i + 1}", dates, table[:, i].copy()) for i in range(16)
    }


def census_series(
    slices: Mapping[date, Sequence[TransactionRecord]],
    report: SeriesReport | None = None,
) -> dict[str, MetricSeries]:
    graphs = (build_graph(rows) for _, rows in sorted(slices.items()))
    return assemble_census_series(census_from_graphs(graphs, report))


def census_metadata() -> dict:
    return {
        "columns": {f"c{i + 1}": code for i, code in enumerate(TRIAD_CODES)},
        "order": "Holland-Leinhardt; index 16 = 300 (all dyads mutual)",
    }


def write_census_csv(
    censuses: Iterable[TriadCensus], stream: IO[str], metadata: IO[str] | None = None
) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["date", *(f"c{i}" for i in range(1, 17))])
    for c in sorted(censuses, key=lambda c: c.date):
        writer.writerow([c.date.isoformat(), *c.counts.tolist()])
    if metadata is not None:
        json.dump(census_metadata(), metadata, indent=2)
        metadata.write("\n")


def read_census_csv(stream: IO[str]) -> list[TriadCensus]:
    out = []
    for row in csv.DictReader(stream):
        counts = np.array([int(row[f"c{i}"]) for i in range(1, 17)])
        n = _nodes_from_total(int(counts.sum()))
        out.append(TriadCensus(date.fromisoformat(row["date"]), n, counts))
    return out


def _nodes_from_total(total: int) -> int:
    # invert C(n, 3); the census sum pins n down uniquely for n >= 3
    n = 3
    while comb(n, 3) < total:
        n += 1
    if comb(n, 3) != total:
        raise CensusError(f"census total {total} is not a binomial C(n, 3)")
    return n
