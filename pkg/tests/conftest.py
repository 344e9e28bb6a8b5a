import csv
import io
from datetime import date
from importlib import resources

import numpy as np
import pytest

from banknet.analytics import EventSpec, read_change_table
from banknet.graph import graph_from_arrays

TABLE2_CSV = """date,origin,destination,value
10 / 5 / 2006,A,B,1
10 / 5 / 2006,C,B,25
10 / 7 / 2006,B,D,7
10 / 8 / 2006,D,A,71
"""

EVENT_2014 = EventSpec(date(2014, 7, 28), date(2014, 7, 29), "2014")
EVENT_2015 = EventSpec(date(2015, 7, 17), date(2015, 7, 18), "2015")


def fixture_table(year: int):
    text = resources.files("banknet.data").joinpath(f"motif_change_{year}.csv").read_text()
    return read_change_table(io.StringIO(text), EVENT_2014 if year == 2014 else EVENT_2015)


def fixture_rows(year: int) -> list[dict]:
    text = resources.files("banknet.data").joinpath(f"motif_change_{year}.csv").read_text()
    return list(csv.DictReader(io.StringIO(text)))


def random_digraph(n: int, p: float, rng: np.random.Generator, day=date(2020, 1, 1)):
    """Erdos-Renyi digraph on labels v00..; isolated labels are dropped by construction."""
    adj = rng.random((n, n)) < p
    np.fill_diagonal(adj, False)
    src, dst = np.nonzero(adj)
    labels = [f"v{i:03d}" for i in range(n)]
    return graph_from_arrays(day, labels, src, dst, np.ones(len(src), dtype=np.int64))


def graph_from_matrix(adj: np.ndarray, day=date(2020, 1, 1)):
    src, dst = np.nonzero(adj)
    labels = [f"v{i:03d}" for i in range(len(adj))]
    return graph_from_arrays(day, labels, src, dst, np.ones(len(src), dtype=np.int64))


@pytest.fixture
def table2_csv() -> str:
    return TABLE2_CSV


# acceptance results, printed once at the end of the run
ACCEPTANCE_LINES: dict[str, str] = {}


def record_acceptance(tag: str, ok: bool, detail: str) -> None:
    line = f"{tag} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[tag] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(ACCEPTANCE_LINES, key=lambda t: int(t.strip("AC[]"))):
        terminalreporter.write_line(ACCEPTANCE_LINES[tag])
