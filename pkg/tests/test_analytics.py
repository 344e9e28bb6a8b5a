import io
import json
import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banknet.analytics import (
    AnalyticsError,
    ChangeTable,
    EventSpec,
    EventWindow,
    MissingDatesError,
    N_PATTERNS,
    daily_change_table,
    default_event_calendar,
    extract_event_window,
    flag_anomalies,
    rank_detectors,
    ranking_to_json,
    read_change_table,
    read_event_calendar,
    window_labels,
    write_change_table,
    write_event_calendar,
    write_ranking,
    zscore_series,
)
from banknet.series import MetricSeries, read_series_table, write_series_table

from conftest import EVENT_2014, EVENT_2015, fixture_rows, fixture_table

LABELS = window_labels(15)


def series_of(values, start=date(2015, 6, 1), name="x"):
    days = tuple(start + timedelta(k) for k in range(len(values)))
    return MetricSeries(name, days, np.asarray(values, dtype=float))


def windows_from_counts(counts: np.ndarray, event=None):
    """counts: 30 x 16 array -> 16 windows."""
    event = event or EVENT_2015
    days = tuple(event.day(k) for k in list(range(-15, 0)) + list(range(1, 16)))
    return [EventWindow(event, LABELS, days, counts[:, p]) for p in range(N_PATTERNS)]


# --- z-scores ----------------------------------------------------------------

def test_zscore_hand_values():
    z, stats = zscore_series(series_of([1, 2, 3]))
    assert stats.mean == 2
    assert stats.std == pytest.approx(math.sqrt(2 / 3))
    assert z.values[2] == pytest.approx(1.2247, abs=1e-4)
    assert z.values[1] == 0.0


@pytest.mark.parametrize("values", [[5, 5, 5], [4]])
def test_zscore_degenerate(values):
    with pytest.raises(AnalyticsError):
        zscore_series(series_of(values))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=100, max_size=400),
       st.integers(0, 2**32 - 1))
def test_zscore_normalises(values, seed):
    x = np.asarray(values)
    if np.ptp(x) < 1e-3:
        x = x + np.random.default_rng(seed).normal(size=len(x))
    z, _ = zscore_series(series_of(x))
    assert abs(z.values.mean()) < 1e-9
    assert abs(z.values.std() - 1) < 1e-9


def test_flags():
    z = series_of([0.1, -3.0, 2.9, 3.5])
    assert flag_anomalies(z, 3.0) == [z.dates[1], z.dates[3]]
    assert flag_anomalies(series_of([0.1, -0.2]), 3.0) == []
    zs, _ = zscore_series(series_of(np.arange(50.0) ** 2))
    assert len(flag_anomalies(zs, 1e-4)) >= 49
    with pytest.raises(ValueError):
        flag_anomalies(z, 0)


# --- windows ------------------------------------------------------------------

def test_window_alignment_2015():
    s = series_of(np.arange(90), start=date(2015, 6, 15))
    w = extract_event_window(s, EVENT_2015)
    assert len(w.labels) == 30
    assert w.dates[w.labels.index("D-1")] == date(2015, 7, 16)
    assert w.dates[w.labels.index("D+1")] == date(2015, 7, 19)
    assert w.dates[w.labels.index("D+15")] == date(2015, 8, 2)
    assert date(2015, 7, 17) not in w.dates and date(2015, 7, 18) not in w.dates
    assert w["D+1"] == s[date(2015, 7, 19)]


def test_constant_window():
    w = extract_event_window(series_of([7] * 90, start=date(2015, 6, 15)), EVENT_2015)
    assert w.values.tolist() == [7.0] * 30


def test_missing_date_is_named():
    s = series_of(np.arange(90), start=date(2015, 6, 15))
    pts = [(d, v) for d, v in s.points if d != date(2015, 7, 21)]
    with pytest.raises(MissingDatesError) as info:
        extract_event_window(MetricSeries.from_points("x", pts), EVENT_2015)
    assert info.value.missing == [date(2015, 7, 21)]
    assert "2015-07-21" in str(info.value)


def test_event_spec():
    with pytest.raises(ValueError):
        EventSpec(date(2015, 7, 18), date(2015, 7, 17))
    with pytest.raises(ValueError):
        EVENT_2015.day(0)
    assert EVENT_2015.day(-15) == date(2015, 7, 2)


# --- change tables ------------------------------------------------------------

def test_constant_counts_give_zero_table():
    table = daily_change_table(windows_from_counts(np.full((30, 16), 40.0)))
    assert np.all(table.values == 0)


def test_first_day_after_drop():
    counts = np.full((30, 16), 100.0)
    counts[15:, 15] = 13
    table = daily_change_table(windows_from_counts(counts))
    assert table.cell("D+1", 16) == pytest.approx(-87)
    assert table.cell("D-15", 16) == 0


def test_chain_drop_and_rebound():
    counts = np.full((30, 16), 100.0)
    counts[14, 15], counts[15, 15], counts[16:, 15] = 100, 13, 86.3
    table = daily_change_table(windows_from_counts(counts))
    rounded = table.rounded()
    assert rounded[LABELS.index("D+1"), 15] == -87
    assert rounded[LABELS.index("D+2"), 15] == 564
    assert table.cell("D+2", 16) == pytest.approx(100 * (86.3 - 13) / 13)


def test_undefined_and_zero_cells():
    counts = np.ones((30, 16))
    counts[:, 0] = 0          # 0 -> 0 stays 0
    counts[:20, 1] = 0        # 0 -> positive is undefined
    counts[20:, 1] = 5
    table = daily_change_table(windows_from_counts(counts))
    assert np.all(table.values[:, 0] == 0)
    assert math.isnan(table.values[20, 1])
    buf = io.StringIO()
    write_change_table(table, buf)
    assert buf.getvalue().splitlines()[21].split(",")[2] == "NA"


def test_rounding_is_half_away_from_zero():
    t = ChangeTable(LABELS, np.tile(np.array([0.5, -0.5, 1.5, -2.5, 2.4, -2.6] + [0] * 10), (30, 1)))
    assert t.rounded()[0, :6].tolist() == [1, -1, 2, -3, 2, -3]


def test_label_mismatch():
    ws = windows_from_counts(np.ones((30, 16)))
    ws[3] = EventWindow(ws[3].event, tuple(reversed(LABELS)), ws[3].dates, ws[3].values)
    with pytest.raises(AnalyticsError):
        daily_change_table(ws)
    with pytest.raises(AnalyticsError):
        daily_change_table(ws[:15])


def test_fixture_tables_have_thirty_rows():
    for year in (2014, 2015):
        table = fixture_table(year)
        assert table.labels == LABELS


@pytest.mark.parametrize("year", [2014, 2015])
def test_fixture_chain_for_class_300(year):
    # replay the published percent chain from an arbitrary start, then re-derive it
    rows = fixture_rows(year)
    pct = [float(r["P16"].rstrip("%")) for r in rows]
    counts = np.full((30, 16), 50.0)
    level = 1234.0
    for k, p in enumerate(pct):
        level = level if k == 0 else level * (1 + p / 100)
        counts[k, 15] = level
    table = daily_change_table(windows_from_counts(counts))
    assert table.rounded()[:, 15].tolist() == pct


def test_table_file_round_trip():
    table = fixture_table(2014)
    buf = io.StringIO()
    write_change_table(table, buf)
    buf.seek(0)
    back = read_change_table(buf)
    assert np.array_equal(back.values, table.values)
    with pytest.raises(AnalyticsError):
        read_change_table(io.StringIO("day,P1\nD-1,0\n"))


# --- ranking -------------------------------------------------------------------

def test_fixture_ranking():
    ranking = rank_detectors([fixture_table(2014), fixture_table(2015)])
    top = ranking[0]
    assert (top.pattern, top.score, top.rebound) == (16, 90, 777)
    assert [s.pattern for s in ranking[:3]] == [16, 15, 11]
    # 030T and 111D tie on 64; the larger rebound goes first
    nine, seven = (next(s for s in ranking if s.pattern == p) for p in (9, 7))
    assert nine.score == seven.score == 64
    assert ranking.index(nine) < ranking.index(seven)


def test_full_tie_is_deterministic():
    values = np.zeros((30, 16))
    values[LABELS.index("D+1")] = -20
    values[LABELS.index("D+2"), [3, 8]] = 50
    ranking = rank_detectors([ChangeTable(LABELS, values)])
    assert [s.pattern for s in ranking] == [4, 9, 1, 2, 3, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 16]


def test_single_strong_pattern():
    values = np.zeros((30, 16))
    values[LABELS.index("D+1")] = -10
    values[LABELS.index("D+1"), 4] = -50
    ranking = rank_detectors([ChangeTable(LABELS, values)])
    assert ranking[0].pattern == 5 and ranking[0].score == 50


def test_undefined_cells_are_excluded():
    a = np.zeros((30, 16))
    b = np.zeros((30, 16))
    a[LABELS.index("D+1"), 0] = np.nan
    b[LABELS.index("D+1"), 0] = -40
    a[LABELS.index("D+1"), 1] = np.nan
    b[LABELS.index("D+1"), 1] = np.nan
    ranking = rank_detectors([ChangeTable(LABELS, a), ChangeTable(LABELS, b)])
    assert ranking[0].pattern == 1 and ranking[0].score == 40
    assert ranking[-1].pattern == 2 and math.isnan(ranking[-1].score)
    doc = ranking_to_json(ranking)
    assert doc[-1] == {"pattern": 2, "score": None, "rebound": 0.0}


def test_empty_ranking_input():
    with pytest.raises(AnalyticsError):
        rank_detectors([])


def test_ranking_json():
    buf = io.StringIO()
    write_ranking(rank_detectors([fixture_table(2014), fixture_table(2015)]), buf)
    doc = json.loads(buf.getvalue())
    assert doc[0] == {"pattern": 16, "score": 90.0, "rebound": 777.0}
    assert len(doc) == 16


# --- calendars and series files ---------------------------------------------------

def test_default_calendar():
    events = default_event_calendar()
    assert len(events) == 10
    by_name = {e.label: e for e in events}
    assert by_name["2014"] == EVENT_2014
    assert by_name["2015"] == EVENT_2015


def test_calendar_round_trip():
    buf = io.StringIO()
    write_event_calendar(default_event_calendar(), buf)
    buf.seek(0)
    assert read_event_calendar(buf) == default_event_calendar()


def test_series_table_outer_join():
    a = series_of([1.0, 2.0], name="a")
    b = MetricSeries.from_points("b", [(a.dates[1], 5.0)])
    buf = io.StringIO()
    write_series_table([a, b], buf)
    assert buf.getvalue().splitlines() == ["date,a,b", "2015-06-01,1.0,", "2015-06-02,2.0,5.0"]
    buf.seek(0)
    back = read_series_table(buf)
    assert back["a"] == a and back["b"] == b
