"""Command-line entry point.

Exit codes: 0 success, 1 finished with warnings (skipped rows or windows),
2 invalid input or configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analytics, graph, ingest, metrics, synth, triads
from .pipeline import DayResult, analyze_graph, summarize, _apply
from .series import write_series_table

logger = logging.getLogger("banknet")

EXIT_OK, EXIT_WARN, EXIT_INVALID = 0, 1, 2
KEY_ENV = "BANKNET_MASK_KEY"
STORE_DAYS = "days"
MANIFEST = "manifest.json"


class UsageError(Exception):
    """Invalid input or configuration; maps to exit code 2."""


# --- store ------------------------------------------------------------------

def _day_files(store: Path) -> list[Path]:
    days = store / STORE_DAYS
    if not days.is_dir():
        raise UsageError(f"{store} is not an ingested store (no {STORE_DAYS}/ directory)")
    return sorted(days.glob("*.csv"))


def _read_day_graph(path: Path) -> graph.DailyGraph:
    """Graph of one store file; rows were validated on ingest, so skip records."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        rows = list(reader)
    index: dict[str, int] = {}
    origin = [index.setdefault(r[1], len(index)) for r in rows]
    destination = [index.setdefault(r[2], len(index)) for r in rows]
    value = [int(r[3]) for r in rows]
    return graph.graph_from_arrays(date.fromisoformat(path.stem), list(index), origin, destination, value)


def _analyze_day_file(path: Path) -> DayResult:
    return analyze_graph(_read_day_graph(path))


def _write_day_store(slices: ingest.DailySliceSet, out: Path) -> None:
    days = out / STORE_DAYS
    days.mkdir(parents=True, exist_ok=True)
    cfg = ingest.FormatConfig(date_format="iso")
    for day, rows in slices.items():
        with open(days / f"{day.isoformat()}.csv", "w", newline="", encoding="utf-8") as fh:
            ingest.write_transactions(rows, fh, cfg)


def _load_key(args) -> ingest.MaskingKey | None:
    if args.no_mask:
        return None
    if args.key_file:
        try:
            text = Path(args.key_file).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read key file: {exc}") from exc
    elif os.environ.get(KEY_ENV):
        text = os.environ[KEY_ENV]
    else:
        raise UsageError(f"no masking key: pass --key-file, set {KEY_ENV}, or use --no-mask")
    try:
        return ingest.MaskingKey.from_text(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _timestamp(args) -> str | None:
    if args.no_timestamp:
        return None
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# --- subcommands --------------------------------------------------------------

def cmd_ingest(args) -> int:
    key = _load_key(args)
    cfg = ingest.FormatConfig(date_format=args.date_format, delimiter=args.delimiter)
    records, dropped, self_loops = [], [], 0
    for path in args.inputs:
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                report = ingest.parse_transactions(fh, cfg, skip_errors=args.skip_errors)
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from exc
        except ingest.IngestError as exc:
            raise UsageError(f"{path}: {exc}") from exc
        for err in report.errors:
            print(f"{path}: {err}", file=sys.stderr)
            dropped.append({"file": str(path), "line": err.line, "error": err.message})
        self_loops += len(report.self_loop_lines)
        records.extend(report.records)

    if key is not None:
        records = ingest.mask_identities(records, key)
    slices = ingest.slice_daily(records)
    out = Path(args.out)
    _write_day_store(slices, out)
    manifest = {
        "dates": {d.isoformat(): n for d, n in ingest.slice_counts(slices).items()},
        "rows": len(records),
        "dropped": dropped,
        "self_loops": self_loops,
        "masked": key is not None,
        "created": _timestamp(args),
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return EXIT_WARN if dropped else EXIT_OK


def cmd_synth(args) -> int:
    settings: dict[str, object] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                settings.update(synth.read_config_file(fh))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    for name in ("bank_count", "propensity_exponent", "target_density", "reciprocity",
                 "severity", "seed", "start_date", "end_date"):
        if getattr(args, name) is not None:
            settings[name] = getattr(args, name)
    if args.no_events:
        settings["events"] = ()
    elif args.calendar:
        settings["events"] = tuple(_read_calendar(args.calendar))
    try:
        config = synth.GeneratorConfig.from_mapping(settings)
        stream = synth.generate_stream(config)
    except (synth.ConfigError, ValueError) as exc:
        raise UsageError(str(exc)) from exc

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "transactions.csv", "w", newline="", encoding="utf-8") as fh:
        rows = stream.write_csv(fh, date_format=args.date_format)
    with open(out / "ground_truth.json", "w", encoding="utf-8") as fh:
        synth.write_ground_truth(stream, fh)
    logger.info("wrote %d transactions for %d days", rows, len(stream.dates))
    return EXIT_OK


def _read_calendar(path) -> list[analytics.EventSpec]:
    if path is None:
        return analytics.default_event_calendar()
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return analytics.read_event_calendar(fh)
    except OSError as exc:
        raise UsageError(f"cannot read calendar: {exc}") from exc
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad calendar {path}: {exc}") from exc


def _analyze_store(args) -> list[DayResult]:
    files = _day_files(Path(args.store))
    return _apply(_analyze_day_file, files, args.workers)


def _write_metrics(days: Sequence[DayResult], result, out: Path) -> None:
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        metrics.write_metrics_csv([d.metrics for d in days if d.metrics], fh)
    names = [n for n in metrics.METRIC_NAMES if n in result.zscores]
    with open(out / "metrics_z.csv", "w", newline="", encoding="utf-8") as fh:
        write_series_table([result.zscores[n] for n in names], fh)


def _write_census(days: Sequence[DayResult], result, out: Path) -> None:
    with open(out / "census.csv", "w", newline="", encoding="utf-8") as fh, \
            open(out / "census_meta.json", "w", encoding="utf-8") as meta:
        triads.write_census_csv([d.census for d in days if d.census], fh, meta)
    names = [f"P{p}" for p in range(1, 17) if f"P{p}" in result.zscores]
    with open(out / "census_z.csv", "w", newline="", encoding="utf-8") as fh:
        write_series_table([result.zscores[n] for n in names], fh)


def _write_flags(result, out: Path) -> None:
    with open(out / "flags.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write("series,date,z\n")
        for name, days in result.flags.items():
            z = result.zscores[name]
            for d in days:
                fh.write(f"{name},{d.isoformat()},{z[d]!r}\n")


def _write_report(result, out: Path, extra: dict | None = None) -> None:
    doc = {
        "distance": metrics.DISTANCE_CONVENTION,
        "gaps": [
            {"date": d.isoformat() if d else None, "series": s, "reason": why}
            for d, s, why in result.report.gaps
        ],
        "skipped_events": {k: [d.isoformat() for d in v] for k, v in result.skipped_events.items()},
        "population": {k: {"mean": v.mean, "std": v.std} for k, v in result.stats.items()},
        **(extra or {}),
    }
    (out / "report.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _write_tables(result, out: Path) -> None:
    tables = out / "change_tables"
    tables.mkdir(exist_ok=True)
    for label, table in result.change_tables.items():
        with open(tables / f"change_{label}.csv", "w", newline="", encoding="utf-8") as fh:
            analytics.write_change_table(table, fh)


def cmd_metrics(args) -> int:
    days = _analyze_store(args)
    result = summarize(days, threshold=args.threshold)
    out = _mkout(args.out)
    _write_metrics(days, result, out)
    return EXIT_OK


def cmd_census(args) -> int:
    days = _analyze_store(args)
    result = summarize(days, threshold=args.threshold)
    out = _mkout(args.out)
    _write_census(days, result, out)
    return EXIT_OK


def cmd_window(args) -> int:
    try:
        with open(args.census, newline="", encoding="utf-8") as fh:
            censuses = triads.read_census_csv(fh)
    except OSError as exc:
        raise UsageError(f"cannot read census: {exc}") from exc
    series = triads.assemble_census_series(censuses)
    out = _mkout(args.out)
    status = EXIT_OK
    for event in _read_calendar(args.calendar):
        try:
            windows = analytics.census_windows(series, event, args.radius)
        except analytics.MissingDatesError as exc:
            print(f"event {event.label}: {exc}", file=sys.stderr)
            status = EXIT_WARN
            continue
        with open(out / f"change_{event.label}.csv", "w", newline="", encoding="utf-8") as fh:
            analytics.write_change_table(analytics.daily_change_table(windows), fh)
    return status


def cmd_detect(args) -> int:
    tables = []
    for path in args.tables:
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                tables.append(analytics.read_change_table(fh))
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from exc
        except analytics.AnalyticsError as exc:
            raise UsageError(f"{path}: {exc}") from exc
    ranking = analytics.rank_detectors(tables)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            analytics.write_ranking(ranking, fh)
    else:
        analytics.write_ranking(ranking, sys.stdout)
    return EXIT_OK


def cmd_analyze(args) -> int:
    events = [] if args.no_events else _read_calendar(args.calendar)
    days = _analyze_store(args)
    result = summarize(days, events, radius=args.radius, threshold=args.threshold)
    out = _mkout(args.out)
    _write_metrics(days, result, out)
    _write_census(days, result, out)
    _write_flags(result, out)
    if result.change_tables:
        _write_tables(result, out)
    if result.ranking:
        with open(out / "ranking.json", "w", encoding="utf-8") as fh:
            analytics.write_ranking(result.ranking, fh)
    _write_report(result, out)
    for label, missing in result.skipped_events.items():
        print(f"event {label}: missing {len(missing)} window dates, skipped", file=sys.stderr)
    return EXIT_WARN if result.warnings else EXIT_OK


def cmd_degrees(args) -> int:
    files = _day_files(Path(args.store))
    merged = graph.merge_slices(_read_day_graph(p) for p in files)
    if merged.node_count == 0:
        raise UsageError("store holds no transactions")
    out = _mkout(args.out)
    with open(out / "edges.csv", "w", newline="", encoding="utf-8") as fh:
        graph.write_edge_list(merged, fh)
    hist = graph.degree_distribution(merged, args.kind)
    with open(out / f"degrees_{args.kind}.csv", "w", newline="", encoding="utf-8") as fh:
        graph.write_degree_histogram(hist, fh)
    seq = graph.degree_sequence(merged, args.kind)
    kmin = args.kmin or max(1, int(np.percentile(seq, 50)))
    try:
        alpha = graph.fit_power_law(seq.tolist(), kmin)
    except ValueError as exc:
        print(f"power-law fit skipped: {exc}", file=sys.stderr)
        return EXIT_WARN
    print(json.dumps({"kind": args.kind, "kmin": kmin, "alpha": alpha}))
    return EXIT_OK


def _mkout(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- argument parsing -----------------------------------------------------------

def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="banknet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="parse, mask and slice transaction files into a store")
    s.add_argument("inputs", nargs="+")
    s.add_argument("--out", required=True)
    s.add_argument("--date-format", default="mdy", help="mdy, iso, or a strptime pattern")
    s.add_argument("--delimiter", default=",")
    s.add_argument("--key-file")
    s.add_argument("--no-mask", action="store_true", help="keep identifiers as they are")
    s.add_argument("--skip-errors", action="store_true", help="drop bad rows instead of failing")
    s.add_argument("--no-timestamp", action="store_true")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth", help="generate a synthetic transaction stream")
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="key = value settings file")
    s.add_argument("--seed", type=int)
    s.add_argument("--severity", type=float)
    s.add_argument("--bank-count", type=int)
    s.add_argument("--propensity-exponent", type=float)
    s.add_argument("--target-density", type=float)
    s.add_argument("--reciprocity", type=float)
    s.add_argument("--start-date", type=date.fromisoformat)
    s.add_argument("--end-date", type=date.fromisoformat)
    s.add_argument("--calendar", help="year,start,end event CSV (default: 2006-2015 holidays)")
    s.add_argument("--no-events", action="store_true")
    s.add_argument("--date-format", choices=("iso", "mdy"), default="iso")
    s.set_defaults(func=cmd_synth)

    def store_args(s):
        s.add_argument("--store", required=True)
        s.add_argument("--out", required=True)
        s.add_argument("--workers", type=_positive(int), default=1)
        s.add_argument("--threshold", type=_positive(float), default=3.0)

    s = sub.add_parser("metrics", help="daily macro metrics and their z-scores")
    store_args(s)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("census", help="daily triad census and its z-scores")
    store_args(s)
    s.set_defaults(func=cmd_census)

    s = sub.add_parser("window", help="event-aligned change tables from a census CSV")
    s.add_argument("--census", required=True)
    s.add_argument("--calendar")
    s.add_argument("--radius", type=_positive(int), default=15)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_window)

    s = sub.add_parser("detect", help="rank patterns from change tables")
    s.add_argument("tables", nargs="+")
    s.add_argument("--out")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("analyze", help="full pipeline over an ingested store")
    store_args(s)
    s.add_argument("--calendar")
    s.add_argument("--no-events", action="store_true")
    s.add_argument("--radius", type=_positive(int), default=15)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("degrees", help="whole-period graph, degree histogram, power-law fit")
    s.add_argument("--store", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--kind", choices=graph.DEGREE_KINDS, default="weighted-total")
    s.add_argument("--kmin", type=_positive(int))
    s.set_defaults(func=cmd_degrees)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"banknet {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
