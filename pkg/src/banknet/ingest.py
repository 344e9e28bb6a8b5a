"""Transaction file parsing, identifier masking and daily slicing."""

from __future__ import annotations

import csv
import hashlib
import hmac
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import IO, Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)

DEFAULT_COLUMNS = ("date", "origin", "destination", "value")
PSEUDONYM_HEX_WIDTH = 16

DATE_FORMATS = {
    "mdy": "%m/%d/%Y",
    "iso": "%Y-%m-%d",
}


class IngestError(ValueError):
    pass


class RowError(IngestError):
    """A single bad data row. ``line`` is the 1-based line number in the file."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class PseudonymCollisionError(IngestError):
    pass


@dataclass(frozen=True, slots=True)
class TransactionRecord:
    date: date
    origin: str
    destination: str
    value: int

    def __post_init__(self):
        if self.value < 1:
            raise ValueError(f"value < 1: {self.value}")
        if not self.origin or not self.destination:
            raise ValueError("origin and destination must be non-empty")

    @property
    def is_self_loop(self) -> bool:
        return self.origin == self.destination


@dataclass(frozen=True)
class MaskingKey:
    secret: bytes

    def __post_init__(self):
        if len(self.secret) < 16:
            raise ValueError("masking key must be at least 16 bytes")

    @classmethod
    def from_text(cls, text: str) -> MaskingKey:
        """Hex strings are decoded; anything else is taken as UTF-8 bytes."""
        text = text.strip()
        try:
            raw = bytes.fromhex(text)
        except ValueError:
            raw = text.encode("utf-8")
        return cls(raw)


@dataclass
class FormatConfig:
    """Column names, delimiter and date format of a transaction file."""

    columns: tuple[str, str, str, str] = DEFAULT_COLUMNS
    delimiter: str = ","
    date_format: str = "mdy"

    @property
    def strptime_format(self) -> str:
        return DATE_FORMATS.get(self.date_format, self.date_format)


@dataclass
class ParseReport:
    records: list[TransactionRecord] = field(default_factory=list)
    errors: list[RowError] = field(default_factory=list)
    self_loop_lines: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _parse_date(text: str, fmt: str) -> date:
    # Table-style dates are written "10 / 5 / 2006"; drop inner spaces.
    return datetime.strptime(text.replace(" ", ""), fmt).date()


def parse_transactions(
    stream: IO[str] | IO[bytes] | str | bytes,
    config: FormatConfig | None = None,
    *,
    skip_errors: bool = False,
) -> ParseReport:
    """Parse delimiter-separated transaction rows, keeping file order.

    With ``skip_errors=False`` the first bad row raises :class:`RowError`.
    Otherwise bad rows are collected on the report and parsing continues.
    Self-transfers are accepted; their line numbers are listed in
    ``report.self_loop_lines``.
    """
    config = config or FormatConfig()
    if isinstance(stream, (bytes, str)):
        stream = io.BytesIO(stream) if isinstance(stream, bytes) else io.StringIO(stream)
    if isinstance(stream, io.BufferedIOBase) or "b" in getattr(stream, "mode", ""):
        stream = io.TextIOWrapper(stream, encoding="utf-8", newline="")

    report = ParseReport()
    reader = csv.reader(stream, delimiter=config.delimiter)
    header = next(reader, None)
    if header is None:
        return report
    header = [h.strip() for h in header]
    try:
        positions = [header.index(name) for name in config.columns]
    except ValueError as exc:
        raise IngestError(f"header {header} lacks required column: {exc}") from None

    fmt = config.strptime_format
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            report.records.append(_parse_row(row, header, positions, fmt, line))
        except RowError as err:
            if not skip_errors:
                raise
            report.errors.append(err)
            continue
        if report.records[-1].is_self_loop:
            report.self_loop_lines.append(line)

    if report.errors:
        logger.warning("skipped %d malformed rows", len(report.errors))
    return report


def _parse_row(row, header, positions, fmt, line) -> TransactionRecord:
    if len(row) != len(header):
        raise RowError(line, f"expected {len(header)} columns, got {len(row)}")
    raw_date, origin, destination, raw_value = (row[p].strip() for p in positions)
    try:
        day = _parse_date(raw_date, fmt)
    except ValueError:
        raise RowError(line, f"unparsable date {raw_date!r}") from None
    try:
        value = int(raw_value)
    except ValueError:
        raise RowError(line, f"value is not an integer: {raw_value!r}") from None
    if value < 1:
        raise RowError(line, "value < 1")
    if not origin or not destination:
        raise RowError(line, "empty bank identifier")
    return TransactionRecord(day, origin, destination, value)


def write_transactions(
    records: Iterable[TransactionRecord],
    stream: IO[str],
    config: FormatConfig | None = None,
) -> None:
    config = config or FormatConfig()
    writer = csv.writer(stream, delimiter=config.delimiter, lineterminator="\n")
    writer.writerow(config.columns)
    fmt = config.strptime_format
    for rec in records:
        writer.writerow([_format_date(rec.date, fmt), rec.origin, rec.destination, rec.value])


def _format_date(day: date, fmt: str) -> str:
    if fmt == "%m/%d/%Y":
        # strftime pads with zeros; keep the unpadded M/D/YYYY look
        return f"{day.month}/{day.day}/{day.year}"
    return day.strftime(fmt)


def pseudonym(identifier: str, key: MaskingKey) -> str:
    digest = hmac.new(key.secret, identifier.encode("utf-8"), hashlib.sha256).hexdigest()
    return digest[:PSEUDONYM_HEX_WIDTH]


def pseudonym_map(identifiers: Iterable[str], key: MaskingKey) -> dict[str, str]:
    """Keyed HMAC-SHA256 pseudonyms, checked for injectivity."""
    mapping: dict[str, str] = {}
    seen: dict[str, str] = {}
    for ident in identifiers:
        if ident in mapping:
            continue
        token = pseudonym(ident, key)
        if token in seen:
            raise PseudonymCollisionError(
                f"identifiers {seen[token]!r} and {ident!r} share pseudonym {token}"
            )
        seen[token] = ident
        mapping[ident] = token
    return mapping


def mask_identities(
    records: Sequence[TransactionRecord], key: MaskingKey
) -> list[TransactionRecord]:
    """Replace bank identifiers by pseudonyms; dates and values pass through."""
    idents = (x for rec in records for x in (rec.origin, rec.destination))
    mapping = pseudonym_map(idents, key)
    return [
        TransactionRecord(rec.date, mapping[rec.origin], mapping[rec.destination], rec.value)
        for rec in records
    ]


# Chronologically ordered; dates without records are absent.
DailySliceSet = dict[date, list[TransactionRecord]]


def slice_daily(records: Iterable[TransactionRecord]) -> DailySliceSet:
    buckets: dict[date, list[TransactionRecord]] = defaultdict(list)
    for rec in records:
        buckets[rec.date].append(rec)
    return {day: buckets[day] for day in sorted(buckets)}


def slice_counts(slices: Mapping[date, Sequence[TransactionRecord]]) -> dict[date, int]:
    return {day: len(rows) for day, rows in slices.items()}
