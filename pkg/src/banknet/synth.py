"""Synthetic interbank transaction streams with injectable disruption days.

Each bank gets a fixed activity propensity drawn from a Pareto law. On a
normal day every unordered bank pair is linked with probability
``min(1, c * w_i * w_j)``, where ``c`` is solved so the expected directed
density hits the target. A link is mutual with probability ``reciprocity``,
otherwise it points one random way. Transaction values are Zipf distributed.

The day after each event is disrupted with strength ``severity`` (s):

* ``s ** dropout_exponent`` of the banks go silent, drawn with probability
  proportional to propensity, so hubs go first;
* every surviving transaction direction is then dropped independently with
  probability ``s ** thinning_exponent``. A mutual pair loses its
  reciprocity with probability ``1 - (1 - d)**2`` but vanishes only with
  ``d**2``, so mutual triads decompose first.

``s = 0`` leaves the day untouched and ``s = 1`` empties it. On the event
days themselves every link probability is halved.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields, replace
from datetime import date, timedelta
from functools import cached_property
from typing import IO, Iterator, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .analytics import EventSpec, default_event_calendar
from .graph import DailyGraph, graph_from_arrays
from .ingest import TransactionRecord

EVENT_DAY_ACTIVITY = 0.5


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    bank_count: int = 150
    propensity_exponent: float = 2.5
    target_density: float = 0.24
    reciprocity: float = 0.6
    start_date: date = date(2006, 1, 1)
    end_date: date = date(2015, 12, 31)
    events: tuple[EventSpec, ...] = field(default_factory=lambda: tuple(default_event_calendar()))
    severity: float = 0.8
    seed: int = 0
    weight_exponent: float = 2.5
    dropout_exponent: float = 7.0
    thinning_exponent: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.bank_count < 2:
            raise ConfigError("bank_count must be at least 2")
        if self.propensity_exponent <= 1:
            raise ConfigError("propensity_exponent must exceed 1")
        if not 0 < self.target_density <= 1:
            raise ConfigError("target_density must be in (0, 1]")
        if not 0 <= self.reciprocity <= 1:
            raise ConfigError("reciprocity must be in [0, 1]")
        if not 0 <= self.severity <= 1:
            raise ConfigError("severity must be in [0, 1]")
        if self.weight_exponent <= 1:
            raise ConfigError("weight_exponent must exceed 1")
        if self.dropout_exponent <= 0 or self.thinning_exponent <= 0:
            raise ConfigError("dropout and thinning exponents must be positive")
        if self.start_date > self.end_date:
            raise ConfigError("start_date is after end_date")
        for e in self.events:
            if e.start < self.start_date or e.end > self.end_date:
                raise ConfigError(f"event {e.label} lies outside the generated range")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> GeneratorConfig:
        """Build from string-valued settings (config file or CLI), ignoring ``None``."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if raw is None:
                continue
            if key not in known:
                raise ConfigError(f"unknown generator setting {key!r}")
            kwargs[key] = _coerce(key, raw)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def metadata(self) -> dict:
        return {
            "bank_count": self.bank_count,
            "propensity_law": f"Pareto, exponent {self.propensity_exponent}, minimum 1",
            "weight_law": f"Zipf, exponent {self.weight_exponent}",
            "target_density": self.target_density,
            "reciprocity": self.reciprocity,
            "severity": self.severity,
            "silenced_share": self.severity**self.dropout_exponent,
            "thinning": self.severity**self.thinning_exponent,
            "event_day_activity": EVENT_DAY_ACTIVITY,
            "start_date": self.start_date.isoformat(),
            "end_date": self.end_date.isoformat(),
            "seed": self.seed,
        }


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    if key in ("bank_count", "seed"):
        return int(raw)
    if key in ("start_date", "end_date"):
        return date.fromisoformat(raw)
    if key == "events":
        raise ConfigError("events are given as a calendar file, not inline")
    return float(raw)


def draw_propensities(n: int, exponent: float, rng: np.random.Generator) -> np.ndarray:
    """Pareto(minimum 1) activity weights with density ~ w^-exponent."""
    return (1.0 - rng.random(n)) ** (-1.0 / (exponent - 1.0))


def link_scale(propensity: np.ndarray, target_density: float, reciprocity: float) -> float:
    """Scale ``c`` such that expected directed density equals the target."""
    n = len(propensity)
    i, j = np.triu_indices(n, 1)
    prod = propensity[i] * propensity[j]
    per_link = 1.0 + reciprocity  # expected directed edges per linked pair
    ceiling = per_link * len(prod) / (n * (n - 1))
    if target_density > ceiling + 1e-12:
        raise ConfigError(
            f"density {target_density} infeasible: at most {ceiling:.4f} with reciprocity {reciprocity}"
        )

    def gap(log_c):
        return per_link * np.minimum(1.0, np.exp(log_c) * prod).sum() / (n * (n - 1)) - target_density

    lo = -np.log(prod.max()) - 50
    hi = -np.log(prod.min()) + 1
    if gap(hi) <= 0:
        return float(np.exp(hi))
    return float(np.exp(brentq(gap, lo, hi, xtol=1e-12)))


@dataclass(frozen=True)
class DayArrays:
    """One day's transactions as bank indices plus values."""

    origin: np.ndarray
    destination: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return len(self.value)


def _baseline_arrays(
    propensity: np.ndarray,
    scale: float,
    reciprocity: float,
    weight_exponent: float,
    rng: np.random.Generator,
    activity: float = 1.0,
) -> DayArrays:
    n = len(propensity)
    i, j = np.triu_indices(n, 1)
    p = activity * np.minimum(1.0, scale * propensity[i] * propensity[j])
    linked = rng.random(len(p)) < p
    i, j = i[linked], j[linked]
    mutual = rng.random(len(i)) < reciprocity
    forward = rng.random(len(i)) < 0.5
    one_way = ~mutual
    origin = np.concatenate([i[mutual], j[mutual], np.where(forward, i, j)[one_way]])
    destination = np.concatenate([j[mutual], i[mutual], np.where(forward, j, i)[one_way]])
    value = rng.zipf(weight_exponent, size=len(origin)).astype(np.int64)
    return DayArrays(origin, destination, value)


def _disrupt_arrays(
    day: DayArrays,
    weights: np.ndarray,
    silenced_share: float,
    thinning: float,
    rng: np.random.Generator,
) -> DayArrays:
    """Silence a weighted sample of banks, then thin the remaining directions."""
    n = len(weights)
    k = int(round(silenced_share * n))
    silent = np.zeros(n, dtype=bool)
    if k >= n:
        silent[:] = True
    elif k > 0:
        total = weights.sum()
        prob = weights / total if total > 0 else None
        silent[rng.choice(n, size=k, replace=False, p=prob)] = True
    keep = ~(silent[day.origin] | silent[day.destination])
    if thinning > 0:
        # one draw per direction, shared by duplicate records of that direction
        key = day.origin * n + day.destination
        pairs, inverse = np.unique(key, return_inverse=True)
        keep &= (rng.random(len(pairs)) >= thinning)[inverse]
    return DayArrays(day.origin[keep], day.destination[keep], day.value[keep])


def _to_records(day: date, banks: Sequence[str], arrays: DayArrays) -> list[TransactionRecord]:
    return [
        TransactionRecord(day, banks[o], banks[d], v)
        for o, d, v in zip(arrays.origin.tolist(), arrays.destination.tolist(), arrays.value.tolist())
    ]


def _from_records(records: Sequence[TransactionRecord], banks: Sequence[str]):
    index = {b: i for i, b in enumerate(banks)}
    return DayArrays(
        np.array([index[r.origin] for r in records], dtype=np.int64),
        np.array([index[r.destination] for r in records], dtype=np.int64),
        np.array([r.value for r in records], dtype=np.int64),
    )


def disruption_strength(
    severity: float, dropout_exponent: float = 7.0, thinning_exponent: float = 5.0
) -> tuple[float, float]:
    """``(silenced bank share, per-direction drop probability)`` for a severity."""
    if not 0 <= severity <= 1:
        raise ValueError("severity must be in [0, 1]")
    return severity**dropout_exponent, severity**thinning_exponent


def inject_event(
    records: Sequence[TransactionRecord],
    severity: float,
    rng: np.random.Generator,
    propensity: Mapping[str, float] | None = None,
    *,
    dropout_exponent: float = 7.0,
    thinning_exponent: float = 5.0,
) -> list[TransactionRecord]:
    """Disrupt one day of records; surviving records keep their order.

    Without ``propensity`` the banks active in ``records`` are the population
    and their weighted degree that day is the sampling weight.
    """
    share, thinning = disruption_strength(severity, dropout_exponent, thinning_exponent)
    if severity == 0 or not records:
        return list(records)
    if propensity is not None:
        banks = sorted(propensity)
        weights = np.array([propensity[b] for b in banks], dtype=float)
    else:
        activity: dict[str, float] = {}
        for r in records:
            activity[r.origin] = activity.get(r.origin, 0) + r.value
            activity[r.destination] = activity.get(r.destination, 0) + r.value
        banks = sorted(activity)
        weights = np.array([activity[b] for b in banks], dtype=float)
    arrays = _disrupt_arrays(_from_records(records, banks), weights, share, thinning, rng)
    survivors = set(zip(arrays.origin.tolist(), arrays.destination.tolist()))
    index = {b: i for i, b in enumerate(banks)}
    return [r for r in records if (index[r.origin], index[r.destination]) in survivors]


@dataclass(frozen=True)
class SyntheticStream:
    """A reproducible stream; days are generated on demand from the seed."""

    config: GeneratorConfig
    banks: tuple[str, ...]
    propensity: np.ndarray
    scale: float
    ground_truth: dict[str, list[date]]

    @cached_property
    def _day_kind(self) -> dict[date, str]:
        kinds = {}
        for e in self.config.events:
            d = e.start
            while d <= e.end:
                kinds[d] = "event"
                d += timedelta(days=1)
        for days in self.ground_truth.values():
            for d in days:
                kinds[d] = "disrupted"
        return kinds

    @property
    def dates(self) -> list[date]:
        span = (self.config.end_date - self.config.start_date).days + 1
        return [self.config.start_date + timedelta(days=k) for k in range(span)]

    def day_rng(self, day: date) -> np.random.Generator:
        seq = np.random.SeedSequence(self.config.seed, spawn_key=(day.toordinal(),))
        return np.random.Generator(np.random.PCG64(seq))

    def day_arrays(self, day: date) -> DayArrays:
        cfg = self.config
        rng = self.day_rng(day)
        kind = self._day_kind.get(day)
        activity = EVENT_DAY_ACTIVITY if kind == "event" else 1.0
        arrays = _baseline_arrays(
            self.propensity, self.scale, cfg.reciprocity, cfg.weight_exponent, rng, activity
        )
        if kind == "disrupted":
            share, thinning = disruption_strength(
                cfg.severity, cfg.dropout_exponent, cfg.thinning_exponent
            )
            arrays = _disrupt_arrays(arrays, self.propensity, share, thinning, rng)
        return arrays

    def day_records(self, day: date) -> list[TransactionRecord]:
        return _to_records(day, self.banks, self.day_arrays(day))

    def day_graph(self, day: date) -> DailyGraph:
        a = self.day_arrays(day)
        return graph_from_arrays(day, self.banks, a.origin, a.destination, a.value)

    def graphs(self) -> Iterator[DailyGraph]:
        for day in self.dates:
            yield self.day_graph(day)

    def iter_records(self) -> Iterator[TransactionRecord]:
        for day in self.dates:
            yield from self.day_records(day)

    @property
    def records(self) -> list[TransactionRecord]:
        return list(self.iter_records())

    def write_csv(self, stream: IO[str], date_format: str = "iso") -> int:
        """Write the transaction CSV; returns the number of rows."""
        stream.write("date,origin,destination,value\n")
        rows = 0
        banks = np.array(self.banks)
        for day in self.dates:
            a = self.day_arrays(day)
            if date_format == "iso":
                stamp = day.isoformat()
            else:
                stamp = f"{day.month}/{day.day}/{day.year}"
            lines = [
                f"{stamp},{o},{d},{v}\n"
                for o, d, v in zip(banks[a.origin], banks[a.destination], a.value.tolist())
            ]
            stream.writelines(lines)
            rows += len(lines)
        return rows

    def ground_truth_json(self) -> dict[str, str]:
        return {label: days[0].isoformat() for label, days in self.ground_truth.items()}


def generate_stream(config: GeneratorConfig | None = None, **overrides) -> SyntheticStream:
    config = replace(config or GeneratorConfig(), **overrides)
    root = np.random.SeedSequence(config.seed, spawn_key=(0,))
    propensity = draw_propensities(
        config.bank_count, config.propensity_exponent, np.random.Generator(np.random.PCG64(root))
    )
    scale = link_scale(propensity, config.target_density, config.reciprocity)
    width = len(str(config.bank_count - 1))
    banks = tuple(f"BANK{i:0{max(3, width)}d}" for i in range(config.bank_count))
    truth = {e.label: [e.end + timedelta(days=1)] for e in config.events}
    return SyntheticStream(config, banks, propensity, scale, truth)


def generate_baseline_day(
    config: GeneratorConfig, day: date, rng: np.random.Generator
) -> list[TransactionRecord]:
    """One undisturbed day for ``config``'s banks, drawn from ``rng``."""
    stream = generate_stream(config)
    arrays = _baseline_arrays(
        stream.propensity, stream.scale, config.reciprocity, config.weight_exponent, rng
    )
    return _to_records(day, stream.banks, arrays)


def write_ground_truth(stream: SyntheticStream, out: IO[str]) -> None:
    json.dump(
        {"disrupted": stream.ground_truth_json(), "generator": stream.config.metadata()},
        out,
        indent=2,
    )
    out.write("\n")


def read_config_file(stream: IO[str]) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for raw in stream:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}")
        values[key.strip()] = value.strip()
    return values
