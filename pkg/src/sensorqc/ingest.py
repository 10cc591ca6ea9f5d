"""Parsing raw sensor CSV, the threshold noise filter, and the DST repair."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from datetime import datetime

import numpy as np

from .errors import ConfigError, EmptyInput, InputError, MalformedRow, OddSpan
from .series import MINUTE, SensorReading, TimeSeries

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"
HEADER = ("timestamp", "sensor_id", "value")


@dataclass(frozen=True)
class CleaningConfig:
    magnitude_cutoff: float = 1e6
    drop_negative: bool = True
    drop_nonfinite: bool = True

    def __post_init__(self):
        if not self.magnitude_cutoff > 0:
            raise ConfigError(f"magnitude_cutoff must be > 0, got {self.magnitude_cutoff}")


@dataclass(frozen=True)
class CleaningReport:
    removed_nan: int = 0
    removed_negative: int = 0
    removed_magnitude: int = 0
    condensed_pairs: int = 0

    @property
    def total_removed(self) -> int:
        return self.removed_nan + self.removed_negative + self.removed_magnitude

    def merge(self, other: "CleaningReport") -> "CleaningReport":
        return CleaningReport(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def to_text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))


def parse_timestamp(text: str) -> np.datetime64:
    return np.datetime64(datetime.strptime(text.strip(), TIMESTAMP_FORMAT), "s")


def format_timestamp(ts: np.datetime64) -> str:
    return str(np.datetime64(ts, "s")).replace("T", " ")


def _parse_value(text: str) -> float:
    text = text.strip()
    if text == "NaN":
        return math.nan
    value = float(text)
    if math.isnan(value):
        # only the literal token NaN is accepted as missing
        raise ValueError(text)
    return value


def _data_lines(source):
    """Yield (line_number, text) skipping blank and ``#`` comment lines."""
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(bytes(source).decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    elif hasattr(source, "mode") and "b" in getattr(source, "mode", ""):
        source = io.TextIOWrapper(source, encoding="utf-8")
    for lineno, line in enumerate(source, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped


def parse_sensor_csv(source, expected_sensor: str | None = None) -> list[SensorReading]:
    """Read ``timestamp,sensor_id,value`` rows in file order.

    ``source`` may be bytes, text, or an open file. A header row is optional
    but, if present, must be the first data line.
    """
    readings = []
    first = True
    for lineno, line in _data_lines(source):
        row = next(csv.reader([line]))
        if first:
            first = False
            if tuple(c.strip() for c in row) == HEADER:
                continue
        if len(row) != 3:
            raise MalformedRow(lineno, f"expected 3 fields, got {len(row)}")
        ts_text, sensor, value_text = row
        sensor = sensor.strip()
        if not sensor:
            raise MalformedRow(lineno, "empty sensor_id")
        if expected_sensor is not None and sensor != expected_sensor:
            continue
        try:
            ts = parse_timestamp(ts_text)
        except ValueError:
            raise MalformedRow(lineno, f"bad timestamp {ts_text!r}") from None
        try:
            value = _parse_value(value_text)
        except ValueError:
            raise MalformedRow(lineno, f"bad value {value_text!r}") from None
        readings.append(SensorReading(ts, sensor, value))
    if not readings:
        raise EmptyInput("no data rows")
    return readings


def read_series(path, expected_sensor: str | None = None) -> TimeSeries:
    with open(path, encoding="utf-8") as fh:
        readings = parse_sensor_csv(fh, expected_sensor)
    return TimeSeries.from_readings(readings, expected_sensor)


def write_series(series: TimeSeries, fh, header_lines=()) -> None:
    for line in header_lines:
        fh.write(f"# {line}\n")
    fh.write(",".join(HEADER) + "\n")
    for ts, value in zip(series.timestamps, series.values):
        fh.write(f"{format_timestamp(ts)},{series.sensor_id},{format_value(value)}\n")


def format_value(value: float) -> str:
    if math.isnan(value):
        return "NaN"
    return repr(float(value))


def clean(series: TimeSeries, cfg: CleaningConfig = CleaningConfig()) -> tuple[TimeSeries, CleaningReport]:
    """Threshold noise filter.

    Each removed point is attributed to the first failing predicate, checked
    in the order non-finite, negative, magnitude.
    """
    v = series.values
    nonfinite = ~np.isfinite(v) if cfg.drop_nonfinite else np.zeros(v.size, bool)
    with np.errstate(invalid="ignore"):
        negative = (v < 0) & ~nonfinite if cfg.drop_negative else np.zeros(v.size, bool)
        too_big = (np.abs(v) > cfg.magnitude_cutoff) & ~nonfinite & ~negative
    keep = ~(nonfinite | negative | too_big)
    report = CleaningReport(
        removed_nan=int(nonfinite.sum()),
        removed_negative=int(negative.sum()),
        removed_magnitude=int(too_big.sum()),
    )
    return series.take(keep), report


def duplicated_spans(timestamps: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges covering each clock set-back.

    A set-back is a run of points whose timestamps do not exceed the running
    maximum. Its span extends backwards over the earlier points that share
    the repeated timestamp range, so both passes over the hour are included.
    """
    spans = []
    n = timestamps.size
    i = 1
    running_max = timestamps[0] if n else None
    while i < n:
        if timestamps[i] <= running_max:
            back = i
            while i < n and timestamps[i] <= running_max:
                i += 1
            repeat_start = timestamps[back]
            # earlier points are increasing, so a binary search finds the first pass
            first = int(np.searchsorted(timestamps[:back], repeat_start, side="left"))
            if spans and first < spans[-1][1]:
                first = spans[-1][1]
            spans.append((first, i))
        else:
            running_max = timestamps[i]
            i += 1
    return spans


def condense_dst(series: TimeSeries) -> tuple[TimeSeries, CleaningReport]:
    """Average consecutive pairs inside every duplicated span.

    The condensed points get consecutive-minute timestamps starting at the
    span's first timestamp.
    """
    spans = duplicated_spans(series.timestamps)
    if not spans:
        return series, CleaningReport()
    ts_parts, val_parts = [], []
    cursor = 0
    pairs = 0
    for start, stop in spans:
        length = stop - start
        if length % 2:
            raise OddSpan(start, length)
        ts_parts.append(series.timestamps[cursor:start])
        val_parts.append(series.values[cursor:start])
        chunk = series.values[start:stop]
        half = length // 2
        val_parts.append((chunk[0::2] + chunk[1::2]) / 2.0)
        ts_parts.append(series.timestamps[start] + np.arange(half) * MINUTE)
        pairs += half
        cursor = stop
    ts_parts.append(series.timestamps[cursor:])
    val_parts.append(series.values[cursor:])
    out = TimeSeries(series.sensor_id, np.concatenate(ts_parts), np.concatenate(val_parts))
    if not out.strictly_increasing:
        raise InputError("condensed timestamps overlap the points after a duplicated span")
    return out, CleaningReport(condensed_pairs=pairs)
