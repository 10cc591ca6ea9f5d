"""Core time-series container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MINUTE = np.timedelta64(1, "m")


@dataclass(frozen=True)
class SensorReading:
    timestamp: np.datetime64
    sensor_id: str
    value: float


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Timestamps (``datetime64[s]``) paired with float readings."""

    sensor_id: str
    timestamps: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        vals = np.asarray(self.values, dtype=np.float64)
        if ts.ndim != 1 or vals.ndim != 1 or ts.size != vals.size:
            raise ValueError("timestamps and values must be 1-D and equally long")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def from_readings(cls, readings, sensor_id: str | None = None) -> "TimeSeries":
        readings = list(readings)
        if sensor_id is None:
            sensor_id = readings[0].sensor_id if readings else ""
        ts = np.array([r.timestamp for r in readings], dtype="datetime64[s]")
        vals = np.array([r.value for r in readings], dtype=np.float64)
        return cls(sensor_id, ts, vals)

    @classmethod
    def regular(cls, values, start="2016-10-18T00:00:00", step=MINUTE, sensor_id="synthetic"):
        """Series on a fixed grid, one sample per ``step`` starting at ``start``."""
        values = np.asarray(values, dtype=np.float64)
        ts = np.datetime64(start, "s") + np.arange(values.size) * step
        return cls(sensor_id, ts, values)

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self.sensor_id, self.timestamps, values)

    def take(self, index) -> "TimeSeries":
        return TimeSeries(self.sensor_id, self.timestamps[index], self.values[index])

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(self.timestamps[1:] > self.timestamps[:-1]))

    def equals(self, other: "TimeSeries") -> bool:
        """Point-for-point identity, NaN-aware."""
        return (
            self.sensor_id == other.sensor_id
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def as_values(series) -> np.ndarray:
    """Accept a TimeSeries or any 1-D array-like; return a float64 array."""
    if isinstance(series, TimeSeries):
        return series.values
    return np.ascontiguousarray(series, dtype=np.float64)
