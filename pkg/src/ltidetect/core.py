"""Time-series data model, CSV ingestion, aggregation, normalization and splits.

Timestamps are integer epoch seconds on a fixed grid. Civil hour-of-day and
day-of-week are derived with a fixed UTC offset (no DST).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AlignmentError, ConfigError, DataError, GapError, ParseError

HOUR = 3600
DAY = 24 * HOUR
WEEK = 7 * DAY


def _frozen(a: np.ndarray) -> np.ndarray:
    # read-only views of read-only arrays are shared; anything writable is copied
    if a.flags.writeable:
        a = a.copy()
        a.setflags(write=False)
    return a


def parse_timestamp(text: str, utc_offset: int = 0) -> int:
    """ISO-8601 text to epoch seconds; naive stamps are civil time at ``utc_offset``."""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone(timedelta(seconds=utc_offset)))
    return int(round(dt.timestamp()))


def format_timestamp(epoch: int, utc_offset: int = 0) -> str:
    tz = timezone(timedelta(seconds=utc_offset))
    return datetime.fromtimestamp(int(epoch), tz).isoformat()


@dataclass(frozen=True)
class Frame:
    timestamp: int
    values: np.ndarray

    @property
    def m(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class LocalSequence:
    """Contiguous fragment ``S(start, end)`` of a series, both ends inclusive."""

    start_index: int
    end_index: int
    values: np.ndarray  # (length, m)

    def __post_init__(self):
        if self.end_index < self.start_index:
            raise ValueError("empty local sequence")
        if len(self.values) != self.end_index - self.start_index + 1:
            raise ValueError("values length does not match index span")

    def __len__(self) -> int:
        return self.end_index - self.start_index + 1


@dataclass(frozen=True)
class TimeSeries:
    timestamps: np.ndarray
    values: np.ndarray
    channel_names: tuple[str, ...]
    interval: int
    utc_offset: int = 0

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or len(vals) != len(ts):
            raise DataError(f"values shape {vals.shape} does not match {len(ts)} timestamps")
        if vals.shape[1] != len(self.channel_names):
            raise DataError(
                f"{vals.shape[1]} value columns but {len(self.channel_names)} channel names"
            )
        if self.interval <= 0:
            raise DataError("interval must be positive")
        if len(ts) > 1 and np.any(np.diff(ts) != self.interval):
            raise DataError("timestamps are not a gap-free grid at the declared interval")
        object.__setattr__(self, "timestamps", _frozen(ts))
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @classmethod
    def from_values(cls, values, start: int = 0, interval: int = HOUR,
                    channel_names: Sequence[str] | None = None, utc_offset: int = 0) -> "TimeSeries":
        vals = np.asarray(values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[:, None]
        names = tuple(channel_names) if channel_names else tuple(f"ch{i}" for i in range(vals.shape[1]))
        ts = start + interval * np.arange(len(vals), dtype=np.int64)
        return cls(ts, vals, names, interval, utc_offset)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def frame(self, i: int) -> Frame:
        return Frame(int(self.timestamps[i]), self.values[i])

    def local_sequence(self, i: int, j: int) -> LocalSequence:
        return LocalSequence(i, j, self.values[i:j + 1])

    def slice(self, start: int, stop: int) -> "TimeSeries":
        return TimeSeries(self.timestamps[start:stop], self.values[start:stop],
                          self.channel_names, self.interval, self.utc_offset)

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(self.timestamps, values, self.channel_names, self.interval, self.utc_offset)

    def hour_of_day(self) -> np.ndarray:
        return hour_of_day(self.timestamps, self.utc_offset)

    def day_of_week(self) -> np.ndarray:
        return day_of_week(self.timestamps, self.utc_offset)


def hour_of_day(epoch, utc_offset: int = 0):
    return ((np.asarray(epoch, dtype=np.int64) + utc_offset) // HOUR) % 24


def day_of_week(epoch, utc_offset: int = 0):
    """Monday = 0. The epoch (1970-01-01) was a Thursday."""
    return ((np.asarray(epoch, dtype=np.int64) + utc_offset) // DAY + 3) % 7


@dataclass(frozen=True)
class LabelTrack:
    timestamps: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        lab = np.asarray(self.labels).astype(np.int8)
        if ts.shape != lab.shape:
            raise AlignmentError("label track: timestamps and labels differ in length")
        if np.any((lab != 0) & (lab != 1)):
            raise DataError("labels must be 0 or 1")
        object.__setattr__(self, "timestamps", _frozen(ts))
        object.__setattr__(self, "labels", _frozen(lab))

    def __len__(self) -> int:
        return len(self.labels)

    def align(self, timestamps) -> "LabelTrack":
        """Restrict to ``timestamps``; every requested stamp must be labelled."""
        timestamps = np.asarray(timestamps, dtype=np.int64)
        pos = np.searchsorted(self.timestamps, timestamps)
        ok = (pos < len(self.timestamps))
        ok[ok] = self.timestamps[pos[ok]] == timestamps[ok]
        if not ok.all():
            missing = timestamps[~ok][0]
            raise AlignmentError(f"no label for timestamp {missing}")
        return LabelTrack(timestamps, self.labels[pos])


# --------------------------------------------------------------------------- I/O


def load_csv(path, columns: Sequence[str] | None = None, *, fill_gaps: bool = False,
             interval: int | None = None, utc_offset: int = 0) -> TimeSeries:
    """Read ``timestamp,ch1,...`` CSV into a :class:`TimeSeries`.

    ``columns`` selects and orders channel columns by header name (default: all).
    Missing grid points raise :class:`GapError` unless ``fill_gaps`` is set, in
    which case they are linearly interpolated per channel.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        names = list(columns) if columns is not None else header[1:]
        try:
            idx = [header.index(n) for n in names]
        except ValueError as e:
            raise DataError(f"{path}: {e}") from None
        stamps, rows = [], []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                stamps.append(parse_timestamp(row[0], utc_offset))
            except (ValueError, IndexError):
                raise ParseError(path, rownum, header[0], f"bad timestamp {row[0] if row else ''!r}") from None
            vals = []
            for j, n in zip(idx, names):
                try:
                    vals.append(float(row[j]))
                except (ValueError, IndexError):
                    raise ParseError(path, rownum, n, "not a real number") from None
            rows.append(vals)
    if not stamps:
        raise DataError(f"{path}: no data rows")
    ts = np.array(stamps, dtype=np.int64)
    vals = np.array(rows, dtype=np.float64).reshape(len(ts), len(names))
    return regularize(ts, vals, names, interval=interval, fill_gaps=fill_gaps, utc_offset=utc_offset)


def regularize(ts, vals, names, *, interval=None, fill_gaps=False, utc_offset=0) -> TimeSeries:
    """Validate a strictly increasing stamp vector and place it on a gap-free grid."""
    ts = np.asarray(ts, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    d = np.diff(ts)
    if np.any(d <= 0):
        k = int(np.argmax(d <= 0)) + 1
        raise DataError(f"timestamps not strictly increasing at row {k} ({ts[k]})")
    if interval is None:
        if len(ts) < 2:
            raise DataError("cannot infer interval from a single row")
        interval = int(d.min())
    if np.any(d % interval):
        raise DataError("timestamps are off the interval grid")
    if np.all(d == interval):
        return TimeSeries(ts, vals, tuple(names), interval, utc_offset)
    grid = np.arange(ts[0], ts[-1] + interval, interval, dtype=np.int64)
    if not fill_gaps:
        missing = np.setdiff1d(grid, ts, assume_unique=True)[0]
        raise GapError(format_timestamp(missing, utc_offset))
    filled = np.column_stack([np.interp(grid, ts, vals[:, c]) for c in range(vals.shape[1])])
    return TimeSeries(grid, filled.reshape(len(grid), vals.shape[1]), tuple(names), interval, utc_offset)


def write_csv(series: TimeSeries, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", *series.channel_names])
        for t, row in zip(series.timestamps, series.values):
            w.writerow([format_timestamp(t, series.utc_offset), *(repr(float(v)) for v in row)])


def load_labels(path, utc_offset: int = 0) -> LabelTrack:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    stamps, labels = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                stamps.append(parse_timestamp(row[0], utc_offset))
            except ValueError:
                raise ParseError(path, rownum, header[0], "bad timestamp") from None
            try:
                labels.append(int(row[1]))
            except (ValueError, IndexError):
                raise ParseError(path, rownum, header[1] if len(header) > 1 else "label", "not 0/1") from None
    return LabelTrack(np.array(stamps, dtype=np.int64), np.array(labels))


def write_labels(track: LabelTrack, path, utc_offset: int = 0) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "label"])
        for t, y in zip(track.timestamps, track.labels):
            w.writerow([format_timestamp(t, utc_offset), int(y)])


# ------------------------------------------------------------------ transforms


def aggregate_to_interval(series: TimeSeries, target: int, reducer: str = "sum") -> TimeSeries:
    """Reduce consecutive windows of ``target // interval`` frames.

    Windows start at the first frame; a partial trailing window is dropped.
    """
    if target <= 0 or target % series.interval:
        raise ConfigError(f"target {target}s is not a multiple of interval {series.interval}s")
    k = target // series.interval
    if k == 1:
        return series
    n = (len(series) // k) * k
    blocks = series.values[:n].reshape(n // k, k, series.m)
    if reducer == "sum":
        out = blocks.sum(axis=1)
    elif reducer == "mean":
        out = blocks.mean(axis=1)
    else:
        raise ConfigError(f"unknown reducer {reducer!r}")
    return TimeSeries(series.timestamps[:n:k], out, series.channel_names, target, series.utc_offset)


@dataclass(frozen=True)
class NormalizationParams:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=np.float64)
        maxs = np.asarray(self.maxs, dtype=np.float64)
        if mins.shape != maxs.shape or np.any(maxs < mins):
            raise DataError("normalization: need max >= min per channel")
        object.__setattr__(self, "mins", _frozen(mins))
        object.__setattr__(self, "maxs", _frozen(maxs))

    @property
    def degenerate(self) -> np.ndarray:
        return self.maxs == self.mins

    def to_dict(self) -> dict:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationParams":
        return cls(np.array(d["min"], dtype=float), np.array(d["max"], dtype=float))


def fit_normalization(series: TimeSeries) -> NormalizationParams:
    if len(series) == 0:
        raise DataError("cannot fit normalization on an empty series")
    return NormalizationParams(series.values.min(axis=0), series.values.max(axis=0))


def _span(params: NormalizationParams) -> np.ndarray:
    return np.where(params.degenerate, 1.0, params.maxs - params.mins)


def normalize(series: TimeSeries, params: NormalizationParams) -> TimeSeries:
    """Min-max scale into [0, 1]; out-of-range values clamp, constant channels map to 0."""
    if len(params.mins) != series.m:
        raise DataError(f"normalization params have {len(params.mins)} channels, series has {series.m}")
    scaled = (series.values - params.mins) / _span(params)
    scaled = np.clip(scaled, 0.0, 1.0)
    scaled[:, params.degenerate] = 0.0
    return series.with_values(scaled)


def denormalize(series: TimeSeries, params: NormalizationParams) -> TimeSeries:
    return series.with_values(series.values * _span(params) + params.mins)


def split(series: TimeSeries, train_len: int, val_len: int, test_len: int):
    """Contiguous chronological (train, validation, test) views."""
    lens = (train_len, val_len, test_len)
    if any(n < 0 for n in lens) or sum(lens) > len(series):
        raise ConfigError(f"split lengths {lens} exceed series length {len(series)}")
    a, b = train_len, train_len + val_len
    return series.slice(0, a), series.slice(a, b), series.slice(b, b + test_len)


def concat(*parts: TimeSeries) -> TimeSeries:
    parts = [p for p in parts if len(p)]
    first = parts[0]
    return TimeSeries(np.concatenate([p.timestamps for p in parts]),
                      np.concatenate([p.values for p in parts]),
                      first.channel_names, first.interval, first.utc_offset)


@dataclass(frozen=True)
class PredictedSequence:
    """Forecast ``S_i(i+1, i+L)`` made when frame ``source_index`` arrived."""

    source_index: int
    frames: np.ndarray  # (L, m)

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float64)
        if f.ndim != 2:
            raise ValueError("predicted frames must be (L, m)")
        object.__setattr__(self, "frames", _frozen(f))

    @property
    def L(self) -> int:
        return len(self.frames)

    def covering(self, start: int, end: int) -> np.ndarray:
        """Predicted frames for absolute indices ``start..end`` inclusive."""
        a, b = start - self.source_index - 1, end - self.source_index
        if a < 0 or b > len(self.frames):
            raise IndexError(f"source {self.source_index} does not cover {start}..{end}")
        return self.frames[a:b]
