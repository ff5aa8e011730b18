"""Readers for the two public UCI event-detection datasets.

Raw formats (as distributed by the UCI repository):

* ``CalIt2.data``: ``flow_id,MM/DD/YY,HH:MM:SS,count``; flow 7 is out-flow,
  flow 9 is in-flow, half-hourly.
* ``CalIt2.events``: ``MM/DD/YY,HH:MM:SS,HH:MM:SS,description``.
* ``Dodgers.data``: ``M/D/YYYY H:MM,count``, 5-minute counts, ``-1`` = missing.
* ``Dodgers.events``: ``MM/DD/YY,HH:MM:SS,HH:MM:SS,attendance,opponent,score``.

Timestamps are local civil time and are stored with ``utc_offset = 0``.
"""

from __future__ import annotations

import csv
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .core import HOUR, LabelTrack, TimeSeries, aggregate_to_interval, regularize
from .errors import DataError, ParseError

DATA_ENV = "LTIDETECT_DATA"


def data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV, Path.cwd() / "data"))


def _epoch(dt: datetime) -> int:
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def _parse_dt(text: str, fmts) -> datetime:
    for f in fmts:
        try:
            return datetime.strptime(text.strip(), f)
        except ValueError:
            pass
    raise ValueError(text)


def read_calit2(path) -> TimeSeries:
    """Half-hourly two-channel series ``(in_flow, out_flow)``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    flows: dict[int, dict[int, float]] = {7: {}, 9: {}}
    with path.open(newline="") as fh:
        for rownum, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                flow = int(row[0])
            except ValueError:
                raise ParseError(path, rownum, "flow_id", f"bad flow id {row[0]!r}") from None
            try:
                t = _epoch(_parse_dt(f"{row[1]} {row[2]}", ("%m/%d/%y %H:%M:%S",)))
            except (ValueError, IndexError):
                raise ParseError(path, rownum, "timestamp", "bad date/time") from None
            try:
                flows.setdefault(flow, {})[t] = float(row[3])
            except (ValueError, IndexError):
                raise ParseError(path, rownum, "count", "not a number") from None
    stamps = sorted(set(flows[9]) & set(flows[7]))
    if not stamps:
        raise DataError(f"{path}: no rows with both in- and out-flow")
    vals = np.array([[flows[9][t], flows[7][t]] for t in stamps])
    return regularize(stamps, vals, ("in_flow", "out_flow"), interval=1800)


def read_dodgers(path) -> TimeSeries:
    """5-minute single-channel counts; ``-1`` readings are interpolated."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    stamps, vals = [], []
    with path.open(newline="") as fh:
        for rownum, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                stamps.append(_epoch(_parse_dt(row[0], ("%m/%d/%Y %H:%M", "%m/%d/%y %H:%M"))))
                vals.append(float(row[1]))
            except (ValueError, IndexError):
                raise ParseError(path, rownum, "timestamp/count", f"bad row {row!r}") from None
    ts = np.array(stamps, dtype=np.int64)
    v = np.array(vals)
    good = v >= 0
    if not good.any():
        raise DataError(f"{path}: every reading is missing")
    v = np.interp(ts, ts[good], v[good])
    return regularize(ts, v[:, None], ("count",), interval=300)


def read_events(path) -> list[tuple[int, int]]:
    """Event windows ``[begin, end)`` in epoch seconds; both UCI event files share the layout."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    out = []
    with path.open(newline="") as fh:
        for rownum, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                day = _parse_dt(row[0], ("%m/%d/%y", "%m/%d/%Y"))
                b = _parse_dt(row[1], ("%H:%M:%S", "%H:%M"))
                e = _parse_dt(row[2], ("%H:%M:%S", "%H:%M"))
            except (ValueError, IndexError):
                raise ParseError(path, rownum, "date/time", f"bad event row {row!r}") from None
            begin = _epoch(day.replace(hour=b.hour, minute=b.minute, second=b.second))
            end = _epoch(day.replace(hour=e.hour, minute=e.minute, second=e.second))
            if end <= begin:
                end += 24 * HOUR
            out.append((begin, end))
    return out


def label_events(series: TimeSeries, events) -> LabelTrack:
    """A frame ``[t, t + interval)`` is anomalous if it overlaps any event window."""
    t0 = series.timestamps
    t1 = t0 + series.interval
    lab = np.zeros(len(series), dtype=np.int8)
    for b, e in events:
        lab[(t0 < e) & (t1 > b)] = 1
    return LabelTrack(t0, lab)


def load_calit2(root=None):
    """Hourly CalIt2 (2400 frames) and its event labels."""
    root = Path(root) if root else data_dir()
    raw = read_calit2(root / "CalIt2.data")
    raw = raw.slice(0, min(len(raw), 4800))  # drop the trailing 120 hours
    hourly = aggregate_to_interval(raw, HOUR, "sum")
    return hourly, label_events(hourly, read_events(root / "CalIt2.events"))


def load_dodgers(root=None):
    root = Path(root) if root else data_dir()
    raw = read_dodgers(root / "Dodgers.data")
    hourly = aggregate_to_interval(raw, HOUR, "sum")
    return hourly, label_events(hourly, read_events(root / "Dodgers.events"))
