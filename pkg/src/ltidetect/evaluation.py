"""ROC/AUC, the synthetic multi-seasonal generator, and per-frame overhead benchmarks."""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import DAY, HOUR, LabelTrack, TimeSeries
from .errors import AlignmentError, DataError

# 2024-01-01 00:00 UTC, a Monday
SYNTHETIC_START = 1704067200


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fpr", "tpr"])
            for x, y in zip(self.fpr, self.tpr):
                w.writerow([repr(float(x)), repr(float(y))])
            fh.write(f"# AUC={self.auc!r}\n")


def roc_curve(scores, labels) -> RocCurve:
    """ROC by sweeping distinct score thresholds high to low; equal scores form one step."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise AlignmentError(f"{len(s)} scores vs {len(y)} labels")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC is undefined unless both classes are present")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]  # final index of each tie group
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1])) / 2.0)
    return RocCurve(fpr, tpr, np.r_[np.inf, s[last]], auc)


def roc_auc(scores, labels) -> RocCurve:
    """Accepts raw arrays or a ScoreStream + LabelTrack (aligned on timestamps)."""
    if hasattr(scores, "records"):
        ts = scores.timestamps
        if isinstance(labels, LabelTrack):
            if len(labels) != len(ts):
                labels = labels.align(ts)
            elif not np.array_equal(labels.timestamps, ts):
                raise AlignmentError("score and label timestamps differ")
            labels = labels.labels
        scores = scores.scores
    elif isinstance(labels, LabelTrack):
        labels = labels.labels
    return roc_curve(scores, labels)


# ----------------------------------------------------------------- synthetic


@dataclass(frozen=True)
class Injection:
    index: int
    magnitude: float
    duration: int = 1
    channels: tuple[int, ...] | None = None  # None = every channel


@dataclass(frozen=True)
class SyntheticSpec:
    channels: int = 2
    length: int = 2400
    daily_amplitude: tuple[float, ...] = (1.0, 1.0)
    weekly_amplitude: tuple[float, ...] = (1.0, 1.0)
    noise_std: float = 0.1
    injections: tuple[Injection, ...] = ()
    rng_seed: int = 0
    trend_slope: float = 0.0  # total drift over the series
    base_level: float = 5.0
    start: int = SYNTHETIC_START
    interval: int = HOUR

    def __post_init__(self):
        for name in ("daily_amplitude", "weekly_amplitude"):
            if len(getattr(self, name)) != self.channels:
                raise DataError(f"{name} needs one entry per channel")
        for inj in self.injections:
            if inj.index < 0 or inj.index + inj.duration > self.length or inj.duration < 1:
                raise DataError(f"injection {inj} falls outside the series")


# per-day weekly levels, Monday first: a weekday plateau and a low weekend
_WEEK_LEVELS = np.array([0.8, 1.0, 1.0, 0.9, 0.6, -1.6, -1.7])


def _weekly_shape(t_sec: np.ndarray, phase_days: float) -> np.ndarray:
    """Square-ish weekly pattern: per-day plateaus with 3-hour smoothed steps."""
    days = (t_sec / DAY + phase_days)
    d = np.floor(days).astype(int) % 7
    frac = days - np.floor(days)
    prev = _WEEK_LEVELS[(d - 1) % 7]
    w = np.clip(frac * 8.0, 0.0, 1.0)  # ramp over the first 3 hours of a day
    return prev + (_WEEK_LEVELS[d] - prev) * w


def generate_synthetic(spec: SyntheticSpec) -> tuple[TimeSeries, LabelTrack]:
    rng = np.random.default_rng(spec.rng_seed)
    n, m = spec.length, spec.channels
    ts = spec.start + spec.interval * np.arange(n, dtype=np.int64)
    rel = (ts - ts[0]).astype(np.float64)
    hours = (ts % DAY) / HOUR
    phases = rng.uniform(0, 24, m)
    vals = np.empty((n, m))
    for c in range(m):
        ang = 2 * np.pi * (hours - phases[c]) / 24
        daily = spec.daily_amplitude[c] * (np.sin(ang) + 0.35 * np.sin(2 * ang))
        weekly = spec.weekly_amplitude[c] * _weekly_shape(ts - SYNTHETIC_START, 0.0)
        trend = spec.base_level + spec.trend_slope * rel / max(rel[-1], 1.0)
        vals[:, c] = trend + daily + weekly + rng.normal(0.0, spec.noise_std, n)
    labels = np.zeros(n, dtype=np.int8)
    for inj in spec.injections:
        chans = list(range(m)) if inj.channels is None else list(inj.channels)
        sl = slice(inj.index, inj.index + inj.duration)
        vals[sl, chans] += inj.magnitude
        labels[sl] = 1
    names = tuple(f"ch{c}" for c in range(m))
    return TimeSeries(ts, vals, names, spec.interval), LabelTrack(ts, labels)


def random_injections(length: int, contamination: float, *, start: int = 0, magnitude: float = 1.0,
                      max_duration: int = 4, n_channels: int = 1, rng_seed: int = 0,
                      min_gap: int = 12) -> tuple[Injection, ...]:
    """Non-overlapping injections covering ``round(contamination * (length - start))`` frames.

    Durations are drawn first, then the free frames are split at random between
    the injections, keeping at least ``min_gap`` normal frames between two of them
    (less if the span is too crowded). Each injection hits a random channel subset
    with magnitude ``+-magnitude * U(0.8, 1.5)``.
    """
    rng = np.random.default_rng(rng_seed)
    span = length - start
    target = int(round(contamination * span))
    durs: list[int] = []
    while sum(durs) < target:
        durs.append(int(min(rng.integers(1, max_duration + 1), target - sum(durs))))
    k = len(durs)
    if k == 0:
        return ()
    slack = span - target
    gap = min(min_gap, slack // max(k - 1, 1)) if k > 1 else 0
    free = slack - gap * (k - 1)
    extra = np.sort(rng.integers(0, free + 1, k))
    out = []
    pos = start
    for j, dur in enumerate(durs):
        i = pos + int(extra[j])
        n = int(rng.integers(1, n_channels + 1))
        chans = tuple(sorted(rng.choice(n_channels, size=n, replace=False).tolist()))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        out.append(Injection(i, sign * magnitude * rng.uniform(0.8, 1.5), dur, chans))
        pos += dur + gap
    return tuple(out)


# --------------------------------------------------------------------- bench


@dataclass
class BenchReport:
    L: int
    m: int
    lanes: int
    frames: int
    mean_ms: float
    p50_ms: float
    p99_ms: float
    scores_digest: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def bench_detection(make_detector, series: TimeSeries, L, lanes: int = 1,
                    repeats: int = 3, forecasts=None) -> list[BenchReport]:
    """Time ``Detector.step`` per frame for each L in ``L`` and 1..``lanes`` worker lanes.

    ``make_detector(L, lanes)`` returns a fresh, independent detector. All
    configurations are stepped in lockstep, frame by frame, so clock drift on a
    shared machine hits them equally. Warm-up frames are excluded and the
    fastest of ``repeats`` passes is kept for each frame.
    """
    L_values = [L] if np.ndim(L) == 0 else list(L)
    configs = [(int(Lv), n) for Lv in L_values for n in range(1, lanes + 1)]
    best: dict = {c: None for c in configs}
    digests: dict = {}
    for _ in range(repeats):
        dets = {c: make_detector(*c) for c in configs}
        times = {c: [] for c in configs}
        scores = {c: [] for c in configs}
        for i in range(len(series)):
            ts, vals = int(series.timestamps[i]), series.values[i]
            for c in configs:
                fc = None if forecasts is None else forecasts[c[0]][i]
                t0 = time.perf_counter()
                rec = dets[c].step(ts, vals, fc)
                dt = time.perf_counter() - t0
                if rec is not None:
                    times[c].append(dt)
                    scores[c].append(rec.score)
        for c in configs:
            t = np.array(times[c]) * 1e3
            best[c] = t if best[c] is None else np.minimum(best[c], t)
            digests[c] = hashlib.sha256(np.array(scores[c]).tobytes()).hexdigest()[:16]
    return [BenchReport(c[0], series.m, c[1], len(best[c]), float(best[c].mean()),
                        float(np.percentile(best[c], 50)), float(np.percentile(best[c], 99)),
                        digests[c]) for c in configs]


def save_bench(reports, path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in reports], indent=1) + "\n")
