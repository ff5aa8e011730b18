"""Additive trend + daily/weekly Fourier decomposition and seasonal lookup tables.

Each channel is fit by one ordinary least-squares problem

    x(t) = trend(t) + sum_k [a_k cos(2 pi k h/24) + b_k sin(2 pi k h/24)]
                    + sum_k [c_k cos(2 pi k d/7)  + e_k sin(2 pi k d/7)] + noise

with ``h`` the civil hour of day and ``d`` the integer day of week. The daily and
weekly components are then tabulated into 24 and 7 entries respectively.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DAY, HOUR, WEEK, TimeSeries, day_of_week, hour_of_day
from .errors import ConfigError, DataError, RankDeficientError


@dataclass(frozen=True)
class DecompositionConfig:
    daily_fourier_order: int = 4
    weekly_fourier_order: int = 3
    trend: str = "linear"  # or "piecewise"
    n_knots: int = 4

    def __post_init__(self):
        if self.daily_fourier_order < 1 or self.weekly_fourier_order < 1:
            raise ConfigError("Fourier orders must be >= 1")
        if self.trend not in ("linear", "piecewise"):
            raise ConfigError(f"unknown trend kind {self.trend!r}")


@dataclass(frozen=True)
class Trend:
    """Linear trend with optional hinge terms, in time rescaled to [0, 1] over the fit span."""

    t0: int
    span: int
    coef: tuple[float, ...]
    knots: tuple[float, ...] = ()

    def __call__(self, timestamps) -> np.ndarray:
        tau = (np.asarray(timestamps, dtype=np.float64) - self.t0) / self.span
        return _trend_basis(tau, self.knots) @ np.asarray(self.coef)

    def to_dict(self) -> dict:
        return {"kind": "piecewise" if self.knots else "linear", "t0": self.t0,
                "span": self.span, "coef": list(self.coef), "knots": list(self.knots)}

    @classmethod
    def from_dict(cls, d: dict) -> "Trend":
        return cls(int(d["t0"]), int(d["span"]), tuple(map(float, d["coef"])),
                   tuple(map(float, d.get("knots", ()))))


def _trend_basis(tau: np.ndarray, knots) -> np.ndarray:
    cols = [np.ones_like(tau), tau] + [np.maximum(0.0, tau - k) for k in knots]
    return np.column_stack(cols)


def _fourier(phase: np.ndarray, order: int) -> np.ndarray:
    """``phase`` in cycles; returns cos/sin pairs for harmonics 1..order."""
    k = np.arange(1, order + 1)
    ang = 2 * np.pi * np.outer(phase, k)
    out = np.empty((len(phase), 2 * order))
    out[:, 0::2] = np.cos(ang)
    out[:, 1::2] = np.sin(ang)
    return out


@dataclass(frozen=True)
class SeasonalProfile:
    channel_names: tuple[str, ...]
    daily: np.ndarray   # (m, 24)
    weekly: np.ndarray  # (m, 7)
    trends: tuple[Trend, ...]
    residual_std: np.ndarray  # (m,)
    utc_offset: int = 0
    config: DecompositionConfig = field(default_factory=DecompositionConfig)

    @property
    def m(self) -> int:
        return len(self.channel_names)

    def features(self, timestamps) -> np.ndarray:
        """(n, 2m) seasonal features, channel-major, (daily, weekly) within a channel."""
        ts = np.atleast_1d(np.asarray(timestamps, dtype=np.int64))
        h = hour_of_day(ts, self.utc_offset)
        d = day_of_week(ts, self.utc_offset)
        out = np.empty((len(ts), 2 * self.m))
        out[:, 0::2] = self.daily[:, h].T
        out[:, 1::2] = self.weekly[:, d].T
        return out

    def trend_at(self, timestamps) -> np.ndarray:
        return np.column_stack([tr(timestamps) for tr in self.trends])

    def reconstruct(self, timestamps) -> np.ndarray:
        """trend + daily[h] + weekly[d] per channel, shape (n, m)."""
        ts = np.atleast_1d(np.asarray(timestamps, dtype=np.int64))
        f = self.features(ts)
        return self.trend_at(ts) + f[:, 0::2] + f[:, 1::2]

    def to_dict(self) -> dict:
        return {
            "utc_offset": self.utc_offset,
            "config": {"daily_fourier_order": self.config.daily_fourier_order,
                       "weekly_fourier_order": self.config.weekly_fourier_order,
                       "trend": self.config.trend, "n_knots": self.config.n_knots},
            "channels": {
                name: {"daily": self.daily[c].tolist(), "weekly": self.weekly[c].tolist(),
                       "trend": self.trends[c].to_dict(),
                       "residual_std": float(self.residual_std[c])}
                for c, name in enumerate(self.channel_names)
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeasonalProfile":
        ch = d["channels"]
        names = tuple(ch)
        daily = np.array([ch[n]["daily"] for n in names], dtype=np.float64).reshape(len(names), 24)
        weekly = np.array([ch[n]["weekly"] for n in names], dtype=np.float64).reshape(len(names), 7)
        return cls(names, daily, weekly, tuple(Trend.from_dict(ch[n]["trend"]) for n in names),
                   np.array([ch[n]["residual_std"] for n in names], dtype=np.float64),
                   int(d.get("utc_offset", 0)), DecompositionConfig(**d.get("config", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "SeasonalProfile":
        path = Path(path)
        if not path.exists():
            raise DataError(f"no such file: {path}")
        return cls.from_dict(json.loads(path.read_text()))

    @classmethod
    def zeros(cls, channel_names, utc_offset: int = 0) -> "SeasonalProfile":
        m = len(channel_names)
        return cls(tuple(channel_names), np.zeros((m, 24)), np.zeros((m, 7)),
                   tuple(Trend(0, 1, (0.0, 0.0)) for _ in range(m)), np.zeros(m), utc_offset)


def fit_decomposition(series: TimeSeries, config: DecompositionConfig | None = None) -> SeasonalProfile:
    config = config or DecompositionConfig()
    n = len(series)
    if n * series.interval < 2 * WEEK:
        raise DataError(f"decomposition needs two full weeks of data, got {n} frames")
    ts = series.timestamps
    t0, span = int(ts[0]), int(ts[-1] - ts[0])
    knots = tuple((j + 1) / (config.n_knots + 1) for j in range(config.n_knots)) \
        if config.trend == "piecewise" else ()
    tau = (ts - t0) / span
    hour = ((ts + series.utc_offset) % DAY) / HOUR
    dow = day_of_week(ts, series.utc_offset)
    n_trend = 2 + len(knots)
    nd = 2 * config.daily_fourier_order
    X = np.hstack([_trend_basis(tau, knots),
                   _fourier(hour / 24.0, config.daily_fourier_order),
                   _fourier(dow / 7.0, config.weekly_fourier_order)])
    if np.linalg.matrix_rank(X) < X.shape[1]:
        # the design is shared by every channel, so the first one is reported
        raise RankDeficientError(
            f"channel {series.channel_names[0]!r}: design matrix is rank deficient "
            f"({X.shape[1]} columns); reduce Fourier orders or knots")
    coef, *_ = np.linalg.lstsq(X, series.values, rcond=None)  # (p, m)

    daily = (_fourier(np.arange(24) / 24.0, config.daily_fourier_order)
             @ coef[n_trend:n_trend + nd]).T
    weekly = (_fourier(np.arange(7) / 7.0, config.weekly_fourier_order)
              @ coef[n_trend + nd:]).T
    shift = daily.mean(axis=1) + weekly.mean(axis=1)
    daily -= daily.mean(axis=1, keepdims=True)
    weekly -= weekly.mean(axis=1, keepdims=True)
    coef[0] += shift
    trends = tuple(Trend(t0, span, tuple(float(v) for v in coef[:n_trend, c]), knots)
                   for c in range(series.m))
    profile = SeasonalProfile(series.channel_names, daily, weekly, trends,
                              np.zeros(series.m), series.utc_offset, config)
    resid = series.values - profile.reconstruct(ts)
    return SeasonalProfile(series.channel_names, daily, weekly, trends,
                           resid.std(axis=0), series.utc_offset, config)


def seasonal_features(timestamp, profile: SeasonalProfile) -> np.ndarray:
    """The 2m-vector of (daily, weekly) table entries for one instant."""
    return profile.features([timestamp])[0]
