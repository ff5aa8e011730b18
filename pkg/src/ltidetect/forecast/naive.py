"""Seasonal-naive forecaster: trend + daily + weekly table lookup, no learning.

Used to exercise the detector independently of the recurrent network.
"""

from __future__ import annotations

import numpy as np

from ..core import PredictedSequence, TimeSeries
from ..decomp import SeasonalProfile


def seasonal_naive_forecast(profile: SeasonalProfile, series: TimeSeries, source_index: int,
                            L: int, clamp: bool = False) -> PredictedSequence:
    ts = series.timestamps[source_index] + series.interval * np.arange(1, L + 1)
    pred = profile.reconstruct(ts)
    if clamp:
        pred = np.clip(pred, 0.0, 1.0)
    return PredictedSequence(source_index, pred)


class SeasonalNaiveForecaster:
    """Streaming adapter with the same ``forecast``/``reset`` surface as ForecastModel."""

    def __init__(self, profile: SeasonalProfile, L: int, interval: int, clamp: bool = True):
        self.profile, self.L, self.interval, self.clamp = profile, L, interval, clamp

    def reset(self) -> None:
        pass

    def forecast(self, timestamp: int, values) -> np.ndarray:
        ts = timestamp + self.interval * np.arange(1, self.L + 1)
        pred = self.profile.reconstruct(ts)
        return np.clip(pred, 0.0, 1.0) if self.clamp else pred

    def forecast_series(self, series: TimeSeries, warmup=None) -> np.ndarray:
        ts = series.timestamps[:, None] + self.interval * np.arange(1, self.L + 1)[None, :]
        pred = self.profile.reconstruct(ts.ravel()).reshape(len(series), self.L, -1)
        return np.clip(pred, 0.0, 1.0) if self.clamp else pred
