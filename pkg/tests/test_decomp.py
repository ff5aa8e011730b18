import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ltidetect.core import DAY, HOUR, WEEK, TimeSeries, day_of_week, hour_of_day, parse_timestamp
from ltidetect.decomp import DecompositionConfig, SeasonalProfile, fit_decomposition, seasonal_features
from ltidetect.errors import ConfigError, DataError, RankDeficientError

T0 = parse_timestamp("2024-01-01T00:00:00")  # Monday


def series_of(values, start=T0):
    return TimeSeries.from_values(values, start=start)


def test_constant_channel_has_flat_tables():
    p = fit_decomposition(series_of(np.full(24 * 21, 0.4)))
    assert np.all(np.abs(p.daily) <= 1e-9) and np.all(np.abs(p.weekly) <= 1e-9)
    np.testing.assert_allclose(p.trend_at([T0, T0 + 500 * HOUR]), 0.4, atol=1e-12)


def test_daily_sinusoid_recovered_exactly():
    n = 24 * 15
    hours = np.arange(n) % 24
    p = fit_decomposition(series_of(np.sin(2 * np.pi * hours / 24)))
    np.testing.assert_allclose(p.daily[0], np.sin(2 * np.pi * np.arange(24) / 24), atol=1e-6)
    np.testing.assert_allclose(p.weekly[0], 0.0, atol=1e-6)


def test_weekday_weekend_step_on_a_ramp():
    n = 24 * 7 * 4
    ts = T0 + HOUR * np.arange(n)
    dow = day_of_week(ts)
    step = 0.3
    x = 0.1 + 0.2 * np.arange(n) / n + step * (dow >= 5)
    p = fit_decomposition(series_of(x))
    # oracle: per-day means after removing the known ramp, centered
    detr = x - 0.2 * np.arange(n) / n
    per_day = np.array([detr[dow == d].mean() for d in range(7)])
    per_day -= per_day.mean()
    assert np.max(np.abs(p.weekly[0] - per_day)) <= 0.02 * step


def test_tables_are_centered_and_sized(rng):
    n = 24 * 7 * 3
    x = rng.normal(size=(n, 3)) + np.sin(np.arange(n) / 5)[:, None]
    p = fit_decomposition(series_of(x))
    assert p.daily.shape == (3, 24) and p.weekly.shape == (3, 7)
    assert np.all(np.abs(p.daily.sum(axis=1)) <= 1e-6)
    assert np.all(np.abs(p.weekly.sum(axis=1)) <= 1e-6)


def test_reconstruction_residual_matches_profile(rng):
    n = 24 * 7 * 3
    hours = np.arange(n) % 24
    x = 0.5 + 0.2 * np.cos(2 * np.pi * hours / 24)[:, None] + rng.normal(0, 0.05, (n, 2))
    s = series_of(x)
    p = fit_decomposition(s)
    resid = s.values - p.reconstruct(s.timestamps)
    np.testing.assert_allclose(resid.std(axis=0), p.residual_std, rtol=1e-12)


def test_too_short_and_bad_config():
    with pytest.raises(DataError):
        fit_decomposition(series_of(np.zeros(24 * 13)))
    with pytest.raises(ConfigError):
        DecompositionConfig(daily_fourier_order=0)
    with pytest.raises(ConfigError):
        DecompositionConfig(trend="cubic")


def test_rank_deficiency_names_channel():
    # weekly order 4 needs 8 columns but only 7 distinct days exist
    with pytest.raises(RankDeficientError, match="'ch0'"):
        fit_decomposition(series_of(np.zeros(24 * 21)), DecompositionConfig(weekly_fourier_order=4))


def test_piecewise_trend_follows_a_kink():
    n = 24 * 7 * 4
    t = np.arange(n) / n
    x = np.where(t < 0.6, t, 0.6 - 2 * (t - 0.6))
    p = fit_decomposition(series_of(x), DecompositionConfig(trend="piecewise", n_knots=4))
    lin = fit_decomposition(series_of(x))
    assert p.residual_std[0] < 0.5 * lin.residual_std[0]


def test_feature_layout():
    daily = np.arange(48, dtype=float).reshape(2, 24)
    weekly = 100 + np.arange(14, dtype=float).reshape(2, 7)
    base = SeasonalProfile.zeros(["a", "b"])
    p = SeasonalProfile(("a", "b"), daily, weekly, base.trends, base.residual_std)
    ts = T0 + 2 * DAY + 5 * HOUR  # Wednesday 05:00
    f = seasonal_features(ts, p)
    assert f.tolist() == [daily[0, 5], weekly[0, 2], daily[1, 5], weekly[1, 2]]


@pytest.mark.parametrize("m", [2, 5])
def test_feature_width(m):
    p = SeasonalProfile.zeros([f"c{i}" for i in range(m)])
    f = seasonal_features(T0, p)
    assert f.shape == (2 * m,) and np.all(f == 0)


@given(st.integers(0, 10**7), st.integers(-12, 12))
def test_features_are_weekly_periodic(offset, tz_hours):
    rng = np.random.default_rng(offset)
    base = SeasonalProfile.zeros(["a"], utc_offset=tz_hours * HOUR)
    p = SeasonalProfile(("a",), rng.normal(size=(1, 24)), rng.normal(size=(1, 7)),
                        base.trends, base.residual_std, base.utc_offset)
    ts = T0 + offset * 60
    assert np.array_equal(p.features([ts]), p.features([ts + WEEK]))
    h, d = hour_of_day(ts, p.utc_offset), day_of_week(ts, p.utc_offset)
    assert p.features([ts])[0].tolist() == [p.daily[0, h], p.weekly[0, d]]


def test_profile_json_round_trip_is_deterministic(tmp_path, rng):
    n = 24 * 7 * 3
    s = series_of(rng.uniform(size=(n, 2)))
    p1, p2 = fit_decomposition(s), fit_decomposition(s)
    p1.save(tmp_path / "a.json")
    p2.save(tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert set(doc["channels"]) == {"ch0", "ch1"}
    ch = doc["channels"]["ch0"]
    assert len(ch["daily"]) == 24 and len(ch["weekly"]) == 7 and "trend" in ch and "residual_std" in ch
    back = SeasonalProfile.load(tmp_path / "a.json")
    np.testing.assert_array_equal(back.reconstruct(s.timestamps), p1.reconstruct(s.timestamps))
