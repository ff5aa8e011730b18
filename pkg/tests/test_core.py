import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ltidetect.core import (HOUR, LabelTrack, NormalizationParams, TimeSeries,
                            aggregate_to_interval, concat, day_of_week, denormalize,
                            fit_normalization, format_timestamp, hour_of_day, load_csv,
                            load_labels, normalize, parse_timestamp, split, write_csv, write_labels)
from ltidetect.datasets import label_events, read_calit2, read_dodgers, read_events
from ltidetect.errors import AlignmentError, ConfigError, DataError, GapError, ParseError

T0 = parse_timestamp("2024-01-01T00:00:00")


def _write(tmp_path, text, name="s.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# ------------------------------------------------------------------ loading

def test_load_three_rows(tmp_path):
    p = _write(tmp_path, "timestamp,a,b\n2024-01-01T00:00:00,1,2\n"
                         "2024-01-01T01:00:00,3,4\n2024-01-01T02:00:00,5,6\n")
    s = load_csv(p)
    assert s.m == 2 and len(s) == 3 and s.interval == HOUR
    assert s.channel_names == ("a", "b")
    np.testing.assert_array_equal(s.values, [[1, 2], [3, 4], [5, 6]])


def test_gap_is_an_error_naming_the_missing_stamp(tmp_path):
    p = _write(tmp_path, "timestamp,a\n2024-01-01T00:00:00,1\n2024-01-01T01:00:00,2\n"
                         "2024-01-01T03:00:00,4\n")
    with pytest.raises(GapError, match="2024-01-01T02:00:00"):
        load_csv(p)
    s = load_csv(p, fill_gaps=True)
    np.testing.assert_array_equal(s.values[:, 0], [1, 2, 3, 4])


def test_parse_error_reports_row_and_column(tmp_path):
    p = _write(tmp_path, "timestamp,a,b\n2024-01-01T00:00:00,1,2\n2024-01-01T01:00:00,3,x\n")
    with pytest.raises(ParseError) as ei:
        load_csv(p)
    assert ei.value.row == 3 and ei.value.column == "b"


def test_non_monotonic_and_empty(tmp_path):
    p = _write(tmp_path, "timestamp,a\n2024-01-01T01:00:00,1\n2024-01-01T00:00:00,2\n")
    with pytest.raises(DataError, match="strictly increasing"):
        load_csv(p)
    with pytest.raises(DataError, match="empty"):
        load_csv(_write(tmp_path, "", "e.csv"))
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "missing.csv")


def test_column_selection(tmp_path):
    p = _write(tmp_path, "timestamp,a,b\n2024-01-01T00:00:00,1,2\n2024-01-01T01:00:00,3,4\n")
    s = load_csv(p, columns=["b"])
    assert s.channel_names == ("b",)
    np.testing.assert_array_equal(s.values[:, 0], [2, 4])


def test_csv_round_trip(tmp_path, rng):
    s = TimeSeries.from_values(rng.normal(size=(30, 3)), start=T0)
    write_csv(s, tmp_path / "o.csv")
    back = load_csv(tmp_path / "o.csv")
    np.testing.assert_array_equal(back.values, s.values)  # repr() floats round-trip exactly
    np.testing.assert_array_equal(back.timestamps, s.timestamps)


def test_labels_round_trip_and_align(tmp_path):
    track = LabelTrack(T0 + HOUR * np.arange(6), [0, 1, 0, 0, 1, 0])
    write_labels(track, tmp_path / "l.csv")
    back = load_labels(tmp_path / "l.csv")
    np.testing.assert_array_equal(back.labels, track.labels)
    sub = back.align(T0 + HOUR * np.array([1, 4]))
    assert sub.labels.tolist() == [1, 1]
    with pytest.raises(AlignmentError):
        back.align([T0 + 100 * HOUR])


def test_civil_time_helpers():
    # 2024-01-01 was a Monday
    assert day_of_week(T0) == 0 and hour_of_day(T0) == 0
    assert hour_of_day(T0, utc_offset=-8 * HOUR) == 16
    assert day_of_week(T0, utc_offset=-8 * HOUR) == 6
    assert format_timestamp(T0) == "2024-01-01T00:00:00+00:00"
    assert parse_timestamp("2024-01-01T01:00:00+01:00") == T0


# -------------------------------------------------------------- aggregation

def test_half_hourly_to_hourly_count():
    s = TimeSeries.from_values(np.ones((4800, 2)), start=T0, interval=1800)
    h = aggregate_to_interval(s, HOUR, "sum")
    assert len(h) == 2400 and h.m == 2 and h.interval == HOUR
    assert np.all(h.values == 2.0)


def test_aggregate_identity(rng):
    s = TimeSeries.from_values(rng.normal(size=(10, 2)), start=T0)
    assert aggregate_to_interval(s, HOUR) is s


def test_five_minute_sums_match_window_oracle(rng):
    vals = rng.integers(0, 40, size=(48, 1)).astype(float)
    s = TimeSeries.from_values(vals, start=T0, interval=300)
    h = aggregate_to_interval(s, HOUR, "sum")
    oracle = [sum(vals[12 * k + j, 0] for j in range(12)) for k in range(4)]
    assert h.values[:, 0].tolist() == oracle
    assert h.timestamps.tolist() == [T0 + k * HOUR for k in range(4)]


def test_aggregate_errors_and_mean(rng):
    s = TimeSeries.from_values(rng.normal(size=(7, 1)), start=T0, interval=1800)
    with pytest.raises(ConfigError):
        aggregate_to_interval(s, 2700)
    m = aggregate_to_interval(s, HOUR, "mean")
    assert len(m) == 3  # trailing half window dropped
    np.testing.assert_allclose(m.values[:, 0], s.values[:6, 0].reshape(3, 2).mean(axis=1))
    with pytest.raises(ConfigError):
        aggregate_to_interval(s, HOUR, "median")


@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 60), st.integers(1, 3)),
                  elements=st.integers(-1000, 1000).map(float)), st.sampled_from([2, 3, 4, 6]))
def test_sum_conserves_totals(vals, k):
    s = TimeSeries.from_values(vals, start=T0, interval=600)
    a = aggregate_to_interval(s, 600 * k, "sum")
    n = (len(vals) // k) * k
    np.testing.assert_array_equal(a.values.sum(axis=0), vals[:n].sum(axis=0))


# ------------------------------------------------------------ normalization

def test_fit_normalization_examples():
    s = TimeSeries.from_values(np.array([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]]), start=T0)
    p = fit_normalization(s)
    assert p.mins.tolist() == [2.0, 5.0] and p.maxs.tolist() == [6.0, 5.0]
    assert p.degenerate.tolist() == [False, True]


def test_normalize_examples():
    p = NormalizationParams(np.array([2.0, 5.0]), np.array([6.0, 5.0]))
    s = TimeSeries.from_values(np.array([[2.0, 5.0], [6.0, 7.0], [4.0, 1.0], [9.0, 5.0], [-1.0, 5.0]]),
                               start=T0)
    n = normalize(s, p).values
    assert n[:, 0].tolist() == [0.0, 1.0, 0.5, 1.0, 0.0]
    assert np.all(n[:, 1] == 0.0)
    with pytest.raises(DataError):
        normalize(TimeSeries.from_values(np.zeros((2, 3)), start=T0), p)


@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 40), st.integers(1, 3)),
                  elements=st.floats(-1e6, 1e6)))
def test_normalize_round_trip(vals):
    s = TimeSeries.from_values(vals, start=T0)
    p = fit_normalization(s)
    n = normalize(s, p)
    assert np.all((n.values >= 0) & (n.values <= 1))
    ok = ~p.degenerate
    back = denormalize(n, p).values
    span = np.maximum(np.abs(vals[:, ok]), p.maxs[ok] - p.mins[ok])
    assert np.all(np.abs(back[:, ok] - vals[:, ok]) <= 1e-12 * np.maximum(span, 1e-300) + 1e-300)


# --------------------------------------------------------------------- split

def test_split_lengths():
    s = TimeSeries.from_values(np.zeros((2700, 2)), start=T0)
    a, b, c = split(s, 1900, 300, 500)
    assert (len(a), len(b), len(c)) == (1900, 300, 500)
    full, e1, e2 = split(s, 2700, 0, 0)
    assert len(full) == 2700 and len(e1) == len(e2) == 0
    with pytest.raises(ConfigError):
        split(s, 2000, 300, 500)


def test_calit2_preset_fits_2400_hours():
    from ltidetect.pipeline import PRESETS
    p = PRESETS["calit2"]
    assert p["train_len"] + p["val_len"] == 1900 and p["test_len"] == 500


def test_dodgers_split():
    s = TimeSeries.from_values(np.zeros((4500, 1)), start=T0)
    assert [len(v) for v in split(s, 3000, 500, 1000)] == [3000, 500, 1000]


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_split_is_a_partition(a, b, c):
    s = TimeSeries.from_values(np.arange(160, dtype=float), start=T0)
    parts = split(s, a, b, c)
    joined = np.concatenate([p.values[:, 0] for p in parts])
    np.testing.assert_array_equal(joined, s.values[:a + b + c, 0])
    if a + b + c:
        assert np.array_equal(concat(*parts).timestamps, s.timestamps[:a + b + c])


def test_series_is_immutable(rng):
    s = TimeSeries.from_values(rng.normal(size=(5, 2)), start=T0)
    with pytest.raises(ValueError):
        s.values[0, 0] = 1.0


# ------------------------------------------------------------ raw UCI files

def test_read_calit2_pairs_flows(tmp_path):
    rows = []
    for k in range(4):
        hh, mm = divmod(30 * k, 60)
        rows.append(f"7,07/24/05,{hh:02d}:{mm:02d}:00,{k}")
        rows.append(f"9,07/24/05,{hh:02d}:{mm:02d}:00,{10 + k}")
    p = _write(tmp_path, "\n".join(rows) + "\n", "CalIt2.data")
    s = read_calit2(p)
    assert s.m == 2 and s.interval == 1800 and len(s) == 4
    assert s.channel_names == ("in_flow", "out_flow")
    np.testing.assert_array_equal(s.values[:, 0], [10, 11, 12, 13])
    np.testing.assert_array_equal(s.values[:, 1], [0, 1, 2, 3])


def test_read_dodgers_interpolates_missing(tmp_path):
    p = _write(tmp_path, "4/10/2005 0:00,4\n4/10/2005 0:05,-1\n4/10/2005 0:10,8\n", "Dodgers.data")
    s = read_dodgers(p)
    assert s.interval == 300
    np.testing.assert_array_equal(s.values[:, 0], [4, 6, 8])


def test_events_label_overlapping_frames(tmp_path):
    p = _write(tmp_path, "07/24/05,01:30:00,02:00:00,talk\n", "ev")
    ev = read_events(p)
    s = TimeSeries.from_values(np.zeros((4, 1)), start=parse_timestamp("2005-07-24T00:00:00"))
    assert label_events(s, ev).labels.tolist() == [0, 1, 0, 0]
