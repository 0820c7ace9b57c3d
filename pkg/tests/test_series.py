import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capmix.series import (
    InvalidInputError,
    StandardizationStats,
    TimeSeries,
    WindowConfig,
    anomaly_segments,
    inverse_standardize,
    read_csv,
    segments_to_labels,
    slide_windows,
    standardize,
    window_array,
    window_count,
    write_csv,
)


def test_timeseries_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        TimeSeries(np.zeros((0, 1)))
    with pytest.raises(InvalidInputError):
        TimeSeries(np.array([[1.0], [np.nan]]))
    with pytest.raises(InvalidInputError):
        TimeSeries(np.zeros((3, 1)), labels=np.array([0, 2, 0]))
    with pytest.raises(InvalidInputError):
        TimeSeries(np.zeros((3, 1)), labels=np.array([0, 1]))


def test_standardize_population_std():
    out, stats = standardize(TimeSeries(np.array([[1.0], [2.0], [3.0]])))
    np.testing.assert_allclose(out.values[:, 0], [-1.224744871391589, 0.0, 1.224744871391589], atol=1e-12)
    assert stats.mean[0] == 2.0
    assert stats.std[0] == pytest.approx(np.sqrt(2 / 3))


def test_standardize_constant_dim_warns(caplog):
    out, stats = standardize(TimeSeries(np.array([[5.0], [5.0], [5.0]])))
    assert "zero-variance" in caplog.text
    np.testing.assert_array_equal(out.values, 0.0)
    assert stats.std[0] == 1.0


def test_standardize_reuses_given_stats():
    series = TimeSeries(np.array([[1.0, 10.0], [3.0, 30.0]]))
    stats = StandardizationStats(np.array([1.0, 0.0]), np.array([2.0, 10.0]))
    out, same = standardize(series, stats)
    assert same is stats
    np.testing.assert_array_equal(out.values, [[0.0, 1.0], [1.0, 3.0]])


def test_standardize_idempotent_and_invertible(rng):
    series = TimeSeries(rng.normal(3, 2, size=(200, 3)))
    once, stats = standardize(series)
    np.testing.assert_allclose(once.values.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(once.values.std(axis=0), 1, atol=1e-9)
    twice, _ = standardize(once)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-9)
    np.testing.assert_allclose(inverse_standardize(once, stats).values, series.values, atol=1e-9)


def test_slide_windows_examples():
    series = TimeSeries(np.arange(10.0)[:, None])
    wins = slide_windows(series, WindowConfig(4, 2))
    assert [w.start for w in wins] == [0, 2, 4, 6]
    assert len(slide_windows(series, WindowConfig(10, 3))) == 1
    labelled = TimeSeries(np.zeros((4, 1)), labels=np.array([0, 0, 1, 0]))
    assert [w.label for w in slide_windows(labelled, WindowConfig(2, 2))] == [0.0, 1.0]


def test_window_longer_than_series_rejected():
    with pytest.raises(InvalidInputError):
        slide_windows(TimeSeries(np.zeros((3, 1))), WindowConfig(4, 1))
    with pytest.raises(InvalidInputError):
        WindowConfig(4, 5)


def test_window_count_exhaustive():
    for length in range(1, 33):
        for t in range(1, length + 1):
            for stride in range(1, t + 1):
                cfg = WindowConfig(t, stride)
                series = TimeSeries(np.arange(float(length))[:, None])
                data, starts, _ = window_array(series, cfg)
                expected = (length - t) // stride + 1
                assert window_count(length, cfg) == expected == len(data)
                assert starts[-1] + t <= length


def test_window_array_contents():
    series = TimeSeries(np.arange(12.0).reshape(6, 2), labels=np.array([0, 0, 0, 0, 0, 1]))
    data, starts, labels = window_array(series, WindowConfig(3, 3))
    np.testing.assert_array_equal(starts, [0, 3])
    np.testing.assert_array_equal(data[1], series.values[3:6])
    np.testing.assert_array_equal(labels, [0, 1])


def test_anomaly_segments_examples():
    assert anomaly_segments([0, 1, 1, 0, 1]) == [(1, 3), (4, 5)]
    assert anomaly_segments([0, 0, 0]) == []
    assert anomaly_segments([1, 1, 1, 1]) == [(0, 4)]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=60))
def test_segments_round_trip(labels):
    segs = anomaly_segments(labels)
    np.testing.assert_array_equal(segments_to_labels(segs, len(labels)), labels)
    for (a, b), (c, _) in zip(segs, segs[1:]):
        assert a < b < c


def test_csv_round_trip(tmp_path, rng):
    series = TimeSeries(rng.normal(size=(15, 2)), labels=(rng.random(15) < 0.3).astype(int), name="x")
    path = tmp_path / "s.csv"
    write_csv(series, path)
    back = read_csv(path)
    np.testing.assert_array_equal(back.values, series.values)
    np.testing.assert_array_equal(back.labels, series.labels)
    assert path.read_text().splitlines()[0] == "time,dim_0,dim_1,label"


def test_csv_without_labels(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("time,dim_0\n0,1.5\n1,2.5\n")
    series = read_csv(path)
    assert series.labels is None
    np.testing.assert_array_equal(series.values[:, 0], [1.5, 2.5])


@pytest.mark.parametrize("text", ["", "t,dim_0\n0,1\n", "time,dim_1\n0,1\n", "time,dim_0\n", "time,dim_0\n0,x\n"])
def test_csv_rejects_malformed(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(InvalidInputError):
        read_csv(path)
