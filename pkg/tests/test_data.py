import numpy as np
import pytest

from timemar.data import (
    RawSeries,
    gen_sines,
    inverse_scale,
    load_csv,
    make_windows,
    minmax_scale,
)
from timemar.errors import DataError


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_reads_known_literals_in_row_order(self, tmp_path):
        path = _write(tmp_path, "tiny.csv", "a,b\n1.5,2\n-3,4e-1\n0.0,7\n")
        raw = load_csv(path, has_header=True)
        assert raw.length == 3 and raw.num_features == 2
        np.testing.assert_array_equal(
            raw.values, np.array([[1.5, 2.0], [-3.0, 0.4], [0.0, 7.0]])
        )
        assert raw.column_names == ["a", "b"]

    def test_large_shape(self, tmp_path):
        rows = "\n".join(",".join("1.0" for _ in range(7)) for _ in range(200))
        path = _write(tmp_path, "wide.csv", "h1,h2,h3,h4,h5,h6,h7\n" + rows + "\n")
        raw = load_csv(path, has_header=True)
        assert raw.length == 200 and raw.num_features == 7

    def test_header_only_is_empty_body(self, tmp_path):
        path = _write(tmp_path, "empty.csv", "a,b\n")
        with pytest.raises(DataError, match="empty data body"):
            load_csv(path, has_header=True)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="missing file"):
            load_csv(tmp_path / "nope.csv")

    def test_ragged_rows_report_line(self, tmp_path):
        path = _write(tmp_path, "ragged.csv", "1,2\n3,4,5\n")
        with pytest.raises(DataError, match="line 2"):
            load_csv(path, has_header=False)

    def test_non_numeric_cell_reports_position(self, tmp_path):
        path = _write(tmp_path, "bad.csv", "1,2\n3,oops\n")
        with pytest.raises(DataError, match="row 2, column 2"):
            load_csv(path, has_header=False)

    def test_drop_timestamp_column(self, tmp_path):
        path = _write(tmp_path, "ts.csv", "date,v\n2016-07-01,3.5\n2016-07-02,4.5\n")
        raw = load_csv(path, has_header=True, drop_timestamp_column=True)
        assert raw.num_features == 1
        np.testing.assert_array_equal(raw.values[:, 0], [3.5, 4.5])


class TestMakeWindows:
    def _raw(self, length, features=2):
        values = np.arange(length * features, dtype=np.float64).reshape(length, features)
        return RawSeries(values=values, column_names=[], source="test")

    def test_count_matches_offset_enumeration(self):
        # Oracle: enumerate every valid start offset for each (L, T, stride).
        for length in (4, 10, 24, 37):
            for t in (1, 3, 4):
                for stride in (1, 2, 4, 5):
                    if t > length:
                        continue
                    expected_offsets = [
                        i for i in range(0, length - t + 1)
                        if i % stride == 0
                    ]
                    ds = make_windows(self._raw(length), t, stride)
                    assert ds.num_windows == len(expected_offsets)
                    for w, offset in enumerate(expected_offsets):
                        np.testing.assert_array_equal(
                            ds.windows[w], self._raw(length).values[offset : offset + t]
                        )

    def test_length_10_t4_stride1_gives_7(self):
        assert make_windows(self._raw(10), 4, 1).num_windows == 7

    def test_window_equal_to_series(self):
        raw = self._raw(24)
        ds = make_windows(raw, 24, 1)
        assert ds.num_windows == 1
        np.testing.assert_array_equal(ds.windows[0], raw.values)

    def test_stride_4_offsets(self):
        raw = self._raw(10)
        ds = make_windows(raw, 4, 4)
        assert ds.num_windows == 2
        np.testing.assert_array_equal(ds.windows[0], raw.values[0:4])
        np.testing.assert_array_equal(ds.windows[1], raw.values[4:8])

    def test_window_longer_than_series(self):
        with pytest.raises(DataError, match="exceeds"):
            make_windows(self._raw(5), 6, 1)

    def test_never_reads_past_end(self):
        for stride in (1, 2, 3):
            ds = make_windows(self._raw(11), 5, stride)
            n = ds.num_windows
            assert (n - 1) * stride + 5 <= 11


class TestScaling:
    def test_midpoint_maps_to_half(self):
        from timemar.data import TimeSeriesDataset

        windows = np.array([[[0.0], [5.0], [10.0]]])
        scaled = minmax_scale(TimeSeriesDataset(windows=windows))
        assert scaled.windows[0, 1, 0] == pytest.approx(0.5)

    def test_round_trip_identity(self):
        from timemar.data import TimeSeriesDataset

        rng = np.random.default_rng(3)
        windows = rng.normal(scale=50.0, size=(8, 24, 5)) + 1000.0
        scaled = minmax_scale(TimeSeriesDataset(windows=windows))
        assert scaled.windows.min() >= 0.0 and scaled.windows.max() <= 1.0
        restored = inverse_scale(scaled.windows, scaled.scaler)
        assert np.abs(restored - windows).max() <= 1e-6

    def test_constant_feature_scales_to_zero_and_inverts_exactly(self):
        from timemar.data import TimeSeriesDataset

        windows = np.zeros((4, 6, 2))
        windows[..., 0] = 7.25
        windows[..., 1] = np.random.default_rng(0).random((4, 6))
        scaled = minmax_scale(TimeSeriesDataset(windows=windows))
        assert np.all(scaled.windows[..., 0] == 0.0)
        restored = inverse_scale(scaled.windows, scaled.scaler)
        assert np.all(restored[..., 0] == 7.25)


class TestGenSines:
    def test_shape(self):
        ds = gen_sines(100, 24, 5, seed=0)
        assert ds.windows.shape == (100, 24, 5)

    def test_paper_scale_shape(self):
        ds = gen_sines(10000, 24, 5, seed=0)
        assert ds.windows.shape == (10000, 24, 5)

    def test_deterministic(self):
        a = gen_sines(50, 24, 3, seed=9)
        b = gen_sines(50, 24, 3, seed=9)
        np.testing.assert_array_equal(a.windows, b.windows)

    def test_values_in_unit_interval(self):
        ds = gen_sines(500, 24, 5, seed=4)
        assert ds.windows.min() >= 0.0 and ds.windows.max() <= 1.0

    def test_matches_definition(self):
        # Re-derive window 0 from the same generator draws.
        n, t, d, seed = 3, 8, 2, 11
        ds = gen_sines(n, t, d, seed)
        rng = np.random.default_rng(seed)
        eta = rng.uniform(0.0, 1.0, size=(n, d))
        theta = rng.uniform(-np.pi, np.pi, size=(n, d))
        for w in range(n):
            for j in range(d):
                expected = (np.sin(2 * np.pi * eta[w, j] * np.arange(t) + theta[w, j]) + 1) / 2
                np.testing.assert_allclose(ds.windows[w, :, j], expected, atol=1e-12)
