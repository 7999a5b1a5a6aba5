import numpy as np
import pytest

from cfair import Dataset, DimensionMismatch, UnknownVariable


def _mixed() -> Dataset:
    return Dataset(("x", "k", "tag"),
                   {"x": [0.1, 1.0 / 3.0, -2.5e-17],
                    "k": [1, 2, 3],
                    "tag": ["a", "b", "b"]})


def test_column_coercion_dtypes():
    d = _mixed()
    assert d.data["x"].dtype == np.float64
    assert d.data["k"].dtype.kind == "i"
    assert d.data["tag"].dtype == object
    assert d.n == 3


def test_ragged_columns_rejected():
    with pytest.raises(DimensionMismatch):
        Dataset(("a", "b"), {"a": [1, 2], "b": [1]})


def test_columns_and_data_must_agree():
    with pytest.raises(DimensionMismatch):
        Dataset(("a",), {"a": [1], "b": [2]})


def test_unknown_column_lookup():
    with pytest.raises(UnknownVariable):
        _mixed().column("nope")


def test_numeric_rejects_text():
    with pytest.raises(DimensionMismatch):
        _mixed().numeric("tag")


def test_take_and_record_round_trip():
    d = _mixed()
    sub = d.take([2, 0])
    assert sub.n == 2
    assert sub.record(0) == {"x": -2.5e-17, "k": 3, "tag": "b"}
    assert isinstance(sub.record(0)["k"], int)


def test_with_columns_appends_and_overrides():
    d = _mixed()
    out = d.with_columns({"x": np.zeros(3), "extra": [9.0, 8.0, 7.0]})
    assert out.columns == ("x", "k", "tag", "extra")
    assert np.array_equal(out.column("x"), np.zeros(3))
    assert d.column("x")[0] == 0.1  # original untouched


def test_csv_round_trip_is_exact(tmp_path):
    d = _mixed()
    path = tmp_path / "d.csv"
    d.to_csv(path)
    back = Dataset.from_csv(path)
    assert back.columns == d.columns
    assert np.array_equal(back.column("x"), d.column("x"))  # repr round-trip
    assert np.array_equal(back.column("k"), d.column("k"))
    assert back.column("k").dtype.kind == "i"
    assert list(back.column("tag")) == ["a", "b", "b"]


def test_csv_rejects_ragged_and_empty(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3\n")
    with pytest.raises(DimensionMismatch):
        Dataset.from_csv(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DimensionMismatch):
        Dataset.from_csv(empty)
