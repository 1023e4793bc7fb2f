import hashlib
import json
import os

import numpy as np
import pytest

from hob.data import Dataset, atomic_write, file_sha256, load_dataset, save_dataset
from hob.errors import ConfigError


def toy_dataset(n=50, dim=4, seed=1):
    rng = np.random.default_rng(seed)
    return Dataset(
        ids=np.arange(n).astype(str),
        features=rng.normal(size=(n, dim)),
        values=rng.uniform(0.1, 2.0, n),
        winning_prices=np.where(rng.random(n) < 0.3, 0.0, rng.exponential(1.0, n)),
    )


def test_jsonl_round_trip(tmp_path):
    ds = toy_dataset()
    path = str(tmp_path / "data.jsonl")
    save_dataset(ds, path)
    back = load_dataset(path)
    np.testing.assert_array_equal(back.ids, ds.ids)
    np.testing.assert_allclose(back.features, ds.features)
    np.testing.assert_allclose(back.values, ds.values)
    np.testing.assert_allclose(back.winning_prices, ds.winning_prices)


def test_jsonl_lines_are_valid_json(tmp_path):
    path = str(tmp_path / "data.jsonl")
    save_dataset(toy_dataset(n=5), path)
    with open(path) as fh:
        rows = [json.loads(line) for line in fh]
    assert len(rows) == 5
    assert {"id", "features", "value", "winning_price"} <= set(rows[0])


def test_csv_round_trip(tmp_path):
    ds = toy_dataset(n=20)
    path = str(tmp_path / "data.csv")
    ds.to_csv(path)
    back = Dataset.from_csv(path)
    np.testing.assert_allclose(back.features, ds.features)
    np.testing.assert_allclose(back.winning_prices, ds.winning_prices)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.touch()
    with pytest.raises(ConfigError):
        load_dataset(str(path))


def test_missing_file_raises_oserror():
    with pytest.raises(OSError):
        load_dataset("/nonexistent/nope.jsonl")


class TestSplit:
    def test_partition_properties(self):
        ds = toy_dataset(n=100)
        train, evalset = ds.split(0.3, seed=4)
        assert train.n == 70 and evalset.n == 30
        assert set(train.ids) | set(evalset.ids) == set(ds.ids)
        assert not set(train.ids) & set(evalset.ids)

    def test_deterministic(self):
        ds = toy_dataset(n=100)
        a, _ = ds.split(0.3, seed=4)
        b, _ = ds.split(0.3, seed=4)
        np.testing.assert_array_equal(a.ids, b.ids)
        c, _ = ds.split(0.3, seed=5)
        assert not np.array_equal(a.ids, c.ids)

    def test_rows_stay_aligned(self):
        ds = toy_dataset(n=60)
        train, _ = ds.split(0.5, seed=0)
        lookup = {i: k for k, i in enumerate(ds.ids)}
        for row, ident in enumerate(train.ids):
            src = lookup[ident]
            np.testing.assert_allclose(train.features[row], ds.features[src])
            assert train.values[row] == ds.values[src]


def test_hash_units_stable_and_uniform():
    ds = toy_dataset(n=2000)
    units = ds.hash_units()
    assert np.all((units >= 0) & (units < 1))
    np.testing.assert_array_equal(units, toy_dataset(n=2000).hash_units())
    # id-keyed, so a row subset keeps its units
    sub = ds.take(np.arange(10, 40))
    np.testing.assert_array_equal(sub.hash_units(), units[10:40])
    assert abs(units.mean() - 0.5) < 0.05


def test_take_subsets_rows():
    ds = toy_dataset(n=30)
    sub = ds.take(np.array([3, 7, 9]))
    assert sub.n == 3
    np.testing.assert_array_equal(sub.ids, ds.ids[[3, 7, 9]])


def test_atomic_write_commits_on_success(tmp_path):
    target = tmp_path / "out.txt"
    with atomic_write(str(target)) as fh:
        fh.write("hello")
    assert target.read_text() == "hello"
    assert os.listdir(tmp_path) == ["out.txt"]  # no stray temp files


def test_atomic_write_discards_on_error(tmp_path):
    target = tmp_path / "out.txt"
    with pytest.raises(RuntimeError):
        with atomic_write(str(target)) as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert not target.exists()
    assert os.listdir(tmp_path) == []


def test_file_sha256_matches_hashlib(tmp_path):
    path = tmp_path / "blob.bin"
    path.write_bytes(b"abc123" * 100)
    assert file_sha256(str(path)) == hashlib.sha256(b"abc123" * 100).hexdigest()
