"""Column-oriented impression datasets and their file formats.

A dataset is a bag of aligned arrays: string ids, a float feature matrix,
nonnegative values, and nonnegative winning prices (0 encodes an organic,
uncontested impression). Two interchangeable on-disk formats are supported:
JSON Lines (one object per impression) and CSV with a declared header.
Floats are serialized with `repr`, so write -> read -> write round-trips
byte-identically.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@contextmanager
def atomic_write(path: str, mode: str = "w"):
    """Write to a temp file in the target directory, then rename over `path`."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, mode, newline="") as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(cond: bool, message: str):
    if not cond:
        raise ValueError(message)


@dataclass
class Dataset:
    """Aligned impression columns; `channels` is empty-string when unassigned."""

    ids: np.ndarray
    features: np.ndarray
    values: np.ndarray
    winning_prices: np.ndarray
    channels: np.ndarray | None = None
    _hash_units: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        self.values = np.asarray(self.values, dtype=np.float64)
        self.winning_prices = np.asarray(self.winning_prices, dtype=np.float64)
        self.ids = np.asarray(self.ids, dtype=object)
        n = len(self.ids)
        _require(self.features.shape[0] == n, "features row count mismatch")
        _require(self.values.shape == (n,), "values length mismatch")
        _require(self.winning_prices.shape == (n,), "winning_prices length mismatch")
        _require(bool(np.all(np.isfinite(self.values))), "values must be finite")
        _require(bool(np.all(self.values >= 0)), "values must be nonnegative")
        _require(bool(np.all(np.isfinite(self.winning_prices))), "winning prices must be finite")
        _require(bool(np.all(self.winning_prices >= 0)), "winning prices must be nonnegative")
        if self.channels is None:
            self.channels = np.full(n, "", dtype=object)
        else:
            self.channels = np.asarray(self.channels, dtype=object)
            _require(self.channels.shape == (n,), "channels length mismatch")

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def hash_units(self) -> np.ndarray:
        """Deterministic uniform-[0,1) unit per id, from md5; used for channel bucketing."""
        if self._hash_units is None:
            units = np.empty(self.n, dtype=np.float64)
            for i, imp_id in enumerate(self.ids):
                digest = hashlib.md5(str(imp_id).encode("utf-8")).digest()
                units[i] = int.from_bytes(digest[:8], "big") / 2.0**64
            self._hash_units = units
        return self._hash_units

    def take(self, index) -> "Dataset":
        return Dataset(
            ids=self.ids[index],
            features=self.features[index],
            values=self.values[index],
            winning_prices=self.winning_prices[index],
            channels=self.channels[index],
        )

    def split(self, eval_fraction: float, seed: int) -> tuple["Dataset", "Dataset"]:
        """Deterministic shuffled (train, eval) split."""
        if not 0.0 < eval_fraction < 1.0:
            raise ConfigError(f"eval fraction must be in (0,1), got {eval_fraction}")
        order = np.random.default_rng(seed).permutation(self.n)
        n_eval = int(round(self.n * eval_fraction))
        if n_eval == 0 or n_eval == self.n:
            raise ConfigError("split produces an empty part")
        return self.take(order[n_eval:]), self.take(order[:n_eval])

    # ---- JSON Lines ----

    def to_jsonl(self, path: str):
        with atomic_write(path) as out:
            for i in range(self.n):
                row = {
                    "id": str(self.ids[i]),
                    "channel": str(self.channels[i]),
                    "value": float(self.values[i]),
                    "winning_price": float(self.winning_prices[i]),
                    "features": [float(v) for v in self.features[i]],
                }
                out.write(json.dumps(row) + "\n")

    @classmethod
    def from_jsonl(cls, path: str) -> "Dataset":
        ids, channels, values, prices, feats = [], [], [], [], []
        with open(path) as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                    ids.append(row["id"])
                    channels.append(row.get("channel", ""))
                    values.append(row["value"])
                    prices.append(row["winning_price"])
                    feats.append(row["features"])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ConfigError(f"{path}:{line_no}: bad dataset row ({exc})") from exc
        if not ids:
            raise ConfigError(f"{path}: empty dataset")
        return cls(
            ids=np.array(ids, dtype=object),
            features=np.array(feats, dtype=np.float64),
            values=np.array(values, dtype=np.float64),
            winning_prices=np.array(prices, dtype=np.float64),
            channels=np.array(channels, dtype=object),
        )

    # ---- CSV ----

    def to_csv(self, path: str):
        header = ["id", "channel", "value", "winning_price"]
        header += [f"f{j}" for j in range(self.feature_dim)]
        with atomic_write(path) as out:
            writer = csv.writer(out)
            writer.writerow(header)
            for i in range(self.n):
                row = [str(self.ids[i]), str(self.channels[i]),
                       repr(float(self.values[i])), repr(float(self.winning_prices[i]))]
                row += [repr(float(v)) for v in self.features[i]]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path: str) -> "Dataset":
        with open(path, newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise ConfigError(f"{path}: empty csv") from None
            expected_prefix = ["id", "channel", "value", "winning_price"]
            if header[:4] != expected_prefix:
                raise ConfigError(f"{path}: csv header must start with {expected_prefix}")
            dim = len(header) - 4
            ids, channels, values, prices, feats = [], [], [], [], []
            for row in reader:
                if len(row) != 4 + dim:
                    raise ConfigError(f"{path}: row has {len(row)} fields, expected {4 + dim}")
                ids.append(row[0])
                channels.append(row[1])
                values.append(float(row[2]))
                prices.append(float(row[3]))
                feats.append([float(v) for v in row[4:]])
        if not ids:
            raise ConfigError(f"{path}: empty dataset")
        return cls(
            ids=np.array(ids, dtype=object),
            features=np.array(feats, dtype=np.float64),
            values=np.array(values, dtype=np.float64),
            winning_prices=np.array(prices, dtype=np.float64),
            channels=np.array(channels, dtype=object),
        )


def load_dataset(path: str) -> Dataset:
    """Load by extension: .jsonl/.ndjson as JSON Lines, .csv as CSV."""
    lower = path.lower()
    if lower.endswith((".jsonl", ".ndjson")):
        return Dataset.from_jsonl(path)
    if lower.endswith(".csv"):
        return Dataset.from_csv(path)
    raise ConfigError(f"unrecognized dataset extension: {path}")


def save_dataset(dataset: Dataset, path: str):
    lower = path.lower()
    if lower.endswith((".jsonl", ".ndjson")):
        dataset.to_jsonl(path)
    elif lower.endswith(".csv"):
        dataset.to_csv(path)
    else:
        raise ConfigError(f"unrecognized dataset extension: {path}")


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
