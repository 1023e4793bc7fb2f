"""Synthetic censored-auction-log generation.

Each impression draws standard-normal features x; a fixed random matrix W*
(regenerated deterministically from the seed) maps them to raw parameters
(theta_raw, lam_raw) = x @ W*. Independent Gaussian noise is added to each,
then pi = sigmoid(theta + theta_offset) and lam = softplus(lam_raw + noise).
The winning price is 0 with probability pi (an organic impression) and
Exponential(lam) otherwise, so the ground-truth landscape is exactly the
zero-inflated exponential family the models fit. Impression value is a
clamped (or folded) standard normal.

The organic-noise transform perturbs positive prices multiplicatively,
w' = max(0, w + N(0, (sigma * w)^2)), leaving exact zeros untouched; it
mimics applying the generator's measurement noise to an external log.

Draw order is fixed (features, value, theta noise, lambda noise, zero
uniform, price exponential), one PCG64 stream per dataset, so generation is
bit-reproducible for a given (seed, n, feature_dim).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .data import Dataset, atomic_write, file_sha256
from .errors import ConfigError

VALUE_DISTS = ("clamped_normal", "abs_normal")
MANIFEST_SCHEMA = "hob-dataset-manifest v1"
_LAM_FLOOR = 1e-9


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    feature_dim: int = 20
    seed: int = 0
    noise_theta: float = 0.3
    noise_lambda: float = 0.3
    value_dist: str = "clamped_normal"
    # Shifts the zero-inflation logit; used by organic-share sweeps.
    theta_offset: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.noise_theta < 0 or self.noise_lambda < 0:
            raise ConfigError("noise scales must be nonnegative")
        if self.value_dist not in VALUE_DISTS:
            raise ConfigError(f"value_dist must be one of {VALUE_DISTS}")
        if not math.isfinite(self.theta_offset):
            raise ConfigError("theta_offset must be finite")


def param_matrix(config: GeneratorConfig) -> np.ndarray:
    """The fixed (feature_dim, 2) map W*, drawn N(0, 1/dim) from a child seed.

    The 1/sqrt(dim) scale keeps the raw linear outputs near N(0, 1)
    regardless of dimensionality.
    """
    seq = np.random.SeedSequence(entropy=config.seed, spawn_key=(0,))
    rng = np.random.default_rng(seq)
    return rng.standard_normal((config.feature_dim, 2)) / math.sqrt(config.feature_dim)


def generate(config: GeneratorConfig, return_latent: bool = False):
    """Draw a synthetic dataset; optionally also return the latent truth.

    With return_latent=True the result is (dataset, latent) where latent
    holds the per-impression true pi and lam plus W*, for diagnostics only;
    the on-disk formats never contain them.
    """
    w_star = param_matrix(config)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed))
    n, dim = config.n, config.feature_dim

    features = rng.standard_normal((n, dim))
    raw_value = rng.standard_normal(n)
    values = np.abs(raw_value) if config.value_dist == "abs_normal" else np.maximum(0.0, raw_value)

    theta = features @ w_star[:, 0] + config.theta_offset
    theta = theta + rng.standard_normal(n) * config.noise_theta
    lam_raw = features @ w_star[:, 1] + rng.standard_normal(n) * config.noise_lambda
    pi = special.expit(theta)
    lam = np.maximum(np.logaddexp(0.0, lam_raw), _LAM_FLOOR)

    organic = rng.random(n) < pi
    prices = np.where(organic, 0.0, rng.standard_exponential(n) / lam)

    dataset = Dataset(
        ids=np.array([f"imp-{i:08d}" for i in range(n)], dtype=object),
        features=features,
        values=values,
        winning_prices=prices,
    )
    if not return_latent:
        return dataset
    return dataset, {"pi": pi, "lam": lam, "w_star": w_star}


def organicize(prices: np.ndarray, relative_sigma: float = 0.7, seed: int = 0) -> np.ndarray:
    """Perturb prices by zero-truncated noise: max(0, w + N(0, (sigma*w)^2)).

    Exact zeros stay zero because their noise scale is zero; the result is
    always nonnegative.
    """
    if not (math.isfinite(relative_sigma) and relative_sigma >= 0):
        raise ConfigError(f"relative_sigma must be nonnegative, got {relative_sigma}")
    prices = np.asarray(prices, dtype=np.float64)
    if prices.size and (not np.all(np.isfinite(prices)) or prices.min() < 0):
        raise ValueError("prices must be nonnegative and finite")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(prices.shape) * (relative_sigma * prices)
    return np.maximum(0.0, prices + noise)


def organicize_dataset(dataset: Dataset, relative_sigma: float = 0.7, seed: int = 0) -> Dataset:
    return Dataset(
        ids=dataset.ids.copy(),
        features=dataset.features.copy(),
        values=dataset.values.copy(),
        winning_prices=organicize(dataset.winning_prices, relative_sigma, seed),
        channels=dataset.channels.copy(),
    )


def config_sha256(config: GeneratorConfig) -> str:
    payload = json.dumps(asdict(config), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def write_manifest(dataset_path: str, config: GeneratorConfig, dataset: Dataset) -> str:
    """Write the sidecar manifest next to the dataset; returns its path."""
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "dataset": os.path.basename(dataset_path),
        "dataset_sha256": file_sha256(dataset_path),
        "seed": config.seed,
        "n": config.n,
        "feature_dim": config.feature_dim,
        "noise_theta": config.noise_theta,
        "noise_lambda": config.noise_lambda,
        "value_dist": config.value_dist,
        "theta_offset": config.theta_offset,
        "config_sha256": config_sha256(config),
        "w_star_sha256": hashlib.sha256(param_matrix(config).tobytes()).hexdigest(),
        "zero_fraction": float(np.mean(dataset.winning_prices == 0.0)),
    }
    path = dataset_path + ".manifest.json"
    with atomic_write(path) as out:
        json.dump(manifest, out, indent=2, sort_keys=True)
        out.write("\n")
    return path
