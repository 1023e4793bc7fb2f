"""Winning-price landscape models.

The core model is a zero-inflated exponential (ZIE): with probability pi the
winning price is exactly 0 (an uncontested, organic impression), otherwise it
is Exponential(lam). Its CDF is

    F(x) = pi + (1 - pi) * (1 - exp(-lam * x)),  x >= 0,

which keeps a point mass at zero, the feature that lets a bidder win organic
traffic at price 0. Alongside the closed-form batch MLE, this module provides
atom-free baseline distributions (exponential, log-normal, gamma) fitted by
their standard MLEs, a linear feature-to-parameter model trained by minibatch
gradient descent on the ZIE negative log-likelihood, a binary-cross-entropy
evaluation of any fitted landscape against held-out prices, and a flat-text
model artifact format that round-trips bit-exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .data import Dataset, atomic_write
from .errors import ConfigError, DegenerateDataError, NumericFailureError

log = logging.getLogger(__name__)

PI_CLAMP = 1e-6
PROB_CLAMP = 1e-12
ZERO_EPSILON = 1e-6
SIGMA_FLOOR = 1e-6
BASELINE_KINDS = ("zie", "exp", "lognormal", "gamma")
MODEL_HEADER = "hob-param-model v1"
# Keep log-rate predictions in a range where exp() stays finite.
LOG_RATE_LIMIT = 50.0


@dataclass(frozen=True)
class ZieParams:
    """Zero-inflation mass and exponential rate; validated on construction."""

    pi: float
    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.pi) and 0.0 <= self.pi < 1.0):
            raise ValueError(f"pi must be in [0, 1), got {self.pi}")
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError(f"lam must be positive and finite, got {self.lam}")


def zie_cdf(params: ZieParams, x: float) -> float:
    """Probability that the winning price is <= x, i.e. that a bid of x wins."""
    if not (math.isfinite(x) and x >= 0.0):
        raise ValueError(f"bid must be nonnegative and finite, got {x}")
    return 1.0 - (1.0 - params.pi) * math.exp(-params.lam * x)


def zie_nll(params: ZieParams, price: float) -> float:
    """Per-sample negative log-likelihood; +inf for a zero price when pi == 0."""
    if not (math.isfinite(price) and price >= 0.0):
        raise ValueError(f"price must be nonnegative and finite, got {price}")
    if price == 0.0:
        return math.inf if params.pi == 0.0 else -math.log(params.pi)
    return -math.log1p(-params.pi) - math.log(params.lam) + params.lam * price


def zie_nll_batch(params: ZieParams, prices: np.ndarray) -> np.ndarray:
    """Vectorized `zie_nll` over a nonnegative price array."""
    prices = np.asarray(prices, dtype=np.float64)
    if prices.size and (not np.all(np.isfinite(prices)) or prices.min() < 0):
        raise ValueError("prices must be nonnegative and finite")
    zero_term = math.inf if params.pi == 0.0 else -math.log(params.pi)
    pos_term = -math.log1p(-params.pi) - math.log(params.lam) + params.lam * prices
    return np.where(prices == 0.0, zero_term, pos_term)


def zie_mle_batch(prices: np.ndarray) -> ZieParams:
    """Closed-form MLE: pi = zero fraction (clamped), lam = 1 / mean positive price.

    Raises DegenerateDataError when no positive price is present, since lam is
    then unidentified. An all-positive sample is legal; pi clamps to the floor.
    """
    prices = np.asarray(prices, dtype=np.float64)
    if prices.size == 0:
        raise DegenerateDataError("empty sample")
    if not np.all(np.isfinite(prices)) or prices.min() < 0:
        raise ValueError("prices must be nonnegative and finite")
    positives = prices[prices > 0]
    if positives.size == 0:
        raise DegenerateDataError("no positive prices; rate is unidentified")
    pi_hat = float(np.count_nonzero(prices == 0.0)) / prices.size
    pi_hat = min(max(pi_hat, PI_CLAMP), 1.0 - PI_CLAMP)
    return ZieParams(pi=pi_hat, lam=1.0 / float(positives.mean()))


# ---------------------------------------------------------------------------
# Global baseline distributions


@dataclass(frozen=True)
class WinModel:
    """A single fitted price distribution applied to every impression.

    kind/params: zie -> (pi, lam); exp -> (rate,); lognormal -> (mu, sigma);
    gamma -> (shape, rate).
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        expected = {"zie": 2, "exp": 1, "lognormal": 2, "gamma": 2}[self.kind]
        if len(self.params) != expected:
            raise ValueError(f"{self.kind} expects {expected} params, got {len(self.params)}")
        if self.kind == "zie":
            ZieParams(*self.params)
        elif self.kind == "lognormal":
            mu, sigma = self.params
            if not (math.isfinite(mu) and math.isfinite(sigma) and sigma > 0):
                raise ValueError(f"invalid lognormal params {self.params}")
        elif any(not math.isfinite(p) or p <= 0 for p in self.params):
            raise ValueError(f"invalid {self.kind} params {self.params}")

    def as_zie(self) -> ZieParams:
        if self.kind != "zie":
            raise ValueError(f"not a zie model: {self.kind}")
        return ZieParams(*self.params)

    def cdf(self, x) -> np.ndarray:
        """Win probability at bid x (array-valued, x >= 0)."""
        x_in = np.asarray(x, dtype=np.float64)
        x = np.atleast_1d(x_in)
        if x.size and x.min() < 0:
            raise ValueError("bids must be nonnegative")
        if self.kind == "zie":
            pi, lam = self.params
            out = 1.0 - (1.0 - pi) * np.exp(-lam * x)
        elif self.kind == "exp":
            (rate,) = self.params
            out = -np.expm1(-rate * x)
        elif self.kind == "lognormal":
            mu, sigma = self.params
            out = np.zeros_like(x)
            pos = x > 0
            out[pos] = special.ndtr((np.log(x[pos]) - mu) / sigma)
        else:
            shape, rate = self.params
            out = special.gammainc(shape, rate * x)
        return out.reshape(x_in.shape)

    def cdf_matrix(self, features: np.ndarray, bids: np.ndarray) -> np.ndarray:
        """(n, len(bids)) win probabilities; a global model ignores features."""
        n = np.asarray(features).shape[0]
        row = self.cdf(np.asarray(bids, dtype=np.float64))
        return np.broadcast_to(row, (n, row.size))


def _fit_gamma(samples: np.ndarray) -> tuple:
    """Gamma MLE: Newton on log(k) - digamma(k) = stat, closed-form start."""
    mean = float(samples.mean())
    stat = math.log(mean) - float(np.log(samples).mean())
    if stat <= 0.0:
        raise DegenerateDataError("constant sample; gamma shape is unidentified")
    shape = (3.0 - stat + math.sqrt((stat - 3.0) ** 2 + 24.0 * stat)) / (12.0 * stat)
    for _ in range(100):
        f_val = math.log(shape) - special.digamma(shape) - stat
        f_prime = 1.0 / shape - special.polygamma(1, shape)
        step = f_val / f_prime
        shape_next = shape - step
        if shape_next <= 0.0:
            shape_next = shape / 2.0
        if abs(shape_next - shape) <= 1e-9:
            shape = shape_next
            break
        shape = shape_next
    else:
        raise NumericFailureError("gamma shape iteration did not converge")
    return (shape, shape / mean)


def fit_baseline(kind: str, prices: np.ndarray, zero_epsilon: float = ZERO_EPSILON) -> WinModel:
    """Batch-fit one distribution kind to a nonnegative price sample.

    The atom-free baselines cannot represent exact zeros, so zeros are
    replaced by `zero_epsilon` before fitting; `zie` dispatches to the
    closed-form MLE. At least one positive price is required.
    """
    if kind not in BASELINE_KINDS:
        raise ConfigError(f"unknown distribution kind {kind!r}")
    prices = np.asarray(prices, dtype=np.float64)
    if prices.size == 0:
        raise DegenerateDataError("empty sample")
    if not np.all(np.isfinite(prices)) or prices.min() < 0:
        raise ValueError("prices must be nonnegative and finite")
    if not np.any(prices > 0):
        raise DegenerateDataError("no positive prices in sample")
    if kind == "zie":
        params = zie_mle_batch(prices)
        return WinModel("zie", (params.pi, params.lam))
    samples = np.where(prices == 0.0, zero_epsilon, prices)
    if kind == "exp":
        return WinModel("exp", (1.0 / float(samples.mean()),))
    if kind == "lognormal":
        logs = np.log(samples)
        sigma = max(float(logs.std()), SIGMA_FLOOR)
        return WinModel("lognormal", (float(logs.mean()), sigma))
    return WinModel("gamma", _fit_gamma(samples))


# ---------------------------------------------------------------------------
# Linear feature-to-parameter model


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


@dataclass
class LinearParamModel:
    """Per-impression ZIE parameters from a linear model with bias.

    pi = sigmoid(features . weights_theta[:-1] + weights_theta[-1]) and
    lam = exp(features . weights_lam[:-1] + weights_lam[-1]). Predictions are
    clamped so they always form valid ZieParams.
    """

    weights_theta: np.ndarray
    weights_lam: np.ndarray
    loss_history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        self.weights_theta = np.asarray(self.weights_theta, dtype=np.float64)
        self.weights_lam = np.asarray(self.weights_lam, dtype=np.float64)
        if self.weights_theta.ndim != 1 or self.weights_theta.shape != self.weights_lam.shape:
            raise ValueError("weight vectors must be 1-D and share a shape")
        if self.weights_theta.size < 1:
            raise ValueError("weight vectors must include a bias term")

    @property
    def feature_dim(self) -> int:
        return self.weights_theta.size - 1

    def _check_features(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.feature_dim:
            raise ValueError(
                f"features must have shape (n, {self.feature_dim}), got {features.shape}"
            )
        return features

    def predict(self, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (pi, lam) for each feature row."""
        features = self._check_features(features)
        theta = features @ self.weights_theta[:-1] + self.weights_theta[-1]
        log_rate = features @ self.weights_lam[:-1] + self.weights_lam[-1]
        pi = np.clip(special.expit(theta), PI_CLAMP, 1.0 - PI_CLAMP)
        lam = np.exp(np.clip(log_rate, -LOG_RATE_LIMIT, LOG_RATE_LIMIT))
        return pi, lam

    def predict_params(self, feature_row: np.ndarray) -> ZieParams:
        pi, lam = self.predict(np.asarray(feature_row, dtype=np.float64).reshape(1, -1))
        return ZieParams(pi=float(pi[0]), lam=float(lam[0]))

    def cdf_matrix(self, features: np.ndarray, bids: np.ndarray) -> np.ndarray:
        pi, lam = self.predict(features)
        bids = np.asarray(bids, dtype=np.float64)
        return 1.0 - (1.0 - pi)[:, None] * np.exp(-lam[:, None] * bids[None, :])


@dataclass(frozen=True)
class TrainConfig:
    """Minibatch gradient-descent settings; batch_size=None runs full-batch."""

    epochs: int = 30
    lr: float = 0.05
    batch_size: int | None = 256
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not (math.isfinite(self.lr) and self.lr > 0):
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


def nll_loss_and_grad(
    weights_theta: np.ndarray,
    weights_lam: np.ndarray,
    features: np.ndarray,
    prices: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean ZIE NLL of the linear model and its exact gradients.

    Zero prices contribute -log(pi) = softplus(-theta); positive prices
    contribute softplus(theta) - log_rate + exp(log_rate) * price.
    """
    design = np.hstack([features, np.ones((features.shape[0], 1))])
    theta = design @ weights_theta
    log_rate = design @ weights_lam
    lam = np.exp(log_rate)
    zero = prices == 0.0

    loss_terms = np.where(
        zero,
        _softplus(-theta),
        _softplus(theta) - log_rate + lam * prices,
    )
    loss = float(loss_terms.mean())

    dtheta = np.where(zero, -special.expit(-theta), special.expit(theta))
    dlog_rate = np.where(zero, 0.0, lam * prices - 1.0)
    n = design.shape[0]
    return loss, design.T @ dtheta / n, design.T @ dlog_rate / n


def train_param_model(dataset: Dataset, config: TrainConfig = TrainConfig()) -> LinearParamModel:
    """Fit the linear ZIE parameter model by plain (mini)batch gradient descent.

    Weights start at zero, so a zero-epoch call returns the initialization and
    identical (data, config) reruns are bit-reproducible; the seed only drives
    minibatch shuffling. The mean NLL over the full training set is recorded
    once per epoch in `loss_history`. A non-finite loss aborts.
    """
    features, prices = dataset.features, dataset.winning_prices
    dim = features.shape[1]
    weights_theta = np.zeros(dim + 1)
    weights_lam = np.zeros(dim + 1)
    rng = np.random.default_rng(config.seed)
    history = []

    n = features.shape[0]
    batch = n if config.batch_size is None else min(config.batch_size, n)
    for epoch in range(config.epochs):
        order = np.arange(n) if batch == n else rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            _, grad_theta, grad_lam = nll_loss_and_grad(
                weights_theta, weights_lam, features[idx], prices[idx]
            )
            weights_theta = weights_theta - config.lr * grad_theta
            weights_lam = weights_lam - config.lr * grad_lam
        loss, _, _ = nll_loss_and_grad(weights_theta, weights_lam, features, prices)
        if not math.isfinite(loss):
            raise NumericFailureError(
                f"non-finite training loss at epoch {epoch} (lr={config.lr}); "
                "reduce the learning rate or rescale features"
            )
        history.append(loss)

    return LinearParamModel(weights_theta, weights_lam, loss_history=tuple(history))


# ---------------------------------------------------------------------------
# Binary cross-entropy evaluation


def make_bid_grid(prices: np.ndarray, points: int = 64) -> np.ndarray:
    """Evenly spaced bids from 0 to the 99th percentile of positive prices."""
    prices = np.asarray(prices, dtype=np.float64)
    positives = prices[prices > 0]
    if positives.size == 0:
        raise DegenerateDataError("no positive prices to build a bid grid from")
    return np.linspace(0.0, float(np.quantile(positives, 0.99)), points)


def eval_bce(model, dataset: Dataset, bid_grid: np.ndarray | None = None) -> float:
    """Mean binary cross-entropy of predicted win probability over a bid grid.

    For every impression and grid bid b the label is 1[b >= winning_price] and
    the prediction is the model's F(b), clamped away from {0, 1} before the
    log. `model` is anything with a cdf_matrix(features, bids) method.
    """
    if bid_grid is None:
        bid_grid = make_bid_grid(dataset.winning_prices)
    bid_grid = np.asarray(bid_grid, dtype=np.float64)
    labels = bid_grid[None, :] >= dataset.winning_prices[:, None]
    probs = np.clip(model.cdf_matrix(dataset.features, bid_grid), PROB_CLAMP, 1.0 - PROB_CLAMP)
    bce = -np.where(labels, np.log(probs), np.log1p(-probs)).mean()
    return float(bce)


# ---------------------------------------------------------------------------
# Model artifact format: flat text, bit-exact round-trip


def model_to_text(model) -> str:
    """Serialize a LinearParamModel or WinModel to the versioned flat format.

    Header `hob-param-model v1 dim=<D> kind=<kind>`; a linear model writes one
    line per weight vector (bias last), a global model one line of parameters.
    Floats are written with repr() and parse back bit-identically.
    """
    if isinstance(model, LinearParamModel):
        lines = [
            f"{MODEL_HEADER} dim={model.feature_dim} kind=zie",
            " ".join(repr(float(v)) for v in model.weights_theta),
            " ".join(repr(float(v)) for v in model.weights_lam),
        ]
    elif isinstance(model, WinModel):
        lines = [
            f"{MODEL_HEADER} dim=0 kind={model.kind}",
            " ".join(repr(float(v)) for v in model.params),
        ]
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str):
    """Inverse of model_to_text; strict about header and line counts."""
    lines = [line for line in text.strip().split("\n") if line.strip()]
    if not lines or not lines[0].startswith(MODEL_HEADER + " "):
        raise ConfigError(f"bad model header; expected {MODEL_HEADER!r}")
    fields = dict(
        part.split("=", 1) for part in lines[0][len(MODEL_HEADER) :].split() if "=" in part
    )
    try:
        dim = int(fields["dim"])
        kind = fields["kind"]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad model header fields: {lines[0]!r}") from exc
    if dim > 0:
        if kind != "zie":
            raise ConfigError(f"per-impression models must be kind=zie, got {kind!r}")
        if len(lines) != 3:
            raise ConfigError(f"expected 2 weight lines, got {len(lines) - 1}")
        weights_theta = np.array([float(v) for v in lines[1].split()])
        weights_lam = np.array([float(v) for v in lines[2].split()])
        if weights_theta.size != dim + 1 or weights_lam.size != dim + 1:
            raise ConfigError("weight line length does not match header dim")
        return LinearParamModel(weights_theta, weights_lam)
    if len(lines) != 2:
        raise ConfigError(f"expected 1 parameter line, got {len(lines) - 1}")
    return WinModel(kind, tuple(float(v) for v in lines[1].split()))


def save_model(model, path: str):
    with atomic_write(path) as out:
        out.write(model_to_text(model))


def load_model(path: str):
    with open(path) as handle:
        return model_from_text(handle.read())
