"""Bid shading: surplus maximization against a winning-price landscape.

For scaled value V and a ZIE landscape, the expected surplus of a bid x is
g(x) = (V - x) * F(x). On (0, V) this is strictly unimodal, and an interior
maximizer exists exactly when (1 - pi) * (1 + lam * V) > 1; otherwise bidding
0 is optimal (the bidder still wins the organic, zero-price impressions).
Interior optima are located by fixed-iteration golden-section search, the
same procedure the compiled kernel runs per impression.

The dual decision rule lives here too: given per-choice (value, cost) pairs
and a multiplier eta, pick argmax eta*value - cost. It is the greedy
per-impression step that relaxes the global budgeted assignment problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .landscape import WinModel, ZieParams, zie_cdf

DEFAULT_N_ITER = 40
ONLINE_N_ITER = 10


def surplus(params: ZieParams, value: float, bid: float) -> float:
    """Expected surplus (value - bid) * F(bid) for a bid in [0, value]."""
    if not (math.isfinite(value) and value >= 0.0):
        raise ValueError(f"value must be nonnegative and finite, got {value}")
    if not (0.0 <= bid <= value):
        raise ValueError(f"bid must lie in [0, {value}], got {bid}")
    return (value - bid) * zie_cdf(params, bid)


def zero_bid_test(params: ZieParams, value: float) -> bool:
    """True when an interior optimum exists: (1 - pi) * (1 + lam * value) > 1.

    At equality the surplus curve is nonincreasing on [0, value] and bidding
    0 is already optimal, so the test is strict.
    """
    if not (math.isfinite(value) and value >= 0.0):
        raise ValueError(f"value must be nonnegative and finite, got {value}")
    return (1.0 - params.pi) * (1.0 + params.lam * value) > 1.0


@dataclass(frozen=True)
class BidDecision:
    bid: float
    expected_surplus: float
    win_prob: float
    interior: bool


def optimal_bid(params: ZieParams, value: float, n_iter: int = DEFAULT_N_ITER) -> BidDecision:
    """Surplus-maximizing bid on [0, value].

    Returns bid 0 when the zero-bid test fails; otherwise runs n_iter
    golden-section iterations on the bracket [0, value] and returns the final
    bracket midpoint, which lies within value / phi^n_iter of the maximizer.
    """
    if not (math.isfinite(value) and value >= 0.0):
        raise ValueError(f"value must be nonnegative and finite, got {value}")
    bid = float(
        kernels.golden_bids(
            np.array([params.pi]), np.array([params.lam]), np.array([value]), n_iter
        )[0]
    )
    win_prob = zie_cdf(params, bid)
    return BidDecision(
        bid=bid,
        expected_surplus=(value - bid) * win_prob,
        win_prob=win_prob,
        interior=bid > 0.0,
    )


def optimal_bids(pi, lam, values, n_iter: int = DEFAULT_N_ITER) -> np.ndarray:
    """Batch optimal bids for per-impression ZIE parameters."""
    return kernels.golden_bids(pi, lam, values, n_iter)


def model_grid_bids(
    model: WinModel,
    values: np.ndarray,
    points: int = 512,
    chunk: int = 4096,
) -> np.ndarray:
    """Approximate surplus-maximizing bids under a global (non-ZIE) price model.

    The atom-free baselines have no closed-form optimality condition, so each
    impression scans a bid grid of 0 plus points-1 log-spaced fractions of its
    value down to value * 1e-9. The log spacing matters: baselines fitted on
    zero-replaced data develop a steep CDF rise near zero that a linear grid
    cannot resolve, which would understate their achievable surplus.
    """
    values = np.asarray(values, dtype=np.float64)
    fractions = np.concatenate([[0.0], np.logspace(-9.0, 0.0, points - 1)])
    bids = np.zeros_like(values)
    for start in range(0, values.size, chunk):
        vals = values[start : start + chunk]
        grid = vals[:, None] * fractions[None, :]
        gains = (vals[:, None] - grid) * model.cdf(grid)
        bids[start : start + chunk] = grid[np.arange(vals.size), np.argmax(gains, axis=1)]
    return bids


def dual_decision_rule(values, costs, eta: float) -> int:
    """Index k maximizing eta * values[k] - costs[k].

    Exact score ties are broken toward the lowest cost, then the lowest
    index, so the rule is deterministic on constructed instances.
    """
    values = np.asarray(values, dtype=np.float64)
    costs = np.asarray(costs, dtype=np.float64)
    if values.ndim != 1 or values.shape != costs.shape or values.size == 0:
        raise ValueError("values and costs must be equal-length nonempty 1-D arrays")
    if not math.isfinite(eta):
        raise ValueError(f"eta must be finite, got {eta}")
    scores = eta * values - costs
    best = scores.max()
    tied = np.flatnonzero(scores == best)
    return int(min(tied, key=lambda k: (costs[k], k)))
