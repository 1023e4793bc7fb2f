"""Brute-force oracles used to cross-check the analytic bidding paths.

Everything here is deliberately naive and kept independent of the hot-path
kernels: the grid searcher evaluates the surplus formula inline with plain
numpy instead of calling the golden-section kernel it is used to verify, and
the MCKP solver enumerates the full assignment space rather than exploiting
any structure. Slow on purpose; use only in tests and offline analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .landscape import ZieParams
from .shading import dual_decision_rule

# Hard cap on enumerated assignments (about 2.4e8).
MCKP_CAP = 5**12
# Above this many assignments, enumeration decodes indices in chunks instead
# of materializing cumulative arrays for the whole product space.
_CUMULATIVE_LIMIT = 2**23
_CHUNK = 2**20


def grid_optimal_bid(
    params: ZieParams, value: float, grid_points: int = 100_000
) -> tuple[float, float]:
    """Best (bid, surplus) over an even grid of bids on [0, value].

    Ties take the lowest bid. The ZIE surplus formula is evaluated directly
    here so this oracle shares no code with the golden-section path.
    """
    if not (math.isfinite(value) and value >= 0.0):
        raise ValueError(f"value must be nonnegative and finite, got {value}")
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}")
    bids = np.linspace(0.0, value, grid_points)
    gains = (value - bids) * (1.0 - (1.0 - params.pi) * np.exp(-params.lam * bids))
    best = int(np.argmax(gains))
    return float(bids[best]), float(gains[best])


def optimal_surplus_baseline(values: np.ndarray, winning_prices: np.ndarray, eta: float) -> float:
    """Clairvoyant surplus: sum of max(0, eta * value - winning_price)."""
    values = np.asarray(values, dtype=np.float64)
    winning_prices = np.asarray(winning_prices, dtype=np.float64)
    if values.shape != winning_prices.shape:
        raise ValueError("values and winning_prices must align")
    return float(np.maximum(0.0, eta * values - winning_prices).sum())


def finite_difference_mc(curve_fn, eta: float, delta: float) -> float:
    """Central-difference marginal cost of an eta -> (value, cost) curve."""
    if not (math.isfinite(eta) and eta > 0 and math.isfinite(delta) and delta > 0):
        raise ValueError(f"eta and delta must be positive, got eta={eta}, delta={delta}")
    value_hi, cost_hi = curve_fn(eta + delta)
    value_lo, cost_lo = curve_fn(eta - delta)
    dv = value_hi - value_lo
    if abs(dv) < 1e-12:
        raise ValueError(f"flat value curve around eta={eta}: |dV|={abs(dv):.3g}")
    return (cost_hi - cost_lo) / dv


# ---------------------------------------------------------------------------
# Exhaustive multiple-choice knapsack


@dataclass(frozen=True)
class MckpInstance:
    """Per-impression choice matrices: values[i, k], costs[i, k] >= 0.

    `min_roi`, when set, requires total value / total cost >= min_roi; a
    zero-cost assignment then counts as feasible only if its value is 0.
    """

    values: np.ndarray
    costs: np.ndarray
    budget: float
    min_roi: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        costs = np.asarray(self.costs, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "costs", costs)
        if values.ndim != 2 or values.shape != costs.shape or values.shape[1] < 1:
            raise ValueError("values and costs must be matching (n, k>=1) matrices")
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(costs)):
            raise ValueError("values and costs must be finite")
        if costs.min() < 0:
            raise ValueError("costs must be nonnegative")
        if not (math.isfinite(self.budget) and self.budget >= 0):
            raise ValueError(f"budget must be nonnegative, got {self.budget}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_choices(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MckpSolution:
    feasible: bool
    assignment: tuple
    value: float
    cost: float


def _apply_constraints(instance: MckpInstance, value, cost):
    """Mask infeasible totals to -inf (in place on `value`)."""
    value[cost > instance.budget] = -np.inf
    if instance.min_roi is not None:
        positive_cost = cost > 0
        bad_ratio = np.zeros(value.shape, dtype=bool)
        bad_ratio[positive_cost] = value[positive_cost] < instance.min_roi * cost[positive_cost]
        bad_ratio |= (~positive_cost) & (value > 0)
        value[bad_ratio] = -np.inf
    return value


def solve_mckp_exhaustive(instance: MckpInstance) -> MckpSolution:
    """Enumerate every assignment and return the best feasible one.

    Capped at 5^12 assignments. Over-budget partial sums are masked as soon
    as they appear (costs are nonnegative, so they can only get worse), which
    is the only pruning applied. Value ties resolve to the smallest
    assignment index, i.e. lexicographically earliest choice vector.
    """
    n, k = instance.n, instance.n_choices
    total = k**n
    if total > MCKP_CAP:
        raise ValueError(f"{k}^{n} assignments exceed the {MCKP_CAP} enumeration cap")

    if total <= _CUMULATIVE_LIMIT:
        value = np.zeros(1)
        cost = np.zeros(1)
        for i in range(n):
            value = (value[:, None] + instance.values[i][None, :]).ravel()
            cost = (cost[:, None] + instance.costs[i][None, :]).ravel()
            value[cost > instance.budget] = -np.inf
        value = _apply_constraints(instance, value, cost)
        best = int(np.argmax(value))
        best_value, best_cost = float(value[best]), float(cost[best])
    else:
        best, best_value, best_cost = -1, -np.inf, 0.0
        for start in range(0, total, _CHUNK):
            idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
            value = np.zeros(idx.size)
            cost = np.zeros(idx.size)
            rem = idx
            for i in range(n - 1, -1, -1):
                rem, digit = np.divmod(rem, k)
                value += instance.values[i][digit]
                cost += instance.costs[i][digit]
            value = _apply_constraints(instance, value, cost)
            chunk_best = int(np.argmax(value))
            if value[chunk_best] > best_value:
                best = start + chunk_best
                best_value, best_cost = float(value[chunk_best]), float(cost[chunk_best])

    if not math.isfinite(best_value):
        return MckpSolution(feasible=False, assignment=(), value=0.0, cost=0.0)
    digits = []
    rem = best
    for _ in range(n):
        rem, digit = divmod(rem, k)
        digits.append(int(digit))
    return MckpSolution(
        feasible=True, assignment=tuple(reversed(digits)), value=best_value, cost=best_cost
    )


def dual_sweep(instance: MckpInstance, etas) -> MckpSolution:
    """Best feasible assignment produced by the dual rule over an eta sweep.

    For each eta, every impression independently picks
    argmax eta * value - cost; the swept assignment is kept when it is
    feasible and improves on the best value so far. This is the primary
    decision path the exhaustive solver above is used to audit.
    """
    best = MckpSolution(feasible=False, assignment=(), value=0.0, cost=0.0)
    for eta in etas:
        picks = tuple(
            dual_decision_rule(instance.values[i], instance.costs[i], eta)
            for i in range(instance.n)
        )
        rows = np.arange(instance.n)
        value = float(instance.values[rows, picks].sum())
        cost = float(instance.costs[rows, picks].sum())
        if cost > instance.budget:
            continue
        if instance.min_roi is not None:
            if cost > 0 and value < instance.min_roi * cost:
                continue
            if cost == 0 and value > 0:
                continue
        if not best.feasible or value > best.value:
            best = MckpSolution(feasible=True, assignment=picks, value=value, cost=cost)
    return best
