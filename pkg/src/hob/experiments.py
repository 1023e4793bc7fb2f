"""Fitting and comparison pipelines on top of the replay engine.

Two workflows live here: fitting a win-rate model and scoring it against
held-out auctions (calibration via binary cross-entropy on win indicators,
economics via the surplus captured when bidding against the model), and
comparing bidding strategies at a matched constraint so value differences
are attributable to the bidding policy rather than the spend level.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import kernels
from .control import Campaign
from .data import Dataset, atomic_write
from .errors import ConfigError
from .landscape import (
    BASELINE_KINDS,
    LinearParamModel,
    TrainConfig,
    WinModel,
    eval_bce,
    fit_baseline,
    train_param_model,
)
from .shading import model_grid_bids
from .simulate import ReplayConfig, matched_run
from .testkit import optimal_surplus_baseline

COMPARISON_SCHEMA = "hob-comparison-report v1"


@dataclass(frozen=True)
class FitResult:
    kind: str
    model: object
    bce: float
    surplus_rate: float | None
    n_train: int
    n_eval: int

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "bce": self.bce,
            "surplus_rate": self.surplus_rate,
            "n_train": self.n_train,
            "n_eval": self.n_eval,
        }


def shaded_eval_bids(model, features, scaled_values, n_iter: int = 40) -> np.ndarray:
    """Surplus-maximizing bids for any fitted model kind."""
    if isinstance(model, LinearParamModel):
        pi, lam = model.predict(features)
        return kernels.golden_bids(pi, lam, scaled_values, n_iter)
    if isinstance(model, WinModel):
        if model.kind == "zie":
            pi, lam = model.params
            return kernels.golden_bids(pi, lam, scaled_values, n_iter)
        return model_grid_bids(model, scaled_values)
    raise ConfigError(f"unsupported model type {type(model).__name__}")


def surplus_rate_against_log(
    model, dataset: Dataset, eta: float = 1.0, n_iter: int = 40
) -> float | None:
    """Fraction of clairvoyant surplus captured bidding the model's shades.

    Replays the dataset as one first-price channel: a bid wins when it is at
    least the logged price and pays itself. The denominator is the surplus of
    a bidder who sees each price in advance, sum(max(0, eta*v - w)).
    """
    scaled = eta * dataset.values
    bids = shaded_eval_bids(model, dataset.features, scaled, n_iter)
    won = bids >= dataset.winning_prices
    realized = float(np.where(won, scaled - bids, 0.0).sum())
    best = optimal_surplus_baseline(dataset.values, dataset.winning_prices, eta)
    return realized / best if best > 0 else None


def fit_and_eval(
    dataset: Dataset,
    kind: str,
    train: TrainConfig = TrainConfig(),
    eval_fraction: float = 0.3,
    seed: int = 0,
    eta_eval: float = 1.0,
) -> FitResult:
    """Split, fit one model kind, and score it on the held-out part.

    zie fits the feature-conditional model by gradient descent; the other
    kinds fit unconditional curves to the training prices (zeros nudged to a
    small positive epsilon, since none of them carries an atom at zero).
    """
    if kind not in BASELINE_KINDS:
        raise ConfigError(f"kind must be one of {BASELINE_KINDS}")
    train_part, eval_part = dataset.split(eval_fraction, seed)
    if kind == "zie":
        model = train_param_model(train_part, train)
    else:
        model = fit_baseline(kind, train_part.winning_prices)
    return FitResult(
        kind=kind,
        model=model,
        bce=eval_bce(model, eval_part),
        surplus_rate=surplus_rate_against_log(model, eval_part, eta_eval),
        n_train=train_part.n,
        n_eval=eval_part.n,
    )


def fit_all_kinds(
    dataset: Dataset,
    kinds=BASELINE_KINDS,
    train: TrainConfig = TrainConfig(),
    eval_fraction: float = 0.3,
    seed: int = 0,
    eta_eval: float = 1.0,
) -> dict:
    return {
        kind: fit_and_eval(dataset, kind, train, eval_fraction, seed, eta_eval) for kind in kinds
    }


# ---------------------------------------------------------------------------
# Matched-constraint strategy comparisons


def compare_methods(
    dataset: Dataset,
    channels,
    campaign: Campaign,
    methods,
    replay: ReplayConfig,
    bracket: tuple = (0.05, 20.0),
    tol: float = 0.01,
    attach_mcs: bool = True,
    cost_tolerance: float = 0.01,
) -> dict:
    """Run each (strategy, params) method at the same matched constraint.

    Returns a report dict with one entry per method label, the realized
    spend's relative gap to the first method's spend (the cost-match check),
    and value/surplus deltas against the first method, which is conventionally
    the uniform-everything baseline.
    """
    if not methods:
        raise ConfigError("compare_methods needs at least one (strategy, params) method")
    entries = []
    for strategy, params in methods:
        report = matched_run(
            dataset, channels, campaign, strategy, replay, params,
            bracket=bracket, tol=tol, attach_mcs=attach_mcs,
        )
        entries.append(report)
    base = entries[0]
    out = {
        "schema": COMPARISON_SCHEMA,
        "objective": {
            "objective": campaign.objective,
            "budget": campaign.budget if math.isfinite(campaign.budget) else None,
            "target_roi": campaign.target_roi,
            "target_cpc": campaign.target_cpc,
        },
        "baseline": base.label,
        "cost_tolerance": cost_tolerance,
        "methods": {},
    }
    for report in entries:
        total = report.total
        cost_gap = (
            abs(total.cost - base.total.cost) / base.total.cost if base.total.cost > 0 else None
        )
        out["methods"][report.label] = {
            "strategy": report.strategy,
            "dist": report.dist,
            "eta": report.eta,
            "eta3": report.eta3,
            "report": report.to_dict(),
            "cost_gap_vs_baseline": cost_gap,
            "cost_matched": None if cost_gap is None else bool(cost_gap <= cost_tolerance),
            "value_delta_vs_baseline": (
                (total.value - base.total.value) / base.total.value
                if base.total.value > 0
                else None
            ),
            "surplus_delta_vs_baseline": total.surplus - base.total.surplus,
        }
    return out


def write_comparison(path: str, comparison: dict) -> None:
    with atomic_write(path) as out:
        json.dump(comparison, out, indent=2, sort_keys=True)
        out.write("\n")


def sweep_uplift_trend(
    records,
    method: str,
    baseline: str = "UE&UB",
    metric: str = "value",
) -> tuple:
    """Spearman rank correlation between sweep grid points and method uplift.

    Uplift at each grid point is the relative gain of `method` over
    `baseline` on the total row of the sweep records. Returns (rho, points,
    uplifts) so callers can report the raw series alongside the statistic.
    """
    by_point: dict = {}
    for r in records:
        if r.channel != "total":
            continue
        by_point.setdefault(r.point, {})[r.method] = getattr(r, metric)
    points, uplifts = [], []
    for point in sorted(by_point):
        row = by_point[point]
        if method not in row or baseline not in row:
            raise ConfigError(f"sweep records missing {method!r} or {baseline!r} at {point}")
        if row[baseline] in (None, 0):
            raise ConfigError(f"baseline {metric} is zero at grid point {point}")
        points.append(point)
        uplifts.append((row[method] - row[baseline]) / row[baseline])
    if len(points) < 3:
        raise ConfigError("need at least 3 grid points for a trend statistic")
    rho = float(stats.spearmanr(points, uplifts).statistic)
    return rho, points, uplifts
