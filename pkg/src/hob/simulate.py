"""Offline auction replay across heterogeneous channels.

A replay pushes a logged dataset through one or more channels (second-price
or first-price, uniform or per-impression bidding) at a given multiplier eta
and scores the outcome against the logged winning prices: a bid wins when it
is at least the winning price (ties win, and a zero bid wins exactly the
organic w=0 impressions), second-price pays the winning price, first-price
pays the bid.

Strategies:

- ue_ub    uniform eta, uniform bids eta*v everywhere;
- ue_nub   uniform eta, per-impression shaded bids on nonuniform channels;
- mcae_nub shaded bids plus marginal-cost alignment: uniform-bid first-price
           channels run at eta3 = eta / (1 + 1/b), with b fitted locally to
           the channel's own value curve, so every channel buys marginal
           value at the same marginal cost eta.

Constraint matching wraps a replay in bisection on eta; robustness sweeps
rerun matched comparisons over budget grids, channel-share grids, or
regenerated datasets with shifted organic share.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .control import Campaign, bisect_eta
from .data import Dataset, atomic_write
from .datagen import generate
from .errors import ConfigError, DegenerateCurveWarning, NumericFailureError
from .landscape import LinearParamModel, TrainConfig, WinModel, ZieParams, train_param_model
from .mca import B_FLOOR, align_eta3, fit_power_law
from .shading import model_grid_bids

MECHANISMS = ("spa", "fpa")
BID_MODES = ("uniform", "nonuniform")
STRATEGIES = ("ue_ub", "ue_nub", "mcae_nub")
ASSIGNMENTS = ("partition", "duplicate")
KIND_LETTER = {"zie": "Z", "gamma": "G", "lognormal": "L", "exp": "E"}
REPORT_SCHEMA = "hob-replay-report v1"


def strategy_label(strategy: str, dist: str | None = None) -> str:
    """Display name, e.g. ('mcae_nub', 'zie') -> 'MCAE&NUB-Z'."""
    if strategy == "ue_ub":
        return "UE&UB"
    base = {"ue_nub": "UE&NUB", "mcae_nub": "MCAE&NUB"}[strategy]
    return f"{base}-{KIND_LETTER[dist]}" if dist else base


@dataclass(frozen=True)
class ChannelSpec:
    id: str
    mechanism: str
    bidding_mode: str
    traffic_share: float

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ConfigError(f"mechanism must be one of {MECHANISMS}")
        if self.bidding_mode not in BID_MODES:
            raise ConfigError(f"bidding_mode must be one of {BID_MODES}")
        if self.bidding_mode == "nonuniform" and self.mechanism != "fpa":
            raise ConfigError("nonuniform bidding requires a first-price channel")
        if not 0.0 <= self.traffic_share <= 1.0:
            raise ConfigError(f"traffic_share must be in [0, 1], got {self.traffic_share}")


STANDARD_CHANNELS = (
    ChannelSpec("spa", "spa", "uniform", 1.0 / 3.0),
    ChannelSpec("fpa_u", "fpa", "uniform", 1.0 / 3.0),
    ChannelSpec("fpa_nu", "fpa", "nonuniform", 1.0 / 3.0),
)


def check_channels(channels, assignment: str):
    ids = [c.id for c in channels]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate channel ids in {ids}")
    if assignment not in ASSIGNMENTS:
        raise ConfigError(f"assignment must be one of {ASSIGNMENTS}")
    if assignment == "partition":
        total = sum(c.traffic_share for c in channels)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"traffic shares must sum to 1, got {total}")


def assign_channels(dataset: Dataset, channels, assignment: str = "partition") -> dict:
    """Map channel id -> impression index array.

    Partition mode buckets each impression by its md5 hash unit against the
    cumulative shares, so assignments are stable across runs and nest as
    shares change. Duplicate mode replays the full log through every channel.
    """
    check_channels(channels, assignment)
    if assignment == "duplicate":
        full = np.arange(dataset.n)
        return {c.id: full for c in channels}
    units = dataset.hash_units()
    bounds = np.cumsum([c.traffic_share for c in channels])
    bucket = np.searchsorted(bounds, units, side="right")
    bucket = np.minimum(bucket, len(channels) - 1)
    return {c.id: np.flatnonzero(bucket == k) for k, c in enumerate(channels)}


# ---------------------------------------------------------------------------
# Single-auction resolution (scalar surface; replays use the array forms)


@dataclass(frozen=True)
class Impression:
    id: str
    features: np.ndarray
    value: float
    winning_price: float
    channel: str = ""


@dataclass(frozen=True)
class AuctionOutcome:
    won: bool
    cost: float
    value: float
    bid: float


def resolve_auction(mechanism: str, bid: float, impression: Impression) -> AuctionOutcome:
    """Ties win; second-price pays the winning price, first-price pays the bid."""
    if mechanism not in MECHANISMS:
        raise ConfigError(f"mechanism must be one of {MECHANISMS}")
    if not (math.isfinite(bid) and bid >= 0):
        raise ValueError(f"bid must be nonnegative and finite, got {bid}")
    won = bid >= impression.winning_price
    if not won:
        return AuctionOutcome(won=False, cost=0.0, value=0.0, bid=bid)
    cost = impression.winning_price if mechanism == "spa" else bid
    return AuctionOutcome(won=True, cost=cost, value=impression.value, bid=bid)


# ---------------------------------------------------------------------------
# Replay reports


@dataclass
class ChannelReport:
    channel: str
    impressions: int
    wins: int
    zero_bid_wins: int
    value: float
    cost: float
    surplus: float
    roi: float | None
    surplus_rate: float | None
    mc: float | None = None

    def to_dict(self) -> dict:
        return {
            "impressions": self.impressions,
            "wins": self.wins,
            "zero_bid_wins": self.zero_bid_wins,
            "value": self.value,
            "cost": self.cost,
            "surplus": self.surplus,
            "roi": self.roi,
            "surplus_rate": self.surplus_rate,
            "mc": self.mc,
        }


@dataclass
class ReplayReport:
    strategy: str
    dist: str | None
    eta: float
    eta3: float
    assignment: str
    value_per_click: float
    n_iter: int
    total: ChannelReport
    channels: dict
    objective: dict | None = None

    @property
    def label(self) -> str:
        return strategy_label(self.strategy, self.dist if self.strategy != "ue_ub" else None)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "strategy": self.strategy,
            "label": self.label,
            "dist": self.dist,
            "eta": self.eta,
            "eta3": self.eta3,
            "assignment": self.assignment,
            "value_per_click": self.value_per_click,
            "n_iter": self.n_iter,
            "objective": self.objective,
            "total": self.total.to_dict(),
            "channels": {cid: rep.to_dict() for cid, rep in self.channels.items()},
        }

    def to_json(self, path: str):
        with atomic_write(path) as out:
            json.dump(self.to_dict(), out, indent=2, sort_keys=True)
            out.write("\n")


@dataclass(frozen=True)
class ReplayConfig:
    """Per-run replay settings; eta3=None lets mcae_nub align itself."""

    eta: float
    eta3: float | None = None
    n_iter: int = 40
    assignment: str = "partition"
    value_per_click: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.eta3 is not None and not (math.isfinite(self.eta3) and self.eta3 > 0):
            raise ConfigError(f"eta3 must be positive, got {self.eta3}")
        if self.value_per_click <= 0:
            raise ConfigError("value_per_click must be positive")
        if self.n_iter < 1:
            raise ConfigError("n_iter must be >= 1")


def _dist_kind(params) -> str | None:
    if params is None:
        return None
    if isinstance(params, LinearParamModel):
        return "zie"
    if isinstance(params, WinModel):
        return params.kind
    if isinstance(params, ZieParams):
        return "zie"
    raise ConfigError(f"unsupported params source {type(params).__name__}")


def _shaded_bids(params, features, scaled_values, n_iter: int) -> np.ndarray:
    """Per-impression surplus-maximizing bids under the given model."""
    if isinstance(params, LinearParamModel):
        pi, lam = params.predict(features)
        return kernels.golden_bids(pi, lam, scaled_values, n_iter)
    if isinstance(params, ZieParams):
        return kernels.golden_bids(params.pi, params.lam, scaled_values, n_iter)
    if isinstance(params, WinModel):
        if params.kind == "zie":
            pi, lam = params.params
            return kernels.golden_bids(pi, lam, scaled_values, n_iter)
        return model_grid_bids(params, scaled_values)
    raise ConfigError("nonuniform bidding needs a params source (model or ZieParams)")


def _channel_outcome(
    spec: ChannelSpec,
    dataset: Dataset,
    idx: np.ndarray,
    multiplier: float,
    shaded: bool,
    params,
    config: ReplayConfig,
    baseline_eta: float,
) -> tuple:
    values = dataset.values[idx] * config.value_per_click
    prices = dataset.winning_prices[idx]
    if shaded:
        bids = _shaded_bids(params, dataset.features[idx], multiplier * values, config.n_iter)
    else:
        bids = multiplier * values
    won = bids >= prices
    cost = np.where(won, prices if spec.mechanism == "spa" else bids, 0.0)
    gained = np.where(won, values, 0.0)
    scaled = baseline_eta * values
    surplus = float(np.where(won, scaled - cost, 0.0).sum())
    clairvoyant = float(np.maximum(0.0, scaled - prices).sum())
    total_cost = float(cost.sum())
    total_value = float(gained.sum())
    report = ChannelReport(
        channel=spec.id,
        impressions=int(idx.size),
        wins=int(won.sum()),
        zero_bid_wins=int(np.count_nonzero(won & (bids == 0.0))),
        value=total_value,
        cost=total_cost,
        surplus=surplus,
        roi=total_value / total_cost if total_cost > 0 else None,
        surplus_rate=surplus / clairvoyant if clairvoyant > 0 else None,
    )
    return report, clairvoyant


def _combine(reports: list, clairvoyants: list, channels_order: list) -> tuple:
    total_value = sum(r.value for r in reports)
    total_cost = sum(r.cost for r in reports)
    total_surplus = sum(r.surplus for r in reports)
    clairvoyant_total = sum(clairvoyants)
    rate = total_surplus / clairvoyant_total if clairvoyant_total > 0 else None
    total = ChannelReport(
        channel="total",
        impressions=sum(r.impressions for r in reports),
        wins=sum(r.wins for r in reports),
        zero_bid_wins=sum(r.zero_bid_wins for r in reports),
        value=total_value,
        cost=total_cost,
        surplus=total_surplus,
        roi=total_value / total_cost if total_cost > 0 else None,
        surplus_rate=rate,
    )
    return total, {cid: rep for cid, rep in zip(channels_order, reports)}


def _uniform_fpa_value_curve(dataset: Dataset, idx: np.ndarray, vpc: float):
    values = dataset.values[idx] * vpc
    prices = dataset.winning_prices[idx]

    def curve(multiplier: float) -> float:
        return float(np.where(multiplier * values >= prices, values, 0.0).sum())

    return curve


def resolve_alignment(
    dataset: Dataset,
    idx: np.ndarray,
    eta: float,
    vpc: float,
    rounds: int = 3,
    probe_span: tuple = (0.7, 1.4),
    probe_points: int = 5,
) -> float:
    """eta3 for one uniform-bid first-price channel by probing its value curve.

    Fits V(m) = a * m^b on probe multipliers around the current guess and
    re-centers for a few rounds. Falls back to eta (no alignment) when the
    curve is flat or any probe wins nothing, leaving bisection to move eta.
    """
    curve = _uniform_fpa_value_curve(dataset, idx, vpc)
    eta3 = eta
    for _ in range(rounds):
        probes = eta3 * np.geomspace(probe_span[0], probe_span[1], probe_points)
        values = np.array([curve(m) for m in probes])
        if values.min() <= 0.0:
            return eta
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateCurveWarning)
            fit = fit_power_law(probes, values)
        if fit.b <= B_FLOOR:
            return eta
        eta3 = align_eta3(eta, fit)
    return eta3


def run_strategy(
    dataset: Dataset,
    channels,
    campaign: Campaign | None,
    strategy: str,
    config: ReplayConfig,
    params=None,
) -> ReplayReport:
    """Replay one strategy at fixed multipliers and aggregate per channel.

    Realized surplus is measured against the strategy's global eta (the
    scaled value eta*v minus cost on won impressions) and normalized by the
    clairvoyant optimum sum(max(0, eta*v - w)), so surplus_rate is in [0, 1].
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"strategy must be one of {STRATEGIES}")
    if strategy != "ue_ub" and params is None:
        raise ConfigError(f"{strategy} requires a params source for shaded bids")
    assignment = assign_channels(dataset, channels, config.assignment)

    eta3 = config.eta3
    if strategy == "mcae_nub" and eta3 is None:
        uniform_fpa = [c for c in channels if c.mechanism == "fpa" and c.bidding_mode == "uniform"]
        if uniform_fpa:
            eta3 = resolve_alignment(
                dataset, assignment[uniform_fpa[0].id], config.eta, config.value_per_click
            )
    if eta3 is None:
        eta3 = config.eta

    reports = []
    clairvoyants = []
    for spec in channels:
        shaded = strategy != "ue_ub" and spec.bidding_mode == "nonuniform"
        if strategy == "mcae_nub" and spec.mechanism == "fpa" and spec.bidding_mode == "uniform":
            multiplier = eta3
        else:
            multiplier = config.eta
        report, clairvoyant = _channel_outcome(
            spec, dataset, assignment[spec.id], multiplier, shaded, params, config, config.eta
        )
        reports.append(report)
        clairvoyants.append(clairvoyant)
    total, by_id = _combine(reports, clairvoyants, [c.id for c in channels])
    return ReplayReport(
        strategy=strategy,
        dist=_dist_kind(params),
        eta=config.eta,
        eta3=eta3,
        assignment=config.assignment,
        value_per_click=config.value_per_click,
        n_iter=config.n_iter,
        total=total,
        channels=by_id,
        objective=None if campaign is None else {
            "objective": campaign.objective,
            "budget": campaign.budget if math.isfinite(campaign.budget) else None,
            "target_roi": campaign.target_roi,
            "target_cpc": campaign.target_cpc,
        },
    )


# ---------------------------------------------------------------------------
# Marginal-cost estimation


def estimate_mc(replay_fn, eta: float, delta: float | None = None) -> float:
    """Central-difference marginal cost dCost/dValue of an eta -> (value, cost) curve."""
    if not (math.isfinite(eta) and eta > 0):
        raise ValueError(f"eta must be positive, got {eta}")
    if delta is None:
        delta = 1e-3 * eta
    if not (math.isfinite(delta) and 0 < delta < eta):
        raise ValueError(f"delta must be in (0, eta), got {delta}")
    value_hi, cost_hi = replay_fn(eta + delta)
    value_lo, cost_lo = replay_fn(eta - delta)
    dv = value_hi - value_lo
    if abs(dv) < 1e-12:
        # A dead curve is a numeric failure, not a usage error: CLI maps it to
        # its own exit code instead of crashing mid-report.
        raise NumericFailureError(f"flat value curve around eta={eta}; cannot form dCost/dValue")
    return (cost_hi - cost_lo) / dv


def realized_channel_curve(
    dataset: Dataset,
    channels,
    channel_id: str,
    strategy: str,
    config: ReplayConfig,
    params=None,
):
    """eta -> (value, cost) for one channel as only its own multiplier moves."""
    spec = {c.id: c for c in channels}[channel_id]
    idx = assign_channels(dataset, channels, config.assignment)[channel_id]
    values = dataset.values[idx] * config.value_per_click
    prices = dataset.winning_prices[idx]
    features = dataset.features[idx]
    shaded = strategy != "ue_ub" and spec.bidding_mode == "nonuniform"

    def curve(multiplier: float) -> tuple:
        if shaded:
            bids = _shaded_bids(params, features, multiplier * values, config.n_iter)
        else:
            bids = multiplier * values
        won = bids >= prices
        cost = np.where(won, prices if spec.mechanism == "spa" else bids, 0.0)
        return float(np.where(won, values, 0.0).sum()), float(cost.sum())

    return curve


def expected_shaded_curve(pi, lam, values, n_iter: int = 40):
    """Model-expected eta -> (value, cost) for a shaded first-price channel.

    Uses the landscape itself instead of sampled prices: each impression
    contributes value v * F(bid) and cost bid * F(bid). The curve is smooth,
    which is what a small-delta finite difference needs.
    """
    pi = np.asarray(pi, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)

    def curve(eta: float) -> tuple:
        bids = kernels.golden_bids(pi, lam, eta * values, n_iter)
        win = kernels.zie_cdf(pi, lam, bids)
        return float((values * win).sum()), float((bids * win).sum())

    return curve


def estimate_channel_mcs(
    dataset: Dataset,
    channels,
    strategy: str,
    config: ReplayConfig,
    params=None,
    delta_rel: float = 0.05,
) -> dict:
    """Realized finite-difference MC per channel at its operating multiplier.

    The default delta is coarser than the expectation-mode default because a
    realized value curve is a step function; 5% keeps enough win flips in the
    window to tame the noise while the O(delta^2) central-difference bias
    stays far below the comparison tolerances.
    """
    report_eta3 = None
    if strategy == "mcae_nub":
        probe = run_strategy(dataset, channels, None, strategy, config, params)
        report_eta3 = probe.eta3
    mcs = {}
    for spec in channels:
        if strategy == "mcae_nub" and spec.mechanism == "fpa" and spec.bidding_mode == "uniform":
            operating = report_eta3
        else:
            operating = config.eta
        curve = realized_channel_curve(dataset, channels, spec.id, strategy, config, params)
        mcs[spec.id] = estimate_mc(curve, operating, delta_rel * operating)
    return mcs


# ---------------------------------------------------------------------------
# Constraint-matched runs and sweeps


def matched_run(
    dataset: Dataset,
    channels,
    campaign: Campaign,
    strategy: str,
    config: ReplayConfig,
    params=None,
    bracket: tuple = (0.05, 20.0),
    tol: float = 0.01,
    attach_mcs: bool = False,
) -> ReplayReport:
    """Bisect eta until the campaign constraint is met, then report that replay."""

    def replay(eta: float) -> ReplayReport:
        return run_strategy(
            dataset, channels, campaign, strategy, replace(config, eta=eta), params
        )

    def curve(eta: float) -> tuple:
        report = replay(eta)
        return report.total.value, report.total.cost

    result = bisect_eta(curve, campaign, bracket=bracket, tol=tol)
    report = replay(result.eta)
    if attach_mcs:
        mcs = estimate_channel_mcs(
            dataset, channels, strategy, replace(config, eta=result.eta), params
        )
        for cid, mc in mcs.items():
            report.channels[cid].mc = mc
    return report


@dataclass(frozen=True)
class SweepConfig:
    """Shared setup for robustness sweeps.

    For organic_share sweeps the dataset is regenerated per grid point (with
    theta_offset set to the grid value), so pass the placeholder string
    "refit_zie" instead of a fitted model in the methods list; it is replaced
    by a model trained on each regenerated dataset.
    """

    campaign: Campaign
    replay: ReplayConfig
    channels: tuple = STANDARD_CHANNELS
    bracket: tuple = (0.05, 20.0)
    tol: float = 0.01
    vary_channel: str = "fpa_nu"
    absorb_channel: str | None = "spa"
    train: TrainConfig = TrainConfig()


@dataclass(frozen=True)
class SweepRecord:
    experiment: str
    point: float
    method: str
    channel: str
    eta: float
    eta3: float
    impressions: int
    wins: int
    value: float
    cost: float
    roi: float | None
    surplus: float
    surplus_rate: float | None
    zero_fraction: float


def _records_from_report(
    experiment: str, point: float, report: ReplayReport, zero_fraction: float
) -> list:
    rows = []
    for channel_report in [report.total, *report.channels.values()]:
        rows.append(
            SweepRecord(
                experiment=experiment,
                point=point,
                method=report.label,
                channel=channel_report.channel,
                eta=report.eta,
                eta3=report.eta3,
                impressions=channel_report.impressions,
                wins=channel_report.wins,
                value=channel_report.value,
                cost=channel_report.cost,
                roi=channel_report.roi,
                surplus=channel_report.surplus,
                surplus_rate=channel_report.surplus_rate,
                zero_fraction=zero_fraction,
            )
        )
    return rows


def _vary_shares(channels, vary_channel: str, share: float, absorb_channel: str | None = None):
    """Set vary_channel's share; absorb_channel (or all others, evenly) flexes.

    Absorbing from a single named channel keeps the rest of the mix fixed, so
    a share sweep isolates the swept channel's effect instead of also diluting
    every other channel.
    """
    ids = [c.id for c in channels]
    if vary_channel not in ids:
        raise ConfigError(f"vary_channel {vary_channel!r} not in channel set")
    if not 0.0 < share < 1.0:
        raise ConfigError(f"swept share must be in (0, 1), got {share}")
    if absorb_channel is None:
        rest = (1.0 - share) / (len(channels) - 1)
        return tuple(
            replace(c, traffic_share=share if c.id == vary_channel else rest) for c in channels
        )
    if absorb_channel not in ids:
        raise ConfigError(f"absorb_channel {absorb_channel!r} not in channel set")
    if absorb_channel == vary_channel:
        raise ConfigError("absorb_channel must differ from vary_channel")
    fixed = sum(c.traffic_share for c in channels if c.id not in (vary_channel, absorb_channel))
    slack = 1.0 - fixed - share
    if slack <= 0.0:
        raise ConfigError(
            f"share {share} leaves no traffic for {absorb_channel!r} (fixed shares {fixed})"
        )
    out = []
    for c in channels:
        if c.id == vary_channel:
            out.append(replace(c, traffic_share=share))
        elif c.id == absorb_channel:
            out.append(replace(c, traffic_share=slack))
        else:
            out.append(c)
    return tuple(out)


def max_workers() -> int:
    """Worker cap for sweep parallelism, from HOB_THREADS (default 1)."""
    raw = os.environ.get("HOB_THREADS", "1").strip()
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"HOB_THREADS must be an integer, got {raw!r}") from None


def sweep(
    experiment: str,
    grid,
    methods,
    dataset: Dataset | None,
    config: SweepConfig,
    generator=None,
) -> list:
    """Run constraint-matched method comparisons over a parameter grid.

    experiment: budget_levels (grid of budgets), channel_proportions (grid of
    traffic shares for config.vary_channel, slack absorbed by
    config.absorb_channel or split evenly), or
    organic_share (grid of theta_offset values; the dataset is regenerated per
    point and zie sources retrained). methods is a sequence of
    (strategy, params_source) pairs sharing the same matched campaign.
    Grid points are independent; HOB_THREADS > 1 evaluates them in a thread
    pool with results kept in grid order.
    """
    if experiment not in ("budget_levels", "channel_proportions", "organic_share"):
        raise ConfigError(f"unknown sweep experiment {experiment!r}")
    if experiment == "organic_share" and generator is None:
        raise ConfigError("organic_share sweeps need a GeneratorConfig")
    if experiment != "organic_share" and dataset is None:
        raise ConfigError(f"{experiment} sweeps need a dataset")

    def run_point(point: float) -> list:
        campaign = config.campaign
        channels = config.channels
        data = dataset
        point_methods = methods
        if experiment == "budget_levels":
            campaign = replace(campaign, budget=float(point))
        elif experiment == "channel_proportions":
            channels = _vary_shares(
                channels, config.vary_channel, float(point), config.absorb_channel
            )
        else:
            data = generate(replace(generator, theta_offset=float(point)))
            point_methods = [
                (strategy, train_param_model(data, config.train) if kind == "refit_zie" else kind)
                for strategy, kind in methods
            ]
        zero_fraction = float(np.mean(data.winning_prices == 0.0))
        rows = []
        for strategy, params in point_methods:
            report = matched_run(
                data,
                channels,
                campaign,
                strategy,
                config.replay,
                params,
                bracket=config.bracket,
                tol=config.tol,
            )
            rows.extend(_records_from_report(experiment, float(point), report, zero_fraction))
        return rows

    workers = max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(run_point, grid))
    else:
        nested = [run_point(p) for p in grid]
    return [row for rows in nested for row in rows]


def write_sweep_csv(path: str, records) -> None:
    """Tidy CSV: one row per grid point x method x channel (plus totals)."""
    import csv as _csv

    fields = [
        "experiment", "point", "method", "channel", "eta", "eta3", "impressions",
        "wins", "value", "cost", "roi", "surplus", "surplus_rate", "zero_fraction",
    ]
    with atomic_write(path) as out:
        writer = _csv.writer(out)
        writer.writerow(fields)
        for r in records:
            writer.writerow([
                r.experiment, repr(r.point), r.method, r.channel, repr(r.eta), repr(r.eta3),
                r.impressions, r.wins, repr(r.value), repr(r.cost),
                "" if r.roi is None else repr(r.roi), repr(r.surplus),
                "" if r.surplus_rate is None else repr(r.surplus_rate), repr(r.zero_fraction),
            ])
