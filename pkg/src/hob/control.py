"""Campaign constraint control: online PID pacing and offline bisection.

Both controllers steer the single scalar eta that scales impression value
into a bid ceiling. Online, a multiplicative PID updates eta once per period
from a normalized tracking error (relative pacing gap, relative ROI gap, or
relative CPC gap depending on the objective); offline, bisection solves
metric(eta) = target on a replay whose cost is nondecreasing in eta.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

from .data import atomic_write
from .errors import BracketError, ConfigError, InfeasibleConstraintError

log = logging.getLogger(__name__)

OBJECTIVES = ("max_return", "target_roas", "target_cpc")


@dataclass(frozen=True)
class Campaign:
    """Objective plus its constraint levels. Budget is the total for the horizon."""

    objective: str
    budget: float = math.inf
    target_roi: float | None = None
    target_cpc: float | None = None

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}")
        if not self.budget > 0:
            raise ConfigError(f"budget must be positive, got {self.budget}")
        if self.objective == "max_return" and not math.isfinite(self.budget):
            raise ConfigError("max_return requires a finite budget")
        if self.objective == "target_roas":
            if self.target_roi is None or not (math.isfinite(self.target_roi) and self.target_roi > 0):
                raise ConfigError("target_roas requires a positive target_roi")
        if self.objective == "target_cpc":
            if self.target_cpc is None or not (math.isfinite(self.target_cpc) and self.target_cpc > 0):
                raise ConfigError("target_cpc requires a positive target_cpc")


@dataclass(frozen=True)
class ControlConfig:
    kp: float = 0.4
    ki: float = 0.1
    kd: float = 0.05
    eta_min: float = 0.05
    eta_max: float = 20.0
    integral_clamp: float = 5.0
    periods: int = 24
    eta_init: float = 1.0
    # Golden-section iterations for online bidding; offline replays use 40.
    n_iter: int = 10

    def __post_init__(self):
        if not 0 < self.eta_min < self.eta_max:
            raise ConfigError("need 0 < eta_min < eta_max")
        if not self.eta_min <= self.eta_init <= self.eta_max:
            raise ConfigError("eta_init must lie inside [eta_min, eta_max]")
        if self.periods < 1:
            raise ConfigError("periods must be >= 1")
        if self.integral_clamp <= 0:
            raise ConfigError("integral_clamp must be positive")


@dataclass(frozen=True)
class ControlState:
    eta: float
    period_index: int = 0
    spend: float = 0.0
    value: float = 0.0
    error_integral: float = 0.0
    last_error: float = 0.0


def _control_error(campaign: Campaign, elapsed: float, spend: float, value: float) -> float:
    """Normalized tracking error; positive means eta should rise."""
    if campaign.objective == "max_return":
        pace_target = campaign.budget * elapsed
        return (pace_target - spend) / pace_target
    if campaign.objective == "target_roas":
        if spend <= 0:
            return 1.0
        return (value / spend - campaign.target_roi) / campaign.target_roi
    if value <= 0:
        return 1.0 if spend <= 0 else -1.0
    return (campaign.target_cpc - spend / value) / campaign.target_cpc


def pid_step(
    state: ControlState,
    spend_increment: float,
    value_increment: float,
    campaign: Campaign,
    config: ControlConfig = ControlConfig(),
) -> ControlState:
    """Fold one completed period into the state and update eta multiplicatively.

    eta <- clamp(eta * exp(kp*e + ki*I + kd*de)) with the integral clamped to
    +-integral_clamp (anti-windup). An on-track state (zero error, empty
    integral) is a fixed point.
    """
    if spend_increment < 0 or value_increment < 0:
        raise ValueError("period spend and value must be nonnegative")
    period = state.period_index + 1
    spend = state.spend + spend_increment
    value = state.value + value_increment
    error = _control_error(campaign, period / config.periods, spend, value)
    integral = max(-config.integral_clamp, min(config.integral_clamp, state.error_integral + error))
    delta = error - state.last_error
    raw_eta = state.eta * math.exp(config.kp * error + config.ki * integral + config.kd * delta)
    eta = max(config.eta_min, min(config.eta_max, raw_eta))
    if eta != raw_eta:
        log.debug("eta clamped from %.6g to %.6g at period %d", raw_eta, eta, period)
    return ControlState(
        eta=eta,
        period_index=period,
        spend=spend,
        value=value,
        error_integral=integral,
        last_error=error,
    )


@dataclass(frozen=True)
class TracePoint:
    period: int
    eta: float
    eta3: float
    spend: float
    value: float
    roi: float
    error: float


def write_trace(path: str, trace) -> None:
    """Controller trace CSV: period, eta, eta3, spend, value, roi, error."""
    with atomic_write(path) as out:
        writer = csv.writer(out)
        writer.writerow(["period", "eta", "eta3", "spend", "value", "roi", "error"])
        for p in trace:
            writer.writerow(
                [p.period, repr(p.eta), repr(p.eta3), repr(p.spend), repr(p.value),
                 repr(p.roi), repr(p.error)]
            )


def run_pacing(period_replay, campaign: Campaign, config: ControlConfig = ControlConfig()):
    """Closed loop over the horizon: replay a period, then pid_step.

    period_replay(eta, period_index) returns (spend, value) or
    (spend, value, eta3) for strategies that run an aligned uniform-FPA
    multiplier. Returns (final_state, trace).
    """
    state = ControlState(eta=config.eta_init)
    trace = []
    for period in range(1, config.periods + 1):
        outcome = period_replay(state.eta, period)
        if len(outcome) == 2:
            spend, value = outcome
            eta3 = state.eta
        else:
            spend, value, eta3 = outcome
        prev_eta = state.eta
        state = pid_step(state, spend, value, campaign, config)
        trace.append(
            TracePoint(
                period=period,
                eta=prev_eta,
                eta3=eta3,
                spend=state.spend,
                value=state.value,
                roi=state.value / state.spend if state.spend > 0 else 0.0,
                error=state.last_error,
            )
        )
    return state, trace


# ---------------------------------------------------------------------------
# Offline bisection


@dataclass(frozen=True)
class BisectResult:
    eta: float
    value: float
    cost: float
    metric: float
    iterations: int
    converged: bool


def _metric(campaign: Campaign, value: float, cost: float) -> float:
    if campaign.objective == "max_return":
        return cost
    if campaign.objective == "target_roas":
        return value / cost if cost > 0 else math.inf
    if value > 0:
        return cost / value
    return math.inf if cost > 0 else 0.0


def bisect_eta(
    replay_fn,
    campaign: Campaign,
    bracket: tuple = (0.05, 20.0),
    tol: float = 1e-3,
    max_iter: int = 60,
) -> BisectResult:
    """Solve metric(eta) = target by bisection on a monotone replay.

    replay_fn maps eta to (value, cost). The controlled metric is total cost
    (max_return, target = budget, increasing in eta), ROI (target_roas,
    decreasing), or CPC (target_cpc, increasing). The bracket must straddle
    the target or BracketError is raised with the endpoint evaluations.
    Convergence means a relative metric deviation within tol; failing that
    after max_iter iterations (e.g. a cost step crossing the target) raises
    InfeasibleConstraintError.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ConfigError(f"bad bracket {bracket}")
    target = {
        "max_return": campaign.budget,
        "target_roas": campaign.target_roi,
        "target_cpc": campaign.target_cpc,
    }[campaign.objective]
    increasing = campaign.objective != "target_roas"

    def evaluate(eta):
        value, cost = replay_fn(eta)
        return value, cost, _metric(campaign, value, cost)

    lo_eval, hi_eval = evaluate(lo), evaluate(hi)
    span = (lo_eval[2], hi_eval[2]) if increasing else (hi_eval[2], lo_eval[2])
    if not span[0] <= target <= span[1]:
        raise BracketError(
            f"target {target:.6g} outside metric span [{span[0]:.6g}, {span[1]:.6g}] "
            f"for eta in [{lo}, {hi}]",
            lo_eval=lo_eval,
            hi_eval=hi_eval,
        )

    def close_enough(metric):
        return abs(metric - target) <= tol * abs(target)

    for endpoint_eta, evaluation in ((lo, lo_eval), (hi, hi_eval)):
        if close_enough(evaluation[2]):
            return BisectResult(endpoint_eta, evaluation[0], evaluation[1], evaluation[2], 0, True)

    best = None
    for iteration in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        value, cost, metric = evaluate(mid)
        if best is None or abs(metric - target) < abs(best.metric - target):
            best = BisectResult(mid, value, cost, metric, iteration, close_enough(metric))
        if close_enough(metric):
            return best
        if (metric < target) == increasing:
            lo = mid
        else:
            hi = mid
    raise InfeasibleConstraintError(
        f"bisection did not reach {campaign.objective} target {target:.6g} within "
        f"{max_iter} iterations; best metric {best.metric:.6g} at eta={best.eta:.6g}"
    )
