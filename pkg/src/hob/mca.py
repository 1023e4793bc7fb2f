"""Marginal-cost alignment across auction channels.

The marginal cost of a channel at multiplier eta is dCost/dValue along the
eta path. Three closed forms matter here:

- second-price, truthful bidding: MC = eta;
- first-price with uniform bid eta*v: cost is eta * V(eta), so
  MC = eta + V/V'; under a local power law V(eta) = a * eta^b this is
  eta * (1 + 1/b);
- first-price with per-impression surplus-maximizing shading: MC = eta.

A uniform-bid first-price channel therefore buys marginal value at a premium.
Aligning it means running it at eta3 = eta / (1 + 1/b), which restores
MC(eta3) = eta and equalizes marginal costs across all three channel types.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurveWarning

B_FLOOR = 1e-3


@dataclass(frozen=True)
class PowerLawFit:
    """Local fit V(eta) = a * eta^b with the RMS log-residual and eta window."""

    a: float
    b: float
    residual: float
    fit_window: tuple

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"scale a must be positive, got {self.a}")
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValueError(f"exponent b must be positive, got {self.b}")
        if not (math.isfinite(self.residual) and self.residual >= 0):
            raise ValueError(f"residual must be nonnegative, got {self.residual}")

    def value_at(self, eta: float) -> float:
        return self.a * eta**self.b


def fit_power_law(etas, values) -> PowerLawFit:
    """OLS fit of log(value) on log(eta).

    Needs >= 2 distinct positive etas with positive values. A flat or
    decreasing curve gives a nonpositive slope; the exponent is then floored
    at 1e-3 and a DegenerateCurveWarning is issued, since downstream
    alignment divides by b.
    """
    etas = np.asarray(etas, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if etas.ndim != 1 or etas.shape != values.shape or etas.size < 2:
        raise ValueError("need >= 2 (eta, value) observations of equal length")
    if not np.all(np.isfinite(etas)) or etas.min() <= 0:
        raise ValueError("etas must be positive and finite")
    if not np.all(np.isfinite(values)) or values.min() <= 0:
        raise ValueError("values must be positive and finite")
    if np.unique(etas).size < 2:
        raise ValueError("etas must include at least 2 distinct points")

    log_eta = np.log(etas)
    log_val = np.log(values)
    slope, intercept = np.polyfit(log_eta, log_val, 1)
    if slope <= B_FLOOR:
        warnings.warn(
            f"value curve is flat or decreasing over the window (b={slope:.3g}); "
            f"flooring exponent at {B_FLOOR}",
            DegenerateCurveWarning,
            stacklevel=2,
        )
        slope = B_FLOOR
    resid = log_val - (intercept + slope * log_eta)
    return PowerLawFit(
        a=float(np.exp(intercept)),
        b=float(slope),
        residual=float(np.sqrt(np.mean(resid**2))),
        fit_window=(float(etas.min()), float(etas.max())),
    )


def _check_eta(eta: float):
    if not (math.isfinite(eta) and eta > 0):
        raise ValueError(f"eta must be positive and finite, got {eta}")


def mc_spa(eta: float) -> float:
    """Marginal cost of a truthful second-price channel."""
    _check_eta(eta)
    return eta


def mc_fpa_uniform(eta_f: float, fit: PowerLawFit) -> float:
    """Marginal cost of a uniform-bid first-price channel: eta_f * (1 + 1/b)."""
    _check_eta(eta_f)
    if fit.b <= 0:
        raise ValueError(f"power-law exponent must be positive, got {fit.b}")
    return eta_f * (1.0 + 1.0 / fit.b)


def mc_fpa_shaded(eta: float) -> float:
    """Marginal cost of a first-price channel bidding per-impression optima."""
    _check_eta(eta)
    return eta


def align_eta3(eta: float, fit: PowerLawFit) -> float:
    """Multiplier for the uniform-bid first-price channel that restores MC = eta."""
    _check_eta(eta)
    if fit.b <= 0:
        raise ValueError(f"power-law exponent must be positive, got {fit.b}")
    return eta / (1.0 + 1.0 / fit.b)
