"""Hybrid online bidding: win-rate landscapes, bid shading, and replay tools.

The package models winning prices with a zero-inflated exponential (an atom
at zero for organic wins plus an exponential tail), shades first-price bids
by maximizing expected surplus against that landscape, aligns marginal costs
across mixed channel types, and replays logged auctions under budget or
efficiency constraints.
"""

from . import kernels
from .control import (
    Campaign,
    ControlConfig,
    ControlState,
    TracePoint,
    bisect_eta,
    pid_step,
    run_pacing,
    write_trace,
)
from .data import Dataset, load_dataset, save_dataset
from .datagen import GeneratorConfig, generate, organicize_dataset, write_manifest
from .errors import (
    BracketError,
    ConfigError,
    DegenerateCurveWarning,
    DegenerateDataError,
    HobError,
    InfeasibleConstraintError,
    NumericFailureError,
)
from .landscape import (
    LinearParamModel,
    TrainConfig,
    WinModel,
    ZieParams,
    eval_bce,
    fit_baseline,
    load_model,
    save_model,
    train_param_model,
    zie_mle_batch,
    zie_nll,
)
from .mca import PowerLawFit, align_eta3, fit_power_law, mc_fpa_uniform, mc_spa
from .shading import BidDecision, dual_decision_rule, optimal_bid, optimal_bids, zero_bid_test
from .simulate import (
    STANDARD_CHANNELS,
    ChannelSpec,
    ReplayConfig,
    ReplayReport,
    assign_channels,
    estimate_mc,
    matched_run,
    resolve_auction,
    run_strategy,
    strategy_label,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "BidDecision",
    "BracketError",
    "Campaign",
    "ChannelSpec",
    "ConfigError",
    "ControlConfig",
    "ControlState",
    "Dataset",
    "DegenerateCurveWarning",
    "DegenerateDataError",
    "GeneratorConfig",
    "HobError",
    "InfeasibleConstraintError",
    "LinearParamModel",
    "NumericFailureError",
    "PowerLawFit",
    "ReplayConfig",
    "ReplayReport",
    "STANDARD_CHANNELS",
    "TracePoint",
    "TrainConfig",
    "WinModel",
    "ZieParams",
    "align_eta3",
    "assign_channels",
    "bisect_eta",
    "dual_decision_rule",
    "estimate_mc",
    "eval_bce",
    "fit_baseline",
    "fit_power_law",
    "generate",
    "kernels",
    "load_dataset",
    "load_model",
    "matched_run",
    "mc_fpa_uniform",
    "mc_spa",
    "optimal_bid",
    "optimal_bids",
    "organicize_dataset",
    "pid_step",
    "resolve_auction",
    "run_pacing",
    "run_strategy",
    "save_dataset",
    "save_model",
    "strategy_label",
    "sweep",
    "train_param_model",
    "write_manifest",
    "write_trace",
    "zero_bid_test",
    "zie_mle_batch",
    "zie_nll",
]
