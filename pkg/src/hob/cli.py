"""Command-line front end.

Subcommands cover the full pipeline: datagen (synthetic auction logs),
organicize (noise a log's positive prices), fit (train/fit a win-rate model
and score it on a held-out split), simulate (replay one strategy, fixed eta
or constraint-matched), compare (matched-constraint method table against the
uniform baseline), and sweep (grids over budgets, channel shares, or organic
share).

Every command is deterministic given its flags; commands that draw random
numbers require an explicit --seed. Exit codes: 0 success, 2 usage or config
error, 3 infeasible constraint, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import dataclass, replace

from .control import Campaign
from .data import Dataset, atomic_write, file_sha256, load_dataset, save_dataset
from .datagen import GeneratorConfig, generate, organicize_dataset, write_manifest
from .errors import (
    BracketError,
    ConfigError,
    DegenerateDataError,
    InfeasibleConstraintError,
    NumericFailureError,
)
from .experiments import compare_methods, fit_and_eval, sweep_uplift_trend, write_comparison
from .landscape import BASELINE_KINDS, TrainConfig, fit_baseline, load_model, save_model
from .reports import validate_comparison_report, validate_replay_report
from .simulate import (
    STANDARD_CHANNELS,
    ChannelSpec,
    ReplayConfig,
    SweepConfig,
    matched_run,
    run_strategy,
    sweep,
    write_sweep_csv,
)

OBJECTIVES = ("max_return", "target_roas", "target_cpc")


# ---------------------------------------------------------------------------
# Run configuration (INI round-trip)


@dataclass(frozen=True)
class RunConfig:
    """One comparison/sweep setup: paths, campaign, channels, methods, knobs."""

    dataset: str
    campaign: Campaign
    channels: tuple
    methods: tuple
    model: str | None = None
    output: str = "."
    assignment: str = "partition"
    n_iter: int = 40
    value_per_click: float = 1.0
    seed: int = 0
    split: float = 0.3
    epochs: int = 30
    lr: float = 0.05
    tol: float = 0.01
    bracket: tuple = (0.05, 20.0)
    vary_channel: str = "fpa_nu"
    absorb_channel: str | None = "spa"


def parse_channel_value(cid: str, raw: str) -> ChannelSpec:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"channel {cid!r} must be 'mechanism,mode,share', got {raw!r}")
    try:
        share = float(parts[2])
    except ValueError:
        raise ConfigError(f"channel {cid!r} share is not a number: {parts[2]!r}") from None
    return ChannelSpec(cid, parts[0], parts[1], share)


def parse_method_value(raw: str) -> tuple:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) == 1:
        parts.append("")
    if len(parts) != 2:
        raise ConfigError(f"method must be 'strategy,dist' or 'strategy', got {raw!r}")
    strategy, dist = parts
    if strategy == "ue_ub":
        if dist:
            raise ConfigError("ue_ub takes no distribution kind")
        return strategy, None
    if dist not in BASELINE_KINDS:
        raise ConfigError(f"method {strategy!r} needs a dist in {BASELINE_KINDS}, got {dist!r}")
    return strategy, dist


def _campaign_from_mapping(section) -> Campaign:
    objective = section.get("objective", "")
    if objective not in OBJECTIVES:
        raise ConfigError(f"campaign objective must be one of {OBJECTIVES}, got {objective!r}")
    def opt_float(key):
        raw = section.get(key, "")
        return float(raw) if raw else None
    budget = opt_float("budget")
    return Campaign(
        objective=objective,
        budget=math.inf if budget is None else budget,
        target_roi=opt_float("target_roi"),
        target_cpc=opt_float("target_cpc"),
    )


def load_run_config(path: str, require_files: bool = True) -> RunConfig:
    """Parse a sectioned key-value config file into a RunConfig.

    Sections: [paths] dataset/model/output, [campaign] objective plus its
    level, [channels] id = mechanism,mode,share, [methods] name =
    strategy,dist, [settings] scalar knobs. Referenced input files must exist.
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    for section in ("paths", "campaign", "channels", "methods"):
        if section not in parser:
            raise ConfigError(f"config {path} is missing the [{section}] section")
    paths = parser["paths"]
    dataset = paths.get("dataset", "")
    if not dataset:
        raise ConfigError("[paths] dataset is required")
    model = paths.get("model", "") or None
    if require_files:
        if not os.path.exists(dataset):
            raise ConfigError(f"dataset file not found: {dataset}")
        if model and not os.path.exists(model):
            raise ConfigError(f"model file not found: {model}")
    channels = tuple(
        parse_channel_value(cid, parser["channels"][cid]) for cid in parser["channels"]
    )
    methods = tuple(parse_method_value(raw) for _, raw in parser["methods"].items())
    if not channels:
        raise ConfigError("config defines no channels")
    if not methods:
        raise ConfigError("config defines no methods")
    settings = parser["settings"] if "settings" in parser else {}
    def setting(key, cast, default):
        raw = settings.get(key, "") if settings else ""
        return cast(raw) if raw else default
    absorb = setting("absorb_channel", str, "spa")
    return RunConfig(
        dataset=dataset,
        campaign=_campaign_from_mapping(parser["campaign"]),
        channels=channels,
        methods=methods,
        model=model,
        output=paths.get("output", ".") or ".",
        assignment=setting("assignment", str, "partition"),
        n_iter=setting("n_iter", int, 40),
        value_per_click=setting("value_per_click", float, 1.0),
        seed=setting("seed", int, 0),
        split=setting("split", float, 0.3),
        epochs=setting("epochs", int, 30),
        lr=setting("lr", float, 0.05),
        tol=setting("tol", float, 0.01),
        bracket=(
            setting("bracket_lo", float, 0.05),
            setting("bracket_hi", float, 20.0),
        ),
        vary_channel=setting("vary_channel", str, "fpa_nu"),
        absorb_channel=None if absorb == "none" else absorb,
    )


def write_run_config(path: str, config: RunConfig) -> None:
    parser = configparser.ConfigParser()
    parser["paths"] = {"dataset": config.dataset, "output": config.output}
    if config.model:
        parser["paths"]["model"] = config.model
    campaign = config.campaign
    section = {"objective": campaign.objective}
    if math.isfinite(campaign.budget):
        section["budget"] = repr(campaign.budget)
    if campaign.target_roi is not None:
        section["target_roi"] = repr(campaign.target_roi)
    if campaign.target_cpc is not None:
        section["target_cpc"] = repr(campaign.target_cpc)
    parser["campaign"] = section
    parser["channels"] = {
        c.id: f"{c.mechanism},{c.bidding_mode},{repr(c.traffic_share)}" for c in config.channels
    }
    parser["methods"] = {
        f"m{i}": (f"{s},{d}" if d else s) for i, (s, d) in enumerate(config.methods, start=1)
    }
    parser["settings"] = {
        "assignment": config.assignment,
        "n_iter": str(config.n_iter),
        "value_per_click": repr(config.value_per_click),
        "seed": str(config.seed),
        "split": repr(config.split),
        "epochs": str(config.epochs),
        "lr": repr(config.lr),
        "tol": repr(config.tol),
        "bracket_lo": repr(config.bracket[0]),
        "bracket_hi": repr(config.bracket[1]),
        "vary_channel": config.vary_channel,
        "absorb_channel": config.absorb_channel or "none",
    }
    with atomic_write(path) as out:
        parser.write(out)


# ---------------------------------------------------------------------------
# Shared helpers


def _parse_channels_flag(raw: str | None):
    if not raw:
        return STANDARD_CHANNELS
    specs = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ConfigError(f"channel spec must be 'id=mechanism,mode,share', got {chunk!r}")
        cid, rest = chunk.split("=", 1)
        specs.append(parse_channel_value(cid.strip(), rest))
    if not specs:
        raise ConfigError("no channels parsed from --channels")
    return tuple(specs)


def _campaign_from_args(args) -> Campaign | None:
    if not getattr(args, "objective", None):
        return None
    section = {"objective": args.objective}
    for key in ("budget", "target_roi", "target_cpc"):
        val = getattr(args, key, None)
        if val is not None:
            section[key] = repr(val)
    return _campaign_from_mapping(section)


def _method_params(dist: str | None, dataset: Dataset, model_path: str | None):
    """Resolve one method's params source: None, the loaded model, or a baseline fit."""
    if dist is None:
        return None
    if dist == "zie":
        if not model_path:
            raise ConfigError("zie methods need --model (or [paths] model in the config)")
        return load_model(model_path)
    return fit_baseline(dist, dataset.winning_prices)


def _write_json(path: str, doc: dict) -> None:
    with atomic_write(path) as out:
        json.dump(doc, out, indent=2, sort_keys=True)
        out.write("\n")


def _infeasible_report(path: str | None, exc: Exception) -> int:
    if path:
        _write_json(path, {"infeasible": True, "error": str(exc)})
    print(f"infeasible constraint: {exc}", file=sys.stderr)
    return 3


# ---------------------------------------------------------------------------
# Commands


def cmd_datagen(args) -> int:
    config = GeneratorConfig(
        n=args.n,
        feature_dim=args.dim,
        seed=args.seed,
        noise_theta=args.noise_theta,
        noise_lambda=args.noise_lambda,
        value_dist=args.value_dist,
        theta_offset=args.theta_offset,
    )
    dataset = generate(config)
    save_dataset(dataset, args.out)
    manifest_path = write_manifest(args.out, config, dataset)
    print(f"wrote {args.out} ({dataset.n} impressions) sha256={file_sha256(args.out)}")
    print(f"manifest {manifest_path}")
    return 0


def cmd_organicize(args) -> int:
    dataset = load_dataset(args.data)
    noised = organicize_dataset(dataset, relative_sigma=args.sigma, seed=args.seed)
    save_dataset(noised, args.out)
    print(f"wrote {args.out} sha256={file_sha256(args.out)}")
    return 0


def cmd_fit(args) -> int:
    dataset = load_dataset(args.data)
    train = TrainConfig(
        epochs=args.epochs, lr=args.lr, batch_size=args.batch_size, seed=args.seed
    )
    result = fit_and_eval(
        dataset, args.dist, train, eval_fraction=args.split, seed=args.seed, eta_eval=args.eta
    )
    metrics = result.summary()
    metrics.update(
        {
            "dataset": args.data,
            "epochs": args.epochs,
            "lr": args.lr,
            "split": args.split,
            "seed": args.seed,
            "eta_eval": args.eta,
        }
    )
    if args.model_out:
        save_model(result.model, args.model_out)
        metrics["model"] = args.model_out
    payload = json.dumps(metrics, indent=2, sort_keys=True)
    if args.metrics_out:
        with atomic_write(args.metrics_out) as out:
            out.write(payload + "\n")
    print(payload)
    return 0


def cmd_simulate(args) -> int:
    dataset = load_dataset(args.data)
    channels = _parse_channels_flag(args.channels)
    strategy, dist = parse_method_value(args.method)
    params = _method_params(dist, dataset, args.model)
    campaign = _campaign_from_args(args)
    config = ReplayConfig(
        eta=args.eta,
        eta3=args.eta3,
        n_iter=args.n_iter,
        assignment=args.assignment,
        value_per_click=args.value_per_click,
    )
    if campaign is None:
        report = run_strategy(dataset, channels, None, strategy, config, params)
    else:
        try:
            report = matched_run(
                dataset, channels, campaign, strategy, config, params,
                bracket=(args.bracket_lo, args.bracket_hi), tol=args.tol,
                attach_mcs=args.mcs,
            )
        except (BracketError, InfeasibleConstraintError) as exc:
            return _infeasible_report(args.out, exc)
    doc = report.to_dict()
    validate_replay_report(doc)
    if args.out:
        report.to_json(args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _comparison_table(comparison: dict) -> list:
    rows = []
    for label, entry in comparison["methods"].items():
        total = entry["report"]["total"]
        delta = entry["value_delta_vs_baseline"]
        mcs = {
            cid: rep["mc"] for cid, rep in entry["report"]["channels"].items()
        }
        rows.append(
            {
                "method": label,
                "eta": entry["eta"],
                "eta3": entry["eta3"],
                "value": total["value"],
                "cost": total["cost"],
                "roi": total["roi"],
                "surplus_rate": total["surplus_rate"],
                "value_delta_pct": None if delta is None else 100.0 * delta,
                **{f"mc_{cid}": mc for cid, mc in mcs.items()},
            }
        )
    return rows


def _print_table(rows: list) -> None:
    if not rows:
        return
    cols = list(rows[0].keys())
    def fmt(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v)
    widths = {
        c: max(len(c), *(len(fmt(r.get(c))) for r in rows)) for c in cols
    }
    print("  ".join(c.ljust(widths[c]) for c in cols))
    for r in rows:
        print("  ".join(fmt(r.get(c)).ljust(widths[c]) for c in cols))


def _write_table_csv(path: str, rows: list) -> None:
    import csv as _csv

    cols = list(rows[0].keys()) if rows else []
    with atomic_write(path) as out:
        writer = _csv.writer(out)
        writer.writerow(cols)
        for r in rows:
            writer.writerow(["" if r.get(c) is None else r.get(c) for c in cols])


def cmd_compare(args) -> int:
    if args.config:
        run = load_run_config(args.config)
    else:
        if not (args.data and args.methods and args.objective):
            raise ConfigError("compare needs --config, or --data with --methods and --objective")
        run = RunConfig(
            dataset=args.data,
            campaign=_campaign_from_args(args),
            channels=_parse_channels_flag(args.channels),
            methods=tuple(parse_method_value(m) for m in args.methods.split(";")),
            model=args.model,
            assignment=args.assignment,
            n_iter=args.n_iter,
            value_per_click=args.value_per_click,
            tol=args.tol,
            bracket=(args.bracket_lo, args.bracket_hi),
        )
    dataset = load_dataset(run.dataset)
    methods = [
        (strategy, _method_params(dist, dataset, run.model)) for strategy, dist in run.methods
    ]
    replay = ReplayConfig(
        eta=1.0,
        n_iter=run.n_iter,
        assignment=run.assignment,
        value_per_click=run.value_per_click,
    )
    try:
        comparison = compare_methods(
            dataset, run.channels, run.campaign, methods, replay,
            bracket=run.bracket, tol=run.tol, attach_mcs=not args.no_mcs,
        )
    except (BracketError, InfeasibleConstraintError) as exc:
        return _infeasible_report(args.out, exc)
    validate_comparison_report(comparison)
    rows = _comparison_table(comparison)
    _print_table(rows)
    if args.out:
        write_comparison(args.out, comparison)
        print(f"wrote {args.out}")
    if args.table:
        _write_table_csv(args.table, rows)
        print(f"wrote {args.table}")
    return 0


def cmd_sweep(args) -> int:
    run = load_run_config(args.config, require_files=args.experiment != "organic_share")
    grid = [float(tok) for tok in args.grid.split(",") if tok.strip()]
    if not grid:
        raise ConfigError("empty --grid")
    if args.trend_out:
        # fail before the sweep runs, not after minutes of replay
        if args.experiment != "channel_proportions":
            raise ConfigError("--trend-out applies to channel_proportions sweeps only")
        if len(grid) < 3:
            raise ConfigError("--trend-out needs at least 3 grid points for a rank statistic")
        strategies = {s for s, _ in run.methods}
        if "ue_ub" not in strategies or "mcae_nub" not in strategies:
            raise ConfigError("--trend-out needs both ue_ub and mcae_nub among the methods")
    generator = None
    dataset = None
    if args.experiment == "organic_share":
        if args.seed is None:
            raise ConfigError("organic_share sweeps require --seed for the generator")
        generator = GeneratorConfig(
            n=args.gen_n, feature_dim=args.gen_dim, seed=args.seed,
            noise_theta=args.noise_theta, noise_lambda=args.noise_lambda,
        )
        # Models are refit on each regenerated dataset; only the zie kind
        # has a trainer wired in, so other baselines are rejected here.
        for _, dist in run.methods:
            if dist not in (None, "zie"):
                raise ConfigError("organic_share sweeps support ue_ub and zie methods only")
        methods = tuple(
            (strategy, "refit_zie" if dist == "zie" else None)
            for strategy, dist in run.methods
        )
    else:
        dataset = load_dataset(run.dataset)
        methods = tuple(
            (strategy, _method_params(dist, dataset, run.model))
            for strategy, dist in run.methods
        )
    config = SweepConfig(
        campaign=run.campaign,
        replay=ReplayConfig(
            eta=1.0, n_iter=run.n_iter, assignment=run.assignment,
            value_per_click=run.value_per_click,
        ),
        channels=run.channels,
        bracket=run.bracket,
        tol=run.tol,
        vary_channel=run.vary_channel,
        absorb_channel=run.absorb_channel,
        train=TrainConfig(epochs=run.epochs, lr=run.lr, seed=run.seed),
    )
    try:
        records = sweep(args.experiment, grid, methods, dataset, config, generator)
    except (BracketError, InfeasibleConstraintError) as exc:
        return _infeasible_report(None, exc)
    write_sweep_csv(args.out, records)
    print(f"wrote {args.out} ({len(records)} rows)")
    if args.experiment == "channel_proportions" and len(grid) >= 3:
        labels = sorted({r.method for r in records})
        aligned = [m for m in labels if m.startswith("MCAE")]
        if "UE&UB" in labels and aligned:
            rho, points, uplifts = sweep_uplift_trend(records, aligned[-1])
            trend = {
                "experiment": args.experiment,
                "method": aligned[-1],
                "baseline": "UE&UB",
                "spearman_rho": rho,
                "points": points,
                "uplifts": uplifts,
            }
            print(f"uplift trend ({aligned[-1]} vs UE&UB): spearman rho = {rho:+.3f}")
            if args.trend_out:
                _write_json(args.trend_out, trend)
                print(f"wrote {args.trend_out}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hob",
        description="Win-rate landscapes, bid shading, and multi-channel auction replay.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="generate a synthetic auction log")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise-theta", type=float, default=0.3)
    p.add_argument("--noise-lambda", type=float, default=0.3)
    p.add_argument("--value-dist", choices=("clamped_normal", "abs_normal"),
                   default="clamped_normal")
    p.add_argument("--theta-offset", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("organicize", help="noise the positive prices of a log")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, default=0.7)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_organicize)

    p = sub.add_parser("fit", help="fit a win-rate model and score the held-out split")
    p.add_argument("--data", required=True)
    p.add_argument("--dist", choices=BASELINE_KINDS, required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--split", type=float, default=0.3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--eta", type=float, default=1.0,
                   help="multiplier for the held-out surplus-rate metric")
    p.add_argument("--model-out")
    p.add_argument("--metrics-out")
    p.set_defaults(func=cmd_fit)

    def replay_flags(p, data_required=True):
        p.add_argument("--data", required=data_required)
        p.add_argument("--model", help="fitted model file (needed by zie methods)")
        p.add_argument("--channels",
                       help="'id=mechanism,mode,share;...' (default standard three)")
        p.add_argument("--assignment", choices=("partition", "duplicate"),
                       default="partition")
        p.add_argument("--n-iter", type=int, default=40)
        p.add_argument("--value-per-click", type=float, default=1.0)
        p.add_argument("--objective", choices=OBJECTIVES)
        p.add_argument("--budget", type=float)
        p.add_argument("--target-roi", type=float)
        p.add_argument("--target-cpc", type=float)
        p.add_argument("--bracket-lo", type=float, default=0.05)
        p.add_argument("--bracket-hi", type=float, default=20.0)
        p.add_argument("--tol", type=float, default=0.01)

    p = sub.add_parser("simulate", help="replay one strategy (fixed eta or matched)")
    replay_flags(p)
    p.add_argument("--method", required=True,
                   help="'strategy,dist', e.g. 'ue_ub' or 'mcae_nub,zie'")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--eta3", type=float)
    p.add_argument("--mcs", action="store_true",
                   help="attach per-channel finite-difference marginal costs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="matched-constraint method comparison table")
    p.add_argument("--config", help="run config file (see docs); overrides other flags")
    replay_flags(p, data_required=False)
    p.add_argument("--methods",
                   help="semicolon-separated methods, e.g. 'ue_ub;ue_nub,zie;mcae_nub,zie'")
    p.add_argument("--no-mcs", action="store_true",
                   help="skip per-channel marginal-cost estimation")
    p.add_argument("--out")
    p.add_argument("--table", help="also write the summary table as CSV")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="grid sweep of matched comparisons")
    p.add_argument("--config", required=True)
    p.add_argument("--experiment", required=True,
                   choices=("budget_levels", "channel_proportions", "organic_share"))
    p.add_argument("--grid", required=True, help="comma-separated grid values")
    p.add_argument("--out", required=True)
    p.add_argument("--trend-out", help="write the uplift trend statistic as JSON")
    p.add_argument("--seed", type=int, help="generator seed (organic_share)")
    p.add_argument("--gen-n", type=int, default=50000)
    p.add_argument("--gen-dim", type=int, default=20)
    p.add_argument("--noise-theta", type=float, default=0.3)
    p.add_argument("--noise-lambda", type=float, default=0.3)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BracketError, InfeasibleConstraintError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
