"""Command-line surface: exit codes, determinism, file outputs."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from hob.cli import (
    RunConfig,
    load_run_config,
    main,
    parse_channel_value,
    parse_method_value,
    write_run_config,
)
from hob.control import Campaign
from hob.data import file_sha256, load_dataset
from hob.errors import ConfigError
from hob.landscape import load_model
from hob.reports import validate_comparison_report, validate_replay_report
from hob.simulate import ChannelSpec, ReplayConfig, run_strategy


def run(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def dataset_path(tmp_path_factory):
    path = str(tmp_path_factory.mktemp("cli") / "log.jsonl")
    assert run(["datagen", "--n", 3000, "--seed", 7, "--out", path]) == 0
    return path


@pytest.fixture(scope="module")
def model_path(dataset_path, tmp_path_factory):
    path = str(tmp_path_factory.mktemp("cli") / "model.txt")
    code = run(
        ["fit", "--data", dataset_path, "--dist", "zie", "--epochs", 5, "--seed", 0,
         "--model-out", path]
    )
    assert code == 0
    return path


# ---------------------------------------------------------------------------
# flag parsing


def test_channel_flag_parsing():
    spec = parse_channel_value("spa", "spa,uniform,0.4")
    assert spec == ChannelSpec(id="spa", mechanism="spa", bidding_mode="uniform",
                               traffic_share=0.4)
    with pytest.raises(ConfigError):
        parse_channel_value("x", "spa,uniform")
    with pytest.raises(ConfigError):
        parse_channel_value("x", "spa,sideways,0.4")


def test_method_flag_parsing():
    assert parse_method_value("ue_ub") == ("ue_ub", None)
    assert parse_method_value("mcae_nub,zie") == ("mcae_nub", "zie")
    with pytest.raises(ConfigError):
        parse_method_value("ue_ub,zie")  # uniform baseline takes no model
    with pytest.raises(ConfigError):
        parse_method_value("ue_nub")  # shaded strategies need one
    with pytest.raises(ConfigError):
        parse_method_value("ue_nub,weibull")


# ---------------------------------------------------------------------------
# exit codes


def test_no_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2
    capsys.readouterr()


def test_datagen_requires_seed():
    with pytest.raises(SystemExit) as err:
        main(["datagen", "--n", "10", "--out", "/tmp/x.jsonl"])
    assert err.value.code == 2


def test_missing_dataset_is_config_error(tmp_path):
    code = run(["fit", "--data", tmp_path / "nope.jsonl", "--dist", "zie", "--seed", 0])
    assert code == 2


def test_infeasible_budget_exits_3(dataset_path, tmp_path):
    out = tmp_path / "report.json"
    code = run(
        ["simulate", "--data", dataset_path, "--method", "ue_ub",
         "--objective", "max_return", "--budget", 1e12, "--out", out]
    )
    assert code == 3
    doc = json.loads(out.read_text())
    assert doc["infeasible"] is True
    assert "error" in doc


def test_flat_value_curve_exits_4(tmp_path):
    # every row organic: wins never change with eta, so dValue is zero
    data = tmp_path / "organic.jsonl"
    rows = [
        {"id": str(i), "features": [0.0, 0.0], "value": 1.0, "winning_price": 0.0}
        for i in range(50)
    ]
    data.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    code = run(
        ["simulate", "--data", data, "--method", "ue_ub", "--objective", "max_return",
         "--budget", 10.0, "--mcs", "--out", tmp_path / "r.json"]
    )
    assert code == 4


# ---------------------------------------------------------------------------
# datagen / organicize / fit


def test_datagen_deterministic(tmp_path):
    a, b = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    assert run(["datagen", "--n", 500, "--seed", 3, "--out", a]) == 0
    assert run(["datagen", "--n", 500, "--seed", 3, "--out", b]) == 0
    assert file_sha256(a) == file_sha256(b)
    manifest = json.loads(open(a + ".manifest.json").read())
    assert manifest["dataset_sha256"] == file_sha256(a)


def test_organicize_preserves_zeros(dataset_path, tmp_path):
    out = str(tmp_path / "noisy.jsonl")
    assert run(["organicize", "--data", dataset_path, "--out", out, "--seed", 1]) == 0
    before = load_dataset(dataset_path)
    after = load_dataset(out)
    zero_rows = before.winning_prices == 0.0
    np.testing.assert_array_equal(after.winning_prices[zero_rows], 0.0)
    assert not np.array_equal(after.winning_prices, before.winning_prices)


def test_fit_metrics_deterministic(dataset_path, tmp_path):
    m1, m2 = str(tmp_path / "m1.json"), str(tmp_path / "m2.json")
    base = ["fit", "--data", dataset_path, "--dist", "zie", "--epochs", 4, "--seed", 2]
    assert run(base + ["--metrics-out", m1]) == 0
    assert run(base + ["--metrics-out", m2]) == 0
    assert open(m1, "rb").read() == open(m2, "rb").read()
    doc = json.loads(open(m1).read())
    assert doc["kind"] == "zie"
    assert np.isfinite(doc["bce"])


def test_fit_baseline_dists_need_no_epochs(dataset_path, tmp_path):
    metrics = str(tmp_path / "exp.json")
    assert run(
        ["fit", "--data", dataset_path, "--dist", "exp", "--seed", 0,
         "--metrics-out", metrics]
    ) == 0
    assert json.loads(open(metrics).read())["kind"] == "exp"


def test_saved_model_loads(model_path):
    model = load_model(model_path)
    assert model.weights_theta.ndim == 1


# ---------------------------------------------------------------------------
# simulate


def test_simulate_matches_library_byte_for_byte(dataset_path, tmp_path):
    cli_out = str(tmp_path / "cli.json")
    code = run(
        ["simulate", "--data", dataset_path, "--method", "ue_ub", "--eta", 0.9,
         "--channels", "only=fpa,uniform,1.0", "--out", cli_out]
    )
    assert code == 0
    lib_out = str(tmp_path / "lib.json")
    channels = (ChannelSpec(id="only", mechanism="fpa", bidding_mode="uniform",
                            traffic_share=1.0),)
    report = run_strategy(load_dataset(dataset_path), channels, None, "ue_ub",
                          ReplayConfig(eta=0.9))
    report.to_json(lib_out)
    assert open(cli_out, "rb").read() == open(lib_out, "rb").read()


def test_simulate_matched_budget(dataset_path, model_path, tmp_path):
    out = str(tmp_path / "matched.json")
    code = run(
        ["simulate", "--data", dataset_path, "--method", "mcae_nub,zie",
         "--model", model_path, "--objective", "max_return", "--budget", 200.0,
         "--out", out]
    )
    assert code == 0
    doc = json.loads(open(out).read())
    validate_replay_report(doc)
    assert abs(doc["total"]["cost"] - 200.0) / 200.0 <= 0.01
    assert doc["objective"]["budget"] == 200.0


# ---------------------------------------------------------------------------
# compare


def test_compare_flags_and_outputs(dataset_path, model_path, tmp_path):
    out = str(tmp_path / "cmp.json")
    table = str(tmp_path / "cmp.csv")
    code = run(
        ["compare", "--data", dataset_path, "--model", model_path,
         "--methods", "ue_ub;ue_nub,zie;mcae_nub,zie",
         "--objective", "max_return", "--budget", 200.0,
         "--out", out, "--table", table]
    )
    assert code == 0
    doc = json.loads(open(out).read())
    validate_comparison_report(doc)
    assert set(doc["methods"]) == {"UE&UB", "UE&NUB-Z", "MCAE&NUB-Z"}
    header = open(table).readline().strip().split(",")
    assert "value_delta_pct" in header


def test_compare_infeasible_writes_report_and_exits_3(dataset_path, tmp_path):
    out = str(tmp_path / "cmp.json")
    code = run(
        ["compare", "--data", dataset_path, "--methods", "ue_ub",
         "--objective", "max_return", "--budget", 1e12, "--out", out]
    )
    assert code == 3
    assert json.loads(open(out).read())["infeasible"] is True


# ---------------------------------------------------------------------------
# config files


def make_config(dataset_path, model_path, path, budget=200.0):
    config = RunConfig(
        dataset=dataset_path,
        campaign=Campaign(objective="max_return", budget=budget),
        channels=(
            ChannelSpec(id="spa", mechanism="spa", bidding_mode="uniform", traffic_share=1 / 3),
            ChannelSpec(id="fpa_u", mechanism="fpa", bidding_mode="uniform", traffic_share=1 / 3),
            ChannelSpec(id="fpa_nu", mechanism="fpa", bidding_mode="nonuniform",
                        traffic_share=1 / 3),
        ),
        methods=(("ue_ub", None), ("mcae_nub", "zie")),
        model=model_path,
        output=os.path.dirname(path),
        epochs=4,
    )
    write_run_config(path, config)
    return config


def test_config_round_trip(dataset_path, model_path, tmp_path):
    path = str(tmp_path / "run.ini")
    config = make_config(dataset_path, model_path, path)
    loaded = load_run_config(path)
    assert loaded == config


def test_config_missing_section_rejected(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[paths]\ndataset = x.jsonl\n")
    with pytest.raises(ConfigError):
        load_run_config(str(path))


def test_compare_from_config(dataset_path, model_path, tmp_path):
    ini = str(tmp_path / "run.ini")
    make_config(dataset_path, model_path, ini)
    out = str(tmp_path / "cmp.json")
    assert run(["compare", "--config", ini, "--out", out]) == 0
    doc = json.loads(open(out).read())
    assert set(doc["methods"]) == {"UE&UB", "MCAE&NUB-Z"}


# ---------------------------------------------------------------------------
# sweep


def test_sweep_trend_reported(dataset_path, model_path, tmp_path):
    ini = str(tmp_path / "run.ini")
    make_config(dataset_path, model_path, ini, budget=150.0)
    out = str(tmp_path / "sweep.csv")
    trend = str(tmp_path / "trend.json")
    code = run(
        ["sweep", "--config", ini, "--experiment", "channel_proportions",
         "--grid", "0.2,0.35,0.5", "--out", out, "--trend-out", trend]
    )
    assert code == 0
    doc = json.loads(open(trend).read())
    assert -1.0 <= doc["spearman_rho"] <= 1.0
    assert len(doc["points"]) == 3
    rows = open(out).read().strip().splitlines()
    assert len(rows) == 1 + 3 * 2 * 4  # header + points x methods x (3 channels + total)


def test_sweep_short_grid_trend_fails_before_running(dataset_path, model_path, tmp_path):
    ini = str(tmp_path / "run.ini")
    make_config(dataset_path, model_path, ini, budget=150.0)
    out = str(tmp_path / "sweep.csv")
    code = run(
        ["sweep", "--config", ini, "--experiment", "channel_proportions",
         "--grid", "0.2,0.5", "--out", out, "--trend-out", str(tmp_path / "t.json")]
    )
    assert code == 2
    assert not os.path.exists(out)  # rejected before any replay happened


def test_sweep_short_grid_without_trend_is_fine(dataset_path, model_path, tmp_path):
    ini = str(tmp_path / "run.ini")
    make_config(dataset_path, model_path, ini, budget=150.0)
    out = str(tmp_path / "sweep.csv")
    code = run(
        ["sweep", "--config", ini, "--experiment", "channel_proportions",
         "--grid", "0.2,0.5", "--out", out]
    )
    assert code == 0
    rows = open(out).read().strip().splitlines()
    assert len(rows) == 1 + 2 * 2 * 4


def test_sweep_organic_share_requires_seed(dataset_path, model_path, tmp_path):
    ini = str(tmp_path / "run.ini")
    make_config(dataset_path, model_path, ini)
    code = run(
        ["sweep", "--config", ini, "--experiment", "organic_share",
         "--grid=-1,0,1", "--out", str(tmp_path / "s.csv")]
    )
    assert code == 2


# ---------------------------------------------------------------------------
# console entry point


def test_console_script_runs():
    out = subprocess.run(
        [sys.executable, "-m", "hob.cli", "--help"], capture_output=True, text=True
    )
    assert out.returncode == 0
    assert "datagen" in out.stdout
