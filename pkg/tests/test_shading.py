"""Single-auction shading: golden-section optimum vs first-order-condition oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from hob.landscape import WinModel, ZieParams, fit_baseline
from hob.shading import (
    DEFAULT_N_ITER,
    ONLINE_N_ITER,
    dual_decision_rule,
    model_grid_bids,
    optimal_bid,
    optimal_bids,
    surplus,
    zero_bid_test,
)


def foc_root(pi, lam, value):
    """Interior optimum solves (V-x)(1-pi)lam e^{-lam x} = 1-(1-pi)e^{-lam x}."""

    def foc(x):
        win = 1.0 - (1.0 - pi) * np.exp(-lam * x)
        return (value - x) * (1.0 - pi) * lam * np.exp(-lam * x) - win

    return brentq(foc, 1e-12, value, xtol=1e-12)


def test_reference_case_matches_foc():
    decision = optimal_bid(ZieParams(0.1, 0.5), 10.0)
    root = foc_root(0.1, 0.5, 10.0)
    assert decision.interior
    assert decision.bid == pytest.approx(root, abs=5e-4)
    assert decision.bid == pytest.approx(2.834, abs=2e-3)
    assert decision.win_prob == pytest.approx(1.0 - 0.9 * np.exp(-0.5 * decision.bid))
    assert decision.expected_surplus == pytest.approx((10.0 - decision.bid) * decision.win_prob)


def test_interior_condition_is_strict_inequality():
    # True iff (1-pi)(1+lam V) > 1, i.e. an interior maximizer exists
    assert not zero_bid_test(ZieParams(0.9, 0.01), 5.0)  # 0.1 * 1.05 < 1 -> stay at zero
    assert zero_bid_test(ZieParams(0.1, 0.5), 10.0)
    # at exactly 1 the zero bid is weakly best, so the test stays False
    pi = 0.5
    lam = 1.0
    value = (1.0 / (1.0 - pi) - 1.0) / lam
    assert not zero_bid_test(ZieParams(pi, lam), value)


def test_zero_bid_decision_fields():
    decision = optimal_bid(ZieParams(0.9, 0.01), 5.0)
    assert decision.bid == 0.0
    assert not decision.interior
    assert decision.win_prob == pytest.approx(0.9)
    assert decision.expected_surplus == pytest.approx(5.0 * 0.9)


def test_vectorized_matches_scalar(rng):
    pi = rng.uniform(0, 0.9, 64)
    lam = rng.uniform(0.1, 5, 64)
    values = rng.uniform(0.01, 30, 64)
    batch = optimal_bids(pi, lam, values)
    singles = [optimal_bid(ZieParams(p, l), v).bid for p, l, v in zip(pi, lam, values)]
    np.testing.assert_allclose(batch, singles, atol=1e-9)


def test_surplus_formula():
    params = ZieParams(0.25, 2.0)
    assert surplus(params, 8.0, 1.0) == pytest.approx(
        (8.0 - 1.0) * (1.0 - 0.75 * np.exp(-2.0))
    )


def test_more_iterations_never_hurt():
    params = ZieParams(0.1, 0.5)
    coarse = optimal_bid(params, 10.0, n_iter=ONLINE_N_ITER)
    fine = optimal_bid(params, 10.0, n_iter=DEFAULT_N_ITER)
    assert fine.expected_surplus >= coarse.expected_surplus - 1e-9
    assert abs(fine.bid - coarse.bid) < 0.05


@settings(max_examples=80, deadline=None)
@given(pi=st.floats(0.0, 0.95), lam=st.floats(0.05, 8.0), value=st.floats(0.01, 60.0))
def test_interior_flag_agrees_with_closed_form(pi, lam, value):
    decision = optimal_bid(ZieParams(pi, lam), value)
    assert decision.interior == ((1.0 - pi) * (1.0 + lam * value) > 1.0)
    if not decision.interior:
        assert decision.bid == 0.0


@settings(max_examples=50, deadline=None)
@given(
    pi=st.floats(0.0, 0.9),
    lam=st.floats(0.1, 5.0),
    value=st.floats(0.1, 40.0),
    probe=st.floats(0.0, 1.0),
)
def test_candidate_bids_never_beat_golden(pi, lam, value, probe):
    params = ZieParams(pi, lam)
    decision = optimal_bid(params, value)
    assert surplus(params, value, probe * value) <= decision.expected_surplus + 1e-7 * (1 + value)


def test_model_grid_bids_tracks_golden_for_zie(small_dataset):
    model = fit_baseline("zie", small_dataset.winning_prices)
    values = np.linspace(0.05, 3.0, 40)
    grid = model_grid_bids(model, values, points=2048)
    pi, lam = model.params
    exact = optimal_bids(np.full_like(values, pi), np.full_like(values, lam), values)
    assert np.max(np.abs(grid - exact)) < 3.0 / 2048 * 4


def test_model_grid_bids_nonparametric_kind(small_dataset):
    model = fit_baseline("gamma", small_dataset.winning_prices)
    values = np.linspace(0.05, 3.0, 16)
    bids = model_grid_bids(model, values, points=512)
    assert bids.shape == values.shape
    assert np.all(bids >= 0) and np.all(bids <= values + 1e-12)


def test_dual_decision_rule_picks_best_net_value():
    values = np.array([0.0, 1.0, 3.0])
    costs = np.array([0.0, 1.0, 2.0])
    # eta converts cost into value units: choose argmax(v - c/eta)
    assert dual_decision_rule(values, costs, eta=1.0) == 2
    assert dual_decision_rule(values, costs, eta=0.4) == 0
    assert dual_decision_rule(values, np.array([0.0, 10.0, 20.0]), eta=1.0) == 0
