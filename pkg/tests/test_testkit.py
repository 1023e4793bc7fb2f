"""Reference oracles: grid argmax, finite differences, exhaustive knapsack."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hob.errors import ConfigError
from hob.landscape import ZieParams
from hob.shading import optimal_bid
from hob.testkit import (
    MckpInstance,
    dual_sweep,
    finite_difference_mc,
    grid_optimal_bid,
    optimal_surplus_baseline,
    solve_mckp_exhaustive,
)


def test_grid_argmax_agrees_with_golden_section():
    params = ZieParams(0.1, 0.5)
    bid, best = grid_optimal_bid(params, 10.0, grid_points=200_000)
    decision = optimal_bid(params, 10.0)
    assert bid == pytest.approx(decision.bid, abs=10.0 / 200_000 * 2)
    assert best == pytest.approx(decision.expected_surplus, rel=1e-6)


def test_finite_difference_on_analytic_curve():
    # value = eta, cost = eta^2  ->  dCost/dValue = 2 eta
    curve = lambda eta: (eta, eta * eta)
    assert finite_difference_mc(curve, 1.3, 1e-5) == pytest.approx(2.6, rel=1e-6)


def test_surplus_baseline_closed_form():
    values = np.array([1.0, 2.0, 0.5])
    prices = np.array([0.5, 5.0, 0.0])
    # keep iff eta*v >= w, pay w
    assert optimal_surplus_baseline(values, prices, eta=1.0) == pytest.approx(
        (1.0 - 0.5) + 0.0 + 0.5
    )
    assert optimal_surplus_baseline(values, prices, eta=3.0) == pytest.approx(
        (3.0 - 0.5) + (6.0 - 5.0) + 1.5
    )


def hand_instance():
    # 3 impressions x 3 choices (first choice is always "skip")
    values = np.array(
        [
            [0.0, 4.0, 6.0],
            [0.0, 3.0, 5.0],
            [0.0, 2.0, 2.5],
        ]
    )
    costs = np.array(
        [
            [0.0, 2.0, 4.0],
            [0.0, 2.0, 4.0],
            [0.0, 1.0, 3.0],
        ]
    )
    return MckpInstance(values=values, costs=costs, budget=7.0)


def test_exhaustive_on_hand_instance():
    sol = solve_mckp_exhaustive(hand_instance())
    assert sol.feasible
    # two optima tie at 11 within budget: (2,1,1) and (1,2,1)
    assert sol.value == pytest.approx(11.0)
    assert sol.cost <= 7.0 + 1e-12
    assert sol.assignment in ((2, 1, 1), (1, 2, 1))


def test_zero_budget_means_all_skip():
    inst = hand_instance()
    sol = solve_mckp_exhaustive(MckpInstance(inst.values, inst.costs, budget=0.0))
    assert sol.assignment == (0, 0, 0)
    assert sol.value == 0.0


def test_dual_sweep_feasible_and_weakly_dominated():
    inst = hand_instance()
    primal = solve_mckp_exhaustive(inst)
    dual = dual_sweep(inst, np.geomspace(1e-3, 1e3, 200))
    assert dual.feasible
    assert dual.cost <= inst.budget + 1e-9
    assert dual.value <= primal.value + 1e-9


def test_oversized_instance_rejected():
    values = np.zeros((40, 6))
    with pytest.raises(ValueError):
        solve_mckp_exhaustive(MckpInstance(values, values, budget=1.0))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_weak_duality_random_instances(seed):
    rng = np.random.default_rng(seed)
    rows, choices = 6, 4
    costs = rng.uniform(0.2, 2.0, (rows, choices))
    values = rng.uniform(0.1, 3.0, (rows, choices))
    costs[:, 0] = 0.0
    values[:, 0] = 0.0
    budget = float(rng.uniform(0.2, 0.9) * costs.max(axis=1).sum())
    inst = MckpInstance(values=values, costs=costs, budget=budget)
    primal = solve_mckp_exhaustive(inst)
    dual = dual_sweep(inst, np.geomspace(1e-3, 1e3, 60))
    assert dual.cost <= budget + 1e-9
    assert dual.value <= primal.value + 1e-9
