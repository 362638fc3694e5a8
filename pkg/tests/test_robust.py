"""
Tests for the robust module.
"""

import pytest

from array_pooling.exceptions import RegionError
from array_pooling.optimal import a2_reference_order, q_five
from array_pooling.robust import (
    Criterion,
    LossSpec,
    PriorSpec,
    bayes_choice,
    bayes_criterion,
    calibrate_q_max,
    loss,
    minimax_choice,
    minimax_values,
    n_opt_breakpoints,
    q_grid,
)
from array_pooling.schemes import Prevalence, a2_t


def test_loss_is_nonnegative():
    """Test that no order beats the reference order."""
    for q in (0.76, 0.8, 0.9, 0.99, 0.999):
        prev = Prevalence.from_q(q)
        k = a2_reference_order(prev)
        assert loss(prev, k) == pytest.approx(0.0, abs=1e-15)
        for n in (5, 8, 12, 20, 40):
            assert loss(prev, n) >= -1e-15


def test_loss_region():
    """Test that the default reference rule refuses q <= q_5."""
    with pytest.raises(RegionError):
        loss(Prevalence.from_q(0.7), 5)


def test_loss_custom_reference():
    """Test a loss measured against a fixed reference order."""
    spec = LossSpec(reference=lambda prev: 4)
    prev = Prevalence.from_q(0.7)
    assert loss(prev, 6, spec) == pytest.approx(a2_t(prev, 6) - a2_t(prev, 4))


def test_q_grid():
    """Test the minimax grid construction."""
    grid = q_grid(0.996, 1e-3)
    assert grid[0] == pytest.approx(q_five() + 1e-4)
    assert grid[-1] == 0.996
    assert all(b > a for a, b in zip(grid, grid[1:]))
    with pytest.raises(ValueError):
        q_grid(0.996, 0.0)
    with pytest.raises(ValueError):
        q_grid(0.7, 1e-3)
    with pytest.raises(ValueError):
        q_grid(1.0, 1e-3)


@pytest.mark.parametrize(
    "q_max,expected",
    [(0.76, 5), (0.995, 10), (0.996, 10), (0.998, 11)],
)
def test_minimax_choice(q_max, expected):
    """Test the minimax order for several upper grid ends."""
    choice = minimax_choice(q_grid(q_max, 1e-3), range(5, 65))
    assert choice.chosen_n == expected
    assert choice.criterion is Criterion.MINIMAX
    assert choice.cohort_size == expected * expected
    assert choice.criterion_value == min(choice.values.values())


def test_minimax_values_cover_range():
    """Test that every order receives a worst-case loss."""
    values = minimax_values(q_grid(0.9, 1e-2), range(5, 15))
    assert sorted(values) == list(range(5, 15))
    assert all(v >= -1e-15 for v in values.values())


def test_minimax_validation():
    """Test empty inputs."""
    with pytest.raises(ValueError):
        minimax_choice([], range(5, 10))
    with pytest.raises(ValueError):
        minimax_choice([0.9], [])


def test_calibrate_q_max_reports_missing_order():
    """Test that no upper grid end in the band yields order 12."""
    result = calibrate_q_max((0.995, 0.998), 1e-4, target=12)
    assert not result.found
    assert result.q_max is None
    assert len(result.choices) == 31
    orders = [n for _, n in result.choices]
    assert set(orders) <= {10, 11}
    assert orders[0] == 10
    assert orders[-1] == 11
    assert orders == sorted(orders)


def test_calibrate_q_max_found():
    """Test that the first upper end giving the target order is returned."""
    result = calibrate_q_max((0.995, 0.998), 1e-3, target=11)
    assert result.found
    assert result.q_max == 0.998
    assert [n for _, n in result.choices] == [10, 10, 10, 11]


def test_calibrate_q_max_not_found():
    """Test a band that never yields the target order."""
    result = calibrate_q_max((0.995, 0.9952), 1e-4, target=30)
    assert not result.found
    assert result.q_max is None
    assert len(result.choices) == 3


def test_prior_validation():
    """Test the prior support checks."""
    with pytest.raises(ValueError):
        PriorSpec(0.9, 0.8)
    with pytest.raises(ValueError):
        PriorSpec(0.9, 1.1)
    assert PriorSpec(0.8, 1.0).density == pytest.approx(5.0)


def test_breakpoints_are_order_changes():
    """Test that each breakpoint separates consecutive optimal orders."""
    breaks = n_opt_breakpoints(0.8, 0.95)
    assert breaks
    qs = [q for q, _, _ in breaks]
    assert qs == sorted(qs)
    for q, k, k_next in breaks:
        assert k_next == k + 1
        prev = Prevalence.from_q(q)
        assert a2_t(prev, k) == pytest.approx(a2_t(prev, k_next), abs=1e-12)
    assert breaks[0][1] == a2_reference_order(Prevalence.from_q(0.8))
    assert breaks[-1][2] == a2_reference_order(Prevalence.from_q(0.95))


def test_bayes_criterion_region():
    """Test that the prior must lie above q_5."""
    with pytest.raises(RegionError):
        bayes_criterion(PriorSpec(0.7, 1.0), 7)


def test_bayes_criterion_nonnegative():
    """Test that the expected squared loss is positive away from the optimum."""
    prior = PriorSpec(0.8, 0.9)
    assert bayes_criterion(prior, 20) > bayes_criterion(prior, 6) >= 0.0


def test_bayes_choice_default_prior():
    """Test the Bayesian order under the uniform prior on (q_5, 1)."""
    choice = bayes_choice(PriorSpec(), range(5, 41))
    assert choice.chosen_n == 7
    assert choice.criterion is Criterion.BAYES_SQ
    assert choice.criterion_value == min(choice.values.values())


def test_bayes_choice_linear_loss():
    """Test the unsquared Bayesian criterion."""
    choice = bayes_choice(PriorSpec(), range(5, 21), squared=False)
    assert choice.criterion is Criterion.BAYES_LINEAR
    assert 5 <= choice.chosen_n <= 20


def test_minimax_refinement_never_lowers_the_sup():
    """Test that a finer grid with the same ends can only raise each worst loss."""
    coarse = minimax_values(q_grid(0.996, 1e-3), range(5, 21))
    fine = minimax_values(q_grid(0.996, 5e-4), range(5, 21))
    for n, value in coarse.items():
        assert fine[n] >= value - 1e-12


def test_minimax_choice_is_local_optimum():
    """Test that both neighbouring orders have a larger worst loss."""
    choice = minimax_choice(q_grid(0.996, 1e-3), range(5, 65))
    n = choice.chosen_n
    assert choice.values[n - 1] > choice.criterion_value
    assert choice.values[n + 1] > choice.criterion_value


def test_bayes_choice_stable_under_quad_tol():
    """Test that a tighter quadrature tolerance keeps the chosen order."""
    orders = range(5, 13)
    coarse = bayes_choice(PriorSpec(), orders, quad_tol=1e-8)
    fine = bayes_choice(PriorSpec(), orders, quad_tol=1e-10)
    assert coarse.chosen_n == fine.chosen_n == 7
    assert fine.criterion_value == pytest.approx(coarse.criterion_value, rel=1e-4)
