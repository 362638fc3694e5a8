"""
Tests for the verify module.
"""

import math

import pytest

from array_pooling.optimal import a2_critical_pair
from array_pooling.schemes import Prevalence
from array_pooling.verify import (
    STEP6_LANDMARKS,
    ProofProbe,
    check_candidate_soundness,
    check_corollary_region,
    check_critical_pair,
    check_critical_q_via_x0,
    check_enumeration_oracle,
    check_g_decreasing_in_q,
    check_half_bound,
    check_q5,
    check_solve_x0,
    check_step6_a,
    check_step6_b,
    check_step6_landmarks,
    check_step6_monotone,
    check_two_critical_points,
    check_x0_decreasing,
    critical_q_via_x0,
    default_step6_grid,
    run_suite,
    solve_x0,
    solve_x0_for_c,
    step6_g,
    step6_h,
    step6_landmarks,
)


def test_shape_checks():
    """Test the monotonicity in q and the bound at q = 1/2."""
    assert check_g_decreasing_in_q().passed
    assert check_half_bound().passed


def test_half_bound_custom_grid():
    """Test the bound at q = 1/2 on a caller-supplied grid."""
    report = check_half_bound([2.0 + 1e-3, 1000.0])
    assert report.passed
    assert report.worst_residual > 0


def test_critical_pair_checks():
    """Test the critical pair, q_5 and the alternative route to q*."""
    assert check_critical_pair().passed
    assert check_q5().passed
    assert check_critical_q_via_x0().passed
    assert critical_q_via_x0() == pytest.approx(a2_critical_pair().q_star, abs=1e-8)


def test_solve_x0():
    """Test the maximiser of the auxiliary function."""
    for q in (0.76, 0.86, 0.99):
        prev = Prevalence.from_q(q)
        x0 = solve_x0(prev)
        c = 1.0 / (2.0 * q)
        assert 0.0 < x0 < q
        assert -math.log(x0) == pytest.approx((1 - c * x0) / (1 - 2 * c * x0), abs=1e-9)
    assert solve_x0_for_c(0.6) > solve_x0_for_c(0.65)
    assert check_solve_x0().passed
    assert check_x0_decreasing().passed


def test_proof_probe():
    """Test the auxiliary quantities at a point of the efficient region."""
    prev = Prevalence.from_q(0.9)
    probe = ProofProbe.at(prev, 5.0, 0.5)
    assert probe.c == pytest.approx(1 / 1.8)
    assert probe.x == pytest.approx(0.9**5)
    assert probe.h_of_x0 >= probe.h_of_x
    assert probe.h_tq == pytest.approx(step6_h(prev, 0.5))


def test_step6_landmarks():
    """Test the landmark values at q = 0.755."""
    for name, value, expected in step6_landmarks():
        assert name in STEP6_LANDMARKS
        assert value == pytest.approx(expected, abs=1e-6)
    assert check_step6_landmarks().passed


def test_step6_signs_on_grid():
    """Test both window ends on the default grid."""
    grid = default_step6_grid()
    assert grid[0] == pytest.approx(0.755)
    assert grid[-1] == pytest.approx(0.999)
    assert grid == sorted(grid)
    assert check_step6_a().passed
    assert check_step6_b().passed
    assert check_step6_monotone().passed
    prev = Prevalence.from_q(0.9)
    assert step6_g(prev, 0.0) < 0
    assert step6_h(prev, 0.0) < 0 < step6_h(prev, 1.0)


def test_step6_b_reports_failure():
    """Test that q below the valid range fails the sign check."""
    assert not check_step6_b([0.6]).passed


def test_corollary_region():
    """Test that the optimum is 5 between q_5 and 0.755."""
    assert check_corollary_region().passed


def test_candidate_soundness():
    """Test the window on random prevalences."""
    report = check_candidate_soundness(samples=200, seed=1)
    assert report.passed
    assert report.worst_residual == 0.0


@pytest.mark.parametrize("q", [0.8, 0.86, 0.9, 0.95, 0.99])
def test_two_critical_points(q):
    """Test that dt/dn has one minimum and one maximum."""
    report = check_two_critical_points(Prevalence.from_q(q))
    assert report.passed
    assert report.worst_residual == 2.0


def test_two_critical_points_outside_region():
    """Test that q below q* fails instead of raising."""
    report = check_two_critical_points(Prevalence.from_q(0.7))
    assert not report.passed
    assert math.isnan(report.worst_residual)


def test_enumeration_oracle():
    """Test the executors against the formulas by exhaustive enumeration."""
    report = check_enumeration_oracle(probabilities=(0.1,), max_cohort=8)
    assert report.passed
    assert report.worst_residual <= 1e-12


def test_run_suite():
    """Test the full suite."""
    reports = run_suite(samples=50, seed=2, include_oracle=False)
    assert all(r.passed for r in reports)
    names = [r.check for r in reports]
    assert "enumeration_oracle" not in names
    assert names.count("two_critical_points") == 5
