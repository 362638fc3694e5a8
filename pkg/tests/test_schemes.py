"""
Tests for the schemes module.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from array_pooling.exceptions import DomainError
from array_pooling.schemes import (
    Prevalence,
    Scale,
    Scheme,
    SchemeSize,
    a2_excess,
    a2_excess_dn,
    a2_excess_dq,
    a2_expected_total,
    a2_t,
    a2_t_array,
    dorfman_t,
    dorfman_t_array,
    evaluate,
    gain,
    halving_expected_total,
    halving_t,
    halving_t_continuous,
    halving_t_upto,
    halving_unrounded_size,
    sterrett_expected_total,
    sterrett_t,
    sterrett_t_continuous,
    sterrett_t_upto,
    tests_per_person as per_person,
)


@pytest.fixture
def prev():
    """Prevalence 0.1."""
    return Prevalence(0.1)


def test_prevalence_validation():
    """Test that prevalences outside (0, 1) are rejected."""
    for p in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            Prevalence(p)
    with pytest.raises(DomainError):
        Prevalence(0.2, 0.5)
    with pytest.raises(DomainError):
        Prevalence.from_q(1.0)


def test_prevalence_from_q(prev):
    """Test building a prevalence from q."""
    other = Prevalence.from_q(0.9)
    assert other.q == 0.9
    assert other.p == pytest.approx(prev.p)
    assert other.power(2.0) == pytest.approx(0.81)


def test_scheme_size_validation():
    """Test size bounds and integrality."""
    with pytest.raises(DomainError):
        SchemeSize(Scheme.A2, 1)
    with pytest.raises(DomainError):
        SchemeSize(Scheme.DORFMAN, 0)
    with pytest.raises(DomainError):
        SchemeSize(Scheme.HALVING, 2.5)
    assert SchemeSize(Scheme.HALVING, 2.5, Scale.CONTINUOUS).size == 2.5
    assert SchemeSize(Scheme.A2, 5).cohort_size == 25.0
    assert SchemeSize(Scheme.STERRETT, 7).cohort_size == 7.0


def test_a2_reference_value(prev):
    """Test the A2 cost at q = 0.9, n = 5."""
    assert a2_t(prev, 5) == pytest.approx(0.606440, abs=1e-5)
    assert a2_excess(prev, 5) == pytest.approx(0.606440 - 1.0, abs=1e-5)


def test_a2_limits():
    """Test the A2 excess at q close to 0 and 1."""
    for n in (2.5, 4.0, 10.0):
        assert a2_excess(Prevalence.from_q(1e-9), n) == pytest.approx(2.0 / n, abs=1e-6)
        assert a2_excess(Prevalence.from_q(1.0 - 1e-9), n) == pytest.approx(
            2.0 / n - 1.0, abs=1e-6
        )


def test_a2_rejects_small_orders(prev):
    """Test that orders below 2 are rejected."""
    with pytest.raises(DomainError):
        a2_t(prev, 1.5)
    with pytest.raises(DomainError):
        a2_expected_total(prev, 4.5)


def test_a2_expected_total_consistent(prev):
    """Test that the expected total equals n^2 t."""
    for n in (2, 3, 7, 12):
        assert a2_expected_total(prev, n) == pytest.approx(n * n * a2_t(prev, n))


def test_a2_partial_derivatives(prev):
    """Test the analytic partial derivatives against central differences."""
    h = 1e-6
    for n in (2.5, 4.0, 6.0):
        numeric_n = (a2_excess(prev, n + h) - a2_excess(prev, n - h)) / (2 * h)
        assert a2_excess_dn(prev, n) == pytest.approx(numeric_n, abs=1e-7)
        upper, lower = Prevalence.from_q(0.9 + h), Prevalence.from_q(0.9 - h)
        numeric_q = (a2_excess(upper, n) - a2_excess(lower, n)) / (2 * h)
        assert a2_excess_dq(prev, n) == pytest.approx(numeric_q, abs=1e-6)


def test_a2_array_matches_scalar(prev):
    """Test the vectorised A2 cost."""
    orders = np.arange(2, 20)
    expected = [a2_t(prev, int(n)) for n in orders]
    assert np.allclose(a2_t_array(prev, orders), expected, rtol=0, atol=1e-14)


def test_dorfman_reference_value():
    """Test the Dorfman cost at q = 0.99, N = 11."""
    assert dorfman_t(Prevalence(0.01), 11) == pytest.approx(0.195570, abs=1e-5)
    assert dorfman_t(Prevalence(0.01), 1) == pytest.approx(2.0 - 0.99)
    with pytest.raises(DomainError):
        dorfman_t(Prevalence(0.01), 0.5)


def test_dorfman_array_matches_scalar():
    """Test the vectorised Dorfman cost."""
    prev = Prevalence(0.03)
    sizes = np.arange(1, 30)
    expected = [dorfman_t(prev, int(N)) for N in sizes]
    assert np.allclose(dorfman_t_array(prev, sizes), expected, rtol=0, atol=1e-14)


def test_sterrett_small_pools(prev):
    """Test Sterrett's expected totals for the smallest pools."""
    assert sterrett_expected_total(prev, 1) == pytest.approx(1.1)
    assert sterrett_expected_total(prev, 2) == pytest.approx(1.29)
    assert sterrett_expected_total(prev, 3) == pytest.approx(1.661)
    assert sterrett_t(prev, 3) == pytest.approx(1.661 / 3)


def test_sterrett_continuous_matches_recursion(prev):
    """Test that the closed form agrees with the recursion at integers >= 2."""
    for p in (0.01, 0.1, 0.3):
        other = Prevalence(p)
        for N in (2, 3, 5, 10, 25):
            assert sterrett_t_continuous(other, N) == pytest.approx(
                sterrett_t(other, N), abs=1e-12
            )


def test_sterrett_upto_matches_scalar():
    """Test the Sterrett cost table."""
    prev = Prevalence(0.05)
    table = sterrett_t_upto(prev, 40)
    assert table.shape == (40,)
    for N in (1, 2, 9, 40):
        assert table[N - 1] == pytest.approx(sterrett_t(prev, N), abs=1e-12)


def test_halving_recursion(prev):
    """Test the Halving totals for the smallest pools."""
    assert halving_expected_total(prev, 1) == 1.0
    assert halving_expected_total(prev, 2) == pytest.approx(3.0 - 2.0 * 0.81)
    expected_3 = 1.0 + (3.0 - 2.0 * 0.81) + 1.0 - 2.0 * 0.729
    assert halving_expected_total(prev, 3) == pytest.approx(expected_3)
    assert halving_t(prev, 3) == pytest.approx(expected_3 / 3)


def test_halving_upto_matches_scalar():
    """Test the Halving cost table."""
    prev = Prevalence(0.02)
    table = halving_t_upto(prev, 64)
    for N in (1, 2, 5, 31, 64):
        assert table[N - 1] == pytest.approx(halving_t(prev, N), abs=1e-12)


def test_halving_continuous_form():
    """Test the leading-order Halving cost and its unrounded size."""
    prev = Prevalence(0.05)
    N_star = halving_unrounded_size(prev)
    assert N_star == pytest.approx(np.log(2.0) / (-2.0 * np.log(0.95)))
    assert halving_t_continuous(prev, 8.0) == pytest.approx(1.0 / 8.0 + 2 * 0.05 * 3.0)
    with pytest.raises(DomainError):
        halving_t_continuous(prev, 0.0)


def test_tests_per_person_dispatch(prev):
    """Test dispatch on scheme and scale."""
    assert per_person(prev, SchemeSize(Scheme.A2, 5)) == a2_t(prev, 5)
    assert per_person(prev, SchemeSize(Scheme.DORFMAN, 4)) == dorfman_t(prev, 4)
    assert per_person(prev, SchemeSize(Scheme.STERRETT, 4)) == sterrett_t(prev, 4)
    assert per_person(prev, SchemeSize(Scheme.HALVING, 4)) == halving_t(prev, 4)
    continuous = SchemeSize(Scheme.STERRETT, 4.5, Scale.CONTINUOUS)
    assert per_person(prev, continuous) == sterrett_t_continuous(prev, 4.5)


def test_gain_and_evaluate(prev):
    """Test gain and the evaluation record."""
    config = SchemeSize(Scheme.A2, 5)
    point = evaluate(prev, config)
    assert point.t == a2_t(prev, 5)
    assert point.g == pytest.approx(point.t - 1.0)
    assert point.gain == pytest.approx(gain(prev, config))
    assert point.expected_total == pytest.approx(a2_expected_total(prev, 5))


prevalences = st.floats(min_value=0.005, max_value=0.5).map(Prevalence)


@settings(max_examples=100, deadline=None)
@given(prevalences, st.integers(min_value=2, max_value=60))
def test_sterrett_closed_form_identity(prev, N):
    """Test the Sterrett closed form against the dynamic program on random prevalences."""
    assert sterrett_t_continuous(prev, N) == pytest.approx(sterrett_t(prev, N), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(prevalences, st.integers(min_value=2, max_value=40))
def test_cost_identities(prev, size):
    """Test totals, tables and gains against the per-person costs."""
    assert a2_expected_total(prev, size) == pytest.approx(size * size * a2_t(prev, size))
    assert halving_t_upto(prev, size)[-1] == pytest.approx(halving_t(prev, size), abs=1e-12)
    for scheme in Scheme:
        config = SchemeSize(scheme, size)
        t = per_person(prev, config)
        assert gain(prev, config) == pytest.approx(1.0 - t)
        assert t >= 1.0 / (size * size if scheme is Scheme.A2 else size) - 1e-12


@pytest.mark.parametrize(
    "q,N_max",
    [(0.9, 64), (0.95, 64), (0.99, 64), (0.75, 12), (0.8, 12)],
)
def test_sterrett_dominates_dorfman(q, N_max):
    """Test that Sterrett needs no more tests than Dorfman on the same pool."""
    prev = Prevalence.from_q(q)
    for N in range(1, N_max + 1):
        assert sterrett_t(prev, N) <= dorfman_t(prev, N) + 1e-12


def test_sterrett_dominance_reverses_for_large_pools():
    """Test that Dorfman wins for a large pool at q = 0.75."""
    prev = Prevalence.from_q(0.75)
    assert sterrett_expected_total(prev, 13) > 13 * dorfman_t(prev, 13)
    assert sterrett_expected_total(prev, 64) == pytest.approx(77.5, abs=1e-6)
    assert 64 * dorfman_t(prev, 64) == pytest.approx(65.0, abs=1e-6)
