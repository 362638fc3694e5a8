"""
Optimal configurations: the A2 critical pair, efficiency interval, continuous and
integer optima, the comparison schemes' optima and the gain comparisons between them.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from array_pooling.exceptions import DomainError, NoSignChangeError, RegionError
from array_pooling.numerics import Bracket, Tolerance, find_root, minimize_unimodal
from array_pooling.schemes import (
    Prevalence,
    Scheme,
    a2_excess,
    a2_excess_dn,
    a2_t,
    a2_t_array,
    dorfman_t,
    dorfman_t_array,
    halving_t,
    halving_t_continuous,
    halving_t_upto,
    halving_unrounded_size,
    sterrett_t,
    sterrett_t_continuous,
    sterrett_t_upto,
)

logger = logging.getLogger(__name__)

# largest prevalence (rounded 1 - q_5) where an integer array still beats individual testing
P_CAP = 0.249790

STERRETT_P_LIMIT = (3.0 - math.sqrt(5.0)) / 2.0

_ROOT_TOL = Tolerance()
_GAIN_TOL = Tolerance(abs_x=1e-10)


@dataclass(frozen=True)
class CriticalPair:
    """Lowest point ``(q*, n*)`` of the curve ``n -> q_n``."""

    q_star: float
    n_star: float
    residual_value: float
    residual_slope: float


@dataclass(frozen=True)
class EfficiencyInterval:
    """Array orders ``(n_lower, n_upper)`` where A2 beats individual testing."""

    n_lower: float
    n_upper: float

    def __contains__(self, n: float) -> bool:
        return self.n_lower < n < self.n_upper


def window_base(p: float) -> float:
    """Centre expression ``p^(-2/3) + p^(-1/3)/2 + 0.2 + 3p^2`` of the A2 window."""
    cube_root = p ** (1.0 / 3.0)
    return 1.0 / (cube_root * cube_root) + 0.5 / cube_root + 0.2 + 3.0 * p * p


@dataclass(frozen=True)
class CandidateWindow:
    """Three consecutive orders holding the integer A2 optimum."""

    base: float
    candidates: Tuple[int, int, int]
    offset_t: Optional[float] = None

    @classmethod
    def for_prevalence(
        cls, prev: Prevalence, n_min: Optional[float] = None
    ) -> "CandidateWindow":
        base = window_base(prev.p)
        low = int(math.floor(base))
        offset = None if n_min is None else n_min - base
        return cls(base=base, candidates=(low, low + 1, low + 2), offset_t=offset)

    def order_at(self, t: float) -> float:
        """Return ``n(q, t) = base + t``."""
        return self.base + t

    def contains_minimizer(self, n_min: float) -> bool:
        return self.base <= n_min <= self.base + 1.0


@dataclass(frozen=True)
class OptimalConfiguration:
    """Continuous and integer optima of one scheme at one prevalence."""

    scheme: Scheme
    continuous_opt: Optional[Tuple[float, float]]
    integer_opt: Tuple[int, float]
    candidates: Tuple[int, ...]
    efficiency: Optional[EfficiencyInterval] = None
    in_candidates: bool = True
    scan_opt: Optional[Tuple[int, float]] = None
    individual_testing_preferred: bool = False
    offset_t: Optional[float] = None
    reference_band: Optional[Tuple[float, float]] = None

    @property
    def size(self) -> int:
        return self.integer_opt[0]


def _argmin(sizes: Sequence[int], cost: Callable[[int], float]) -> Tuple[int, float]:
    """Smallest-cost size; ties go to the smaller size."""
    best: Optional[Tuple[int, float]] = None
    for size in sorted(set(sizes)):
        value = cost(size)
        if best is None or value < best[1]:
            best = (size, value)
    assert best is not None
    return best


def _scan_argmin(sizes: np.ndarray, values: np.ndarray) -> Tuple[int, float]:
    # np.argmin returns the first minimum, i.e. the smaller size on ties
    idx = int(np.argmin(values))
    return int(sizes[idx]), float(values[idx])


def _linear_cap(prev: Prevalence) -> int:
    return int(math.ceil(8.0 / prev.p))


def _reconcile(
    scheme: Scheme,
    prev: Prevalence,
    candidate_opt: Tuple[int, float],
    scan_opt: Optional[Tuple[int, float]],
    candidates: Sequence[int],
) -> Tuple[Tuple[int, float], bool]:
    if scan_opt is None:
        return candidate_opt, True
    inside = scan_opt[0] in candidates or scan_opt[1] >= candidate_opt[1] - 1e-14
    if not inside:
        logger.warning(
            f"{scheme.value}: exhaustive optimum N={scan_opt[0]} (t={scan_opt[1]:.6f}) lies "
            f"outside candidates {list(candidates)} at p={prev.p}"
        )
        return scan_opt, False
    return candidate_opt, True


@lru_cache(maxsize=4096)
def a2_q_n(n: float) -> float:
    """Prevalence complement at which an ``n x n`` array ties with individual testing.

    :param n: Array order, ``n > 2``.
    :return: The unique ``q`` in (0, 1) with ``g(q, n) = 0``.
    :raises DomainError: If ``n <= 2``.
    """
    if not n > 2:
        raise DomainError(f"q_n is defined for n > 2, got {n}")

    def excess(q: float) -> float:
        return a2_excess(Prevalence.from_q(q), n)

    return find_root(excess, Bracket.around(excess, 0.5, 1.0 - 1e-15), _ROOT_TOL)


@lru_cache(maxsize=1)
def q_five() -> float:
    """``q_5``: below it no integer array order beats individual testing."""
    return a2_q_n(5.0)


def q_n_curve(orders: Sequence[float]) -> List[Tuple[float, float]]:
    """Sample the curve ``n -> q_n``."""
    return [(float(n), a2_q_n(float(n))) for n in orders]


def _slope_at_q_n(n: float) -> float:
    return a2_excess_dn(Prevalence.from_q(a2_q_n(n)), n)


@lru_cache(maxsize=1)
def a2_critical_pair() -> CriticalPair:
    """Locate the minimum of ``n -> q_n``.

    A golden-section search gives a first estimate that is then polished by solving
    ``dg/dn(q_n, n) = 0``.

    :return: Critical pair with the residuals of its two defining equations.
    :raises ConvergenceError: If either stage fails to converge.
    """
    n_star, _ = minimize_unimodal(a2_q_n, 2.5, 10.0, Tolerance(abs_x=1e-10))
    lo, hi = max(2.5, n_star - 0.5), n_star + 0.5
    try:
        n_star = find_root(_slope_at_q_n, Bracket.around(_slope_at_q_n, lo, hi), _ROOT_TOL)
    except NoSignChangeError:
        logger.warning("Slope polish skipped; keeping the golden-section estimate")
    q_star = a2_q_n(n_star)

    y = q_star ** (n_star - 1.0)
    residual_value = n_star * q_star**n_star * (1.0 - y / 2.0) - 1.0
    residual_slope = n_star * math.log(q_star) + (1.0 - y / 2.0) / (1.0 - y)
    logger.debug(f"Critical pair q*={q_star!r}, n*={n_star!r}")
    return CriticalPair(q_star, n_star, residual_value, residual_slope)


def _require_efficient_region(prev: Prevalence) -> CriticalPair:
    pair = a2_critical_pair()
    if prev.q <= pair.q_star:
        raise RegionError(
            f"A2 never beats individual testing for q <= q* = {pair.q_star:.6f} (q={prev.q})"
        )
    return pair


def a2_efficiency_interval(prev: Prevalence) -> EfficiencyInterval:
    """Array orders where A2 needs fewer tests than individual testing.

    :param prev: Prevalence with ``q > q*``.
    :return: The two roots of ``n -> g(q, n)`` on (2, inf).
    :raises RegionError: If ``q <= q*``.
    """
    pair = _require_efficient_region(prev)

    def excess(n: float) -> float:
        return a2_excess(prev, n)

    n_lower = find_root(excess, Bracket.around(excess, 2.0, pair.n_star), _ROOT_TOL)

    n_hi = 2.0 * pair.n_star
    for _ in range(200):
        if excess(n_hi) > 0:
            break
        n_hi *= 2.0
    n_upper = find_root(excess, Bracket.around(excess, pair.n_star, n_hi), _ROOT_TOL)
    return EfficiencyInterval(n_lower, n_upper)


def _polish_stationary(
    prev: Prevalence, estimate: float, lo: float, hi: float
) -> float:
    def slope(n: float) -> float:
        return a2_excess_dn(prev, n)

    width = 1e-3 * estimate + 1e-6
    a, b = max(lo, estimate - width), min(hi, estimate + width)
    for a_, b_ in ((a, b), (lo, hi)):
        try:
            return find_root(slope, Bracket.around(slope, a_, b_), _ROOT_TOL)
        except NoSignChangeError:
            continue
    return estimate


def a2_continuous_minimizer(prev: Prevalence) -> Tuple[float, float]:
    """Real array order minimising ``a2_t``.

    :param prev: Prevalence with ``q > q*``.
    :return: Tuple ``(n_min, t_min)``.
    :raises RegionError: If ``q <= q*``.
    """
    interval = a2_efficiency_interval(prev)

    def cost(n: float) -> float:
        return a2_t(prev, n)

    n_min, _ = minimize_unimodal(cost, interval.n_lower, interval.n_upper, _ROOT_TOL)
    n_min = _polish_stationary(prev, n_min, interval.n_lower, interval.n_upper)

    if prev.q >= 0.755:
        window = CandidateWindow.for_prevalence(prev)
        if not window.contains_minimizer(n_min):
            logger.warning(
                f"Continuous minimizer {n_min:.6f} outside [{window.base:.6f}, "
                f"{window.base + 1:.6f}] at q={prev.q}"
            )
    return n_min, a2_t(prev, n_min)


def a2_continuous_maximizer(prev: Prevalence) -> Tuple[float, float]:
    """Real array order maximising ``a2_t`` beyond the efficiency interval.

    :param prev: Prevalence with ``q > q*``.
    :return: Tuple ``(n_max, t_max)``.
    :raises RegionError: If ``q <= q*``.
    """
    interval = a2_efficiency_interval(prev)
    n_cap = 2.0 * interval.n_upper
    while a2_excess_dn(prev, n_cap) >= 0:
        n_cap *= 2.0

    n_max, _ = minimize_unimodal(lambda n: -a2_t(prev, n), interval.n_upper, n_cap, _ROOT_TOL)
    n_max = _polish_stationary(prev, n_max, interval.n_upper, n_cap)
    return n_max, a2_t(prev, n_max)


def a2_reference_order(prev: Prevalence) -> int:
    """Integer A2 optimum read off the candidate window.

    :param prev: Prevalence with ``q > q_5``.
    :return: The cheapest of the three window orders, ties to the smaller one.
    :raises RegionError: If ``q <= q_5``.
    """
    if prev.q <= q_five():
        raise RegionError(f"The candidate window needs q > q_5 = {q_five():.9f}, got q={prev.q}")
    window = CandidateWindow.for_prevalence(prev)
    return _argmin(window.candidates, lambda n: a2_t(prev, n))[0]


def a2_scan_cap(prev: Prevalence) -> int:
    return max(64, int(math.ceil(4.0 * (window_base(prev.p) + 2.0))))


def a2_integer_optimum(prev: Prevalence, exhaustive: bool = False) -> OptimalConfiguration:
    """Integer array order minimising ``a2_t``.

    For ``q > q_5`` the three-element window is evaluated directly; otherwise, or when
    ``exhaustive`` is set, all orders ``2..n_cap`` are scanned and both results are
    reconciled.

    :param prev: Prevalence.
    :param exhaustive: Also run the exhaustive scan.
    :return: Optimal configuration; ``individual_testing_preferred`` is set when no
        order beats individual testing.
    """
    window = CandidateWindow.for_prevalence(prev)
    fast: Optional[Tuple[int, float]] = None
    if prev.q > q_five():
        n_ref = a2_reference_order(prev)
        fast = (n_ref, a2_t(prev, n_ref))

    scan: Optional[Tuple[int, float]] = None
    if exhaustive or fast is None:
        orders = np.arange(2, a2_scan_cap(prev) + 1)
        scan = _scan_argmin(orders, a2_t_array(prev, orders))

    if fast is None:
        assert scan is not None
        integer_opt, in_candidates = scan, scan[0] in window.candidates
    else:
        integer_opt, in_candidates = _reconcile(Scheme.A2, prev, fast, scan, window.candidates)

    continuous: Optional[Tuple[float, float]] = None
    efficiency: Optional[EfficiencyInterval] = None
    offset: Optional[float] = None
    try:
        continuous = a2_continuous_minimizer(prev)
        efficiency = a2_efficiency_interval(prev)
        offset = continuous[0] - window.base
    except RegionError:
        logger.debug(f"No efficiency interval at q={prev.q}")

    return OptimalConfiguration(
        scheme=Scheme.A2,
        continuous_opt=continuous,
        integer_opt=integer_opt,
        candidates=window.candidates,
        efficiency=efficiency,
        in_candidates=in_candidates,
        scan_opt=scan,
        individual_testing_preferred=integer_opt[1] >= 1.0,
        offset_t=offset,
    )


def _dorfman_stationary(prev: Prevalence, around: int) -> Optional[Tuple[float, float]]:
    ln_q = prev.ln_q

    def balance(N: float) -> float:
        return 1.0 / (N * N) + prev.power(N) * ln_q

    for lo, hi in ((around - 1.0, around + 1.0), (around / 2.0, 2.0 * around)):
        bracket = Bracket.around(balance, max(1.0, lo), hi)
        if bracket.has_sign_change():
            N_star = find_root(balance, bracket, _ROOT_TOL)
            return N_star, dorfman_t(prev, N_star)
    return None


def dorfman_optimum(prev: Prevalence, exhaustive: bool = True) -> OptimalConfiguration:
    """Dorfman pool size: continuous root of ``1/N^2 = -q^N ln q`` and integer optimum.

    :param prev: Prevalence.
    :param exhaustive: Confirm the two-element candidate set by scanning ``1..ceil(8/p)``.
    :return: Optimal configuration.
    """
    root = int(math.floor(prev.p**-0.5))
    candidates = (1 + root, 2 + root)
    candidate_opt = _argmin(candidates, lambda N: dorfman_t(prev, N))

    scan = None
    if exhaustive:
        sizes = np.arange(1, _linear_cap(prev) + 1)
        scan = _scan_argmin(sizes, dorfman_t_array(prev, sizes))
    integer_opt, inside = _reconcile(Scheme.DORFMAN, prev, candidate_opt, scan, candidates)

    return OptimalConfiguration(
        scheme=Scheme.DORFMAN,
        continuous_opt=_dorfman_stationary(prev, integer_opt[0]),
        integer_opt=integer_opt,
        candidates=candidates,
        in_candidates=inside,
        scan_opt=scan,
        individual_testing_preferred=integer_opt[1] >= 1.0,
    )


def sterrett_optimum(prev: Prevalence, exhaustive: bool = True) -> OptimalConfiguration:
    """Sterrett pool size.

    :param prev: Prevalence with ``p < (3 - sqrt(5)) / 2``.
    :param exhaustive: Confirm the three-element candidate set by scanning.
    :return: Optimal configuration with the band ``sqrt(2/p) +- 1``.
    :raises RegionError: Outside the stated prevalence range.
    """
    if prev.p >= STERRETT_P_LIMIT:
        raise RegionError(f"Sterrett optimum requires p < {STERRETT_P_LIMIT:.6f}, got {prev.p}")
    centre = math.sqrt(2.0 / prev.p)
    low = int(math.floor(centre))
    candidates = (low, low + 1, low + 2)
    candidate_opt = _argmin(candidates, lambda N: sterrett_t(prev, N))

    scan = None
    if exhaustive:
        values = sterrett_t_upto(prev, _linear_cap(prev))
        scan = _scan_argmin(np.arange(1, values.size + 1), values)
    integer_opt, inside = _reconcile(Scheme.STERRETT, prev, candidate_opt, scan, candidates)

    k = integer_opt[0]
    N_star, t_star = minimize_unimodal(
        lambda N: sterrett_t_continuous(prev, N), max(1.0, k - 1.0), k + 1.0, _ROOT_TOL
    )
    return OptimalConfiguration(
        scheme=Scheme.STERRETT,
        continuous_opt=(N_star, t_star),
        integer_opt=integer_opt,
        candidates=candidates,
        in_candidates=inside,
        scan_opt=scan,
        individual_testing_preferred=integer_opt[1] >= 1.0,
        reference_band=(centre - 1.0, centre + 1.0),
    )


def halving_optimum(prev: Prevalence, exhaustive: bool = True) -> OptimalConfiguration:
    """Halving pool size.

    The integer optimum is the argmin of the exact recursion over the two sizes around
    ``1 / (2 log2(1/q))``. The exhaustive scan is kept as ``scan_opt``; it often prefers
    a power of two outside that pair, which ``in_candidates`` reports.

    :param prev: Prevalence.
    :param exhaustive: Scan ``1..ceil(8/p)``; otherwise only the candidates are used.
    :return: Optimal configuration.
    """
    N_star = halving_unrounded_size(prev)
    low = max(1, int(math.floor(N_star)))
    candidates = tuple(sorted({low, max(1, int(math.floor(N_star)) + 1)}))
    candidate_opt = _argmin(candidates, lambda N: halving_t(prev, N))

    scan = None
    if exhaustive:
        values = halving_t_upto(prev, _linear_cap(prev))
        scan = _scan_argmin(np.arange(1, values.size + 1), values)
    inside = True
    if scan is not None and scan[0] not in candidates and scan[1] < candidate_opt[1] - 1e-14:
        inside = False
        logger.debug(
            f"halving: scan optimum N={scan[0]} (t={scan[1]:.6f}) lies outside candidates "
            f"{list(candidates)} at p={prev.p}"
        )

    return OptimalConfiguration(
        scheme=Scheme.HALVING,
        continuous_opt=(N_star, halving_t_continuous(prev, N_star)),
        integer_opt=candidate_opt,
        candidates=candidates,
        in_candidates=inside,
        scan_opt=scan,
        individual_testing_preferred=candidate_opt[1] >= 1.0,
    )


def optimum(scheme: Scheme, prev: Prevalence, exhaustive: bool = False) -> OptimalConfiguration:
    """Dispatch to the scheme's optimum."""
    if scheme is Scheme.A2:
        return a2_integer_optimum(prev, exhaustive=exhaustive)
    if scheme is Scheme.DORFMAN:
        return dorfman_optimum(prev, exhaustive=exhaustive)
    if scheme is Scheme.STERRETT:
        return sterrett_optimum(prev, exhaustive=exhaustive)
    return halving_optimum(prev, exhaustive=exhaustive)


def continuous_optimum(scheme: Scheme, prev: Prevalence) -> Tuple[float, float]:
    """Unrounded optimal size and its cost on the continuous scale.

    :param scheme: Scheme.
    :param prev: Prevalence.
    :return: Tuple ``(size, t)``; for A2 the size is the array order.
    :raises RegionError: If the scheme has no interior optimum at this prevalence.
    """
    if scheme is Scheme.A2:
        return a2_continuous_minimizer(prev)
    if scheme is Scheme.HALVING:
        N_star = halving_unrounded_size(prev)
        return N_star, halving_t_continuous(prev, N_star)
    config = optimum(scheme, prev, exhaustive=False)
    if config.continuous_opt is None:
        raise RegionError(f"{scheme.value} has no interior optimum at p={prev.p}")
    return config.continuous_opt


def continuous_gain(scheme: Scheme, prev: Prevalence) -> float:
    return 1.0 - continuous_optimum(scheme, prev)[1]


def optimal_cohort_size(scheme: Scheme, prev: Prevalence) -> float:
    """Unrounded number of individuals per run (``n_min^2`` for A2)."""
    size = continuous_optimum(scheme, prev)[0]
    return size * size if scheme is Scheme.A2 else size


def maximal_pool_size(scheme: Scheme, prev: Prevalence) -> float:
    """Largest pool actually tested: a row or column (``n_min``) for A2, ``N*`` otherwise."""
    return continuous_optimum(scheme, prev)[0]


def log_slope_check(scheme: Scheme, p_lo: float, p_hi: float, points: int = 21) -> float:
    """Least-squares slope of ``ln N*`` against ``-ln p`` on a log-spaced grid.

    :param scheme: Scheme; A2 uses the cohort size ``n_min^2``.
    :param p_lo: Smallest prevalence.
    :param p_hi: Largest prevalence.
    :param points: Grid size.
    :return: Fitted slope.
    """
    if not 0 < p_lo < p_hi < 1:
        raise ValueError(f"Need 0 < p_lo < p_hi < 1, got ({p_lo}, {p_hi})")
    grid = np.geomspace(p_lo, p_hi, points)
    sizes = [optimal_cohort_size(scheme, Prevalence(float(p))) for p in grid]
    slope, _ = np.polyfit(-np.log(grid), np.log(sizes), 1)
    return float(slope)


def _gain_difference(scheme_a: Scheme, scheme_b: Scheme) -> Callable[[float], float]:
    def difference(p: float) -> float:
        prev = Prevalence(p)
        return continuous_gain(scheme_a, prev) - continuous_gain(scheme_b, prev)

    return difference


def find_gain_crossing(
    scheme_a: Scheme, scheme_b: Scheme, p_lo: float, p_hi: float, tol: Tolerance = _GAIN_TOL
) -> float:
    """Prevalence where two schemes' continuous-scale gains are equal.

    :param scheme_a: First scheme.
    :param scheme_b: Second scheme.
    :param p_lo: Left end of the search bracket.
    :param p_hi: Right end of the search bracket.
    :param tol: Stopping rule of the root finder.
    :return: Crossing prevalence.
    :raises NoSignChangeError: If the gain difference keeps its sign on the bracket.
    """
    difference = _gain_difference(scheme_a, scheme_b)
    return find_root(difference, Bracket.around(difference, p_lo, p_hi), tol)


def max_gain_gap(
    scheme_a: Scheme,
    scheme_b: Scheme,
    region: Tuple[float, float],
    points: int = 200,
    tol: Tolerance = _GAIN_TOL,
) -> Tuple[float, float]:
    """Largest advantage of ``scheme_a`` over ``scheme_b``, in tests saved per 100 people.

    A coarse log-spaced scan seeds a golden-section search between the neighbours
    of the best grid point.

    :param scheme_a: Scheme whose advantage is measured.
    :param scheme_b: Reference scheme.
    :param region: Prevalence interval ``(p_lo, p_hi)``.
    :param points: Size of the seeding grid.
    :param tol: Stopping rule of the golden-section search.
    :return: Tuple ``(p_at, gap_per_100)``.
    """
    p_lo, p_hi = region
    difference = _gain_difference(scheme_a, scheme_b)
    grid = np.geomspace(p_lo, p_hi, points)
    values = [difference(float(p)) for p in grid]
    best = int(np.argmax(values))
    lo = float(grid[max(best - 1, 0)])
    hi = float(grid[min(best + 1, points - 1)])
    p_at, negative_gap = minimize_unimodal(lambda p: -difference(p), lo, hi, tol)
    return p_at, -100.0 * negative_gap


def max_pool_crossing(
    p_lo: float = 0.005, p_hi: float = 0.1, tol: Tolerance = _GAIN_TOL
) -> float:
    """Prevalence where the A2 row length equals the unrounded Halving pool size."""

    def difference(p: float) -> float:
        prev = Prevalence(p)
        return a2_continuous_minimizer(prev)[0] - halving_unrounded_size(prev)

    return find_root(difference, Bracket.around(difference, p_lo, p_hi), tol)


def comparison_summary(tol: Tolerance = _GAIN_TOL) -> Dict[str, float]:
    """Crossing points, maximal gain gaps, pool-size crossing and fitted slopes.

    :param tol: Stopping rule for the crossings and the gap searches.
    :return: Mapping of summary keys to values.
    """
    cross_d = find_gain_crossing(Scheme.A2, Scheme.DORFMAN, 0.001, 0.24, tol)
    cross_s = find_gain_crossing(Scheme.A2, Scheme.STERRETT, 0.001, 0.1, tol)
    cross_h_lo = find_gain_crossing(Scheme.A2, Scheme.HALVING, 0.001, 0.05, tol)
    cross_h_hi = find_gain_crossing(Scheme.A2, Scheme.HALVING, 0.15, P_CAP, tol)

    summary: Dict[str, float] = {
        "crossing_a2_dorfman": cross_d,
        "crossing_a2_sterrett": cross_s,
        "crossing_a2_halving_lower": cross_h_lo,
        "crossing_a2_halving_upper": cross_h_hi,
    }
    for name, other, region in (
        ("dorfman", Scheme.DORFMAN, (1e-4, cross_d)),
        ("sterrett", Scheme.STERRETT, (1e-4, cross_s)),
        ("halving", Scheme.HALVING, (cross_h_lo, cross_h_hi)),
    ):
        p_at, gap = max_gain_gap(Scheme.A2, other, region, tol=tol)
        summary[f"max_gap_a2_{name}_p"] = p_at
        summary[f"max_gap_a2_{name}_per_100"] = gap
    summary["pool_crossing_a2_halving"] = max_pool_crossing(tol=tol)
    for scheme in Scheme:
        summary[f"slope_{scheme.value}"] = log_slope_check(scheme, 1e-5, 1e-3)
    return summary
