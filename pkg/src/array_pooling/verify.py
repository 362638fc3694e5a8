"""
Numerical verification of the A2 optimality results: the shape of the excess
function, the critical pair, the candidate window and the executor oracle.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from array_pooling.exceptions import ConvergenceError, NoSignChangeError, RegionError
from array_pooling.montecarlo import enumerate_expected
from array_pooling.numerics import Bracket, Tolerance, find_root
from array_pooling.optimal import (
    CandidateWindow,
    a2_continuous_maximizer,
    a2_critical_pair,
    a2_efficiency_interval,
    a2_integer_optimum,
    q_five,
    window_base,
)
from array_pooling.schemes import (
    Prevalence,
    Scheme,
    SchemeSize,
    a2_excess,
    a2_excess_dn,
    tests_per_person,
)

logger = logging.getLogger(__name__)

CRITICAL_PAIR = (0.748416, 4.453524)
Q_FIVE = 0.750209961
STEP6_LANDMARKS = {
    "g(0.755, n(0.755, 0))": -0.002258,
    "g(0.755, n(0.755, 1))": -0.013690,
    "h(0, 0.755)": -0.2645889,
    "h(1, 0.755)": 0.081749,
}

DEFAULT_N_GRID = (2.5, 3.0, 4.0, 5.0, 7.0, 10.0)
DEFAULT_Q_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10)) + (0.95, 0.99)
DEFAULT_C_GRID = tuple(0.505 + 0.005 * i for i in range(33))
DEFAULT_CHECK_ORDERS = (0.8, 0.86, 0.9, 0.95, 0.99)

_TOL = Tolerance()


@dataclass(frozen=True)
class ProofProbe:
    """Auxiliary quantities at ``(q, n)``.

    ``x = q^n`` and ``c = 1/(2q)``; ``x0`` maximises ``h(x) = -(x - c x^2) ln x``
    on ``(0, q)``; ``h_tq`` is the derivative balance at order ``n(q, t)``.
    """

    q: float
    n: float
    c: float
    x: float
    x0: float
    h_of_x: float
    h_of_x0: float
    h_tq: float

    @classmethod
    def at(cls, prev: Prevalence, n: float, t: float = 0.0) -> "ProofProbe":
        c = 1.0 / (2.0 * prev.q)
        x = prev.power(n)
        x0 = solve_x0(prev)
        return cls(
            q=prev.q,
            n=n,
            c=c,
            x=x,
            x0=x0,
            h_of_x=_h(x, c),
            h_of_x0=_h(x0, c),
            h_tq=step6_h(prev, t),
        )


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one check.

    ``worst_residual`` is the largest absolute deviation for equality checks and the
    least favourable value of the tested quantity for inequality checks.
    """

    check: str
    grid: str
    worst_residual: float
    passed: bool
    detail: str = ""


def _h(x: float, c: float) -> float:
    return -(x - c * x * x) * math.log(x)


def _x0_equation(c: float) -> Callable[[float], float]:
    def balance(x: float) -> float:
        return -math.log(x) - (1.0 - c * x) / (1.0 - 2.0 * c * x)

    return balance


def solve_x0_for_c(c: float) -> float:
    """Maximiser of ``h`` on ``(0, 1/(2c))``.

    :param c: Parameter ``c > 1/2``.
    :return: Root of ``-ln x = (1 - cx) / (1 - 2cx)``.
    :raises NoSignChangeError: If the bracket fails.
    """
    balance = _x0_equation(c)
    hi = (1.0 - 1e-9) / (2.0 * c)
    return find_root(balance, Bracket.around(balance, 1e-300, hi), _TOL)


def solve_x0(prev: Prevalence) -> float:
    """Maximiser ``x0`` of ``h`` for ``c = 1/(2q)``; lies in ``(0, q)``."""
    return solve_x0_for_c(1.0 / (2.0 * prev.q))


def step6_order(prev: Prevalence, t: float) -> float:
    """Order ``n(q, t) = base + t`` of the candidate window."""
    return window_base(prev.p) + t


def step6_g(prev: Prevalence, t: float) -> float:
    return a2_excess(prev, step6_order(prev, t))


def step6_h(prev: Prevalence, t: float) -> float:
    """``-n^2 q^n ln q (1 - q^(n-1)) - 1`` at ``n = n(q, t)``; zero where ``dg/dn`` vanishes."""
    n = step6_order(prev, t)
    return -n * n * prev.power(n) * prev.ln_q * (1.0 - prev.power(n - 1.0)) - 1.0


def default_step6_grid() -> List[float]:
    """Step 1e-3 on ``[0.755, 0.999]`` refined to 1e-5 on ``[0.755, 0.765]``."""
    coarse = 0.755 + 1e-3 * np.arange(245)
    fine = 0.755 + 1e-5 * np.arange(1001)
    return [float(q) for q in np.unique(np.round(np.concatenate([coarse, fine]), 12))]


def _describe(values: Sequence[float], label: str = "q") -> str:
    return f"{label} in [{min(values):g}, {max(values):g}], {len(values)} points"


def _report(
    check: str, grid: str, worst: float, passed: bool, detail: str = ""
) -> VerificationReport:
    level = logging.DEBUG if passed else logging.WARNING
    logger.log(level, f"{check}: worst={worst:.3e} passed={passed} {detail}".rstrip())
    return VerificationReport(check, grid, worst, passed, detail)


def _central_difference(f: Callable[[float], float], x: float, rel_step: float = 1e-6) -> float:
    h = rel_step * max(abs(x), 1e-3)
    return (f(x + h) - f(x - h)) / (2.0 * h)


def check_g_decreasing_in_q(
    n_grid: Sequence[float] = DEFAULT_N_GRID, q_grid: Sequence[float] = DEFAULT_Q_GRID
) -> VerificationReport:
    """``dg/dq < 0`` by central differences plus the limits ``2/n`` and ``2/n - 1``.

    :param n_grid: Orders in ``(2, inf)``.
    :param q_grid: Points in ``(0, 1)``.
    :return: Report; the residual is the largest derivative found.
    """
    worst = -math.inf
    endpoint_error = 0.0
    for n in n_grid:
        for q in q_grid:
            slope = _central_difference(lambda v: a2_excess(Prevalence.from_q(v), n), q)
            worst = max(worst, slope)
        endpoint_error = max(
            endpoint_error,
            abs(a2_excess(Prevalence.from_q(1e-9), n) - 2.0 / n),
            abs(a2_excess(Prevalence.from_q(1.0 - 1e-9), n) - (2.0 / n - 1.0)),
        )
    passed = worst < 0 and endpoint_error < 1e-6
    return _report(
        "g_decreasing_in_q",
        f"n in {list(n_grid)}; {_describe(q_grid)}",
        worst,
        passed,
        f"endpoint_error={endpoint_error:.3e}",
    )


def check_half_bound(n_grid: Optional[Sequence[float]] = None) -> VerificationReport:
    """``g(1/2, n) > 0`` on ``(2, 200]``; the residual is the smallest value."""
    if n_grid is None:
        grid = [2.01, 3.0, 10.0] + [float(n) for n in np.linspace(2.05, 200.0, 400)]
    else:
        grid = list(n_grid)
    half = Prevalence(0.5)
    worst = min(a2_excess(half, n) for n in grid)
    return _report("half_bound", _describe(grid, "n"), worst, worst > 0)


def check_critical_pair(tol: float = 1e-5, residual_tol: float = 1e-7) -> VerificationReport:
    """Computed ``(q*, n*)`` against the published pair, plus both defining residuals."""
    pair = a2_critical_pair()
    deviation = max(abs(pair.q_star - CRITICAL_PAIR[0]), abs(pair.n_star - CRITICAL_PAIR[1]))
    residual = max(abs(pair.residual_value), abs(pair.residual_slope))
    passed = deviation < tol and residual < residual_tol
    return _report(
        "critical_pair",
        "golden-section on n in [2.5, 10], slope polish",
        deviation,
        passed,
        f"q_star={pair.q_star:.9f} n_star={pair.n_star:.9f} residual={residual:.3e}",
    )


def check_q5(tol: float = 1e-8) -> VerificationReport:
    q5 = q_five()
    deviation = abs(q5 - Q_FIVE)
    return _report("q5", "root of g(q, 5)", deviation, deviation < tol, f"q5={q5:.12f}")


def critical_q_via_x0(bracket: Tuple[float, float] = (0.7, 0.8)) -> float:
    """``q*`` recomputed as the root of ``-ln q = h(x0(q))``."""

    def balance(q: float) -> float:
        prev = Prevalence.from_q(q)
        return -prev.ln_q - _h(solve_x0(prev), 1.0 / (2.0 * q))

    return find_root(balance, Bracket.around(balance, *bracket), _TOL)


def check_critical_q_via_x0(tol: float = 1e-8) -> VerificationReport:
    q_alt = critical_q_via_x0()
    deviation = abs(q_alt - a2_critical_pair().q_star)
    return _report(
        "critical_q_via_x0", "q in [0.7, 0.8]", deviation, deviation < tol, f"q={q_alt:.12f}"
    )


def check_solve_x0(q_grid: Sequence[float] = DEFAULT_CHECK_ORDERS) -> VerificationReport:
    """``x0 in (0, q)``, zero residual and ``h`` rising before ``x0`` and falling after it."""
    worst = 0.0
    passed = True
    for q in q_grid:
        prev = Prevalence.from_q(q)
        c = 1.0 / (2.0 * q)
        x0 = solve_x0(prev)
        worst = max(worst, abs(_x0_equation(c)(x0)))
        rising = _central_difference(lambda x: _h(x, c), 0.5 * x0) > 0
        falling = _central_difference(lambda x: _h(x, c), 0.5 * (x0 + q)) < 0
        passed = passed and 0 < x0 < q and 1.0 - 2.0 * c * x0 > 0 and rising and falling
    return _report("solve_x0", _describe(q_grid), worst, passed and worst < 1e-10)


def check_x0_decreasing(c_grid: Sequence[float] = DEFAULT_C_GRID) -> VerificationReport:
    """``c -> x0(c)`` decreases, with slope ``-x0^2 / ((1 - 2c x0)^2 + c x0)``."""
    roots = [solve_x0_for_c(c) for c in c_grid]
    decreasing = all(b < a for a, b in zip(roots, roots[1:]))
    worst = 0.0
    for c, x0 in zip(c_grid, roots):
        numeric = _central_difference(solve_x0_for_c, c)
        analytic = -x0 * x0 / ((1.0 - 2.0 * c * x0) ** 2 + c * x0)
        worst = max(worst, abs(numeric - analytic))
    return _report("x0_decreasing", _describe(c_grid, "c"), worst, decreasing and worst < 1e-5)


def step6_landmarks() -> List[Tuple[str, float, float]]:
    """The four Step-6 landmark values at ``q = 0.755`` with their published values."""
    prev = Prevalence.from_q(0.755)
    computed = [step6_g(prev, 0.0), step6_g(prev, 1.0), step6_h(prev, 0.0), step6_h(prev, 1.0)]
    return [
        (name, value, expected)
        for (name, expected), value in zip(STEP6_LANDMARKS.items(), computed)
    ]


def check_step6_landmarks(tol: float = 1e-6) -> VerificationReport:
    landmarks = step6_landmarks()
    worst = max(abs(value - expected) for _, value, expected in landmarks)
    detail = " ".join(f"{name}={value:.7f}" for name, value, _ in landmarks)
    return _report("step6_landmarks", "q = 0.755", worst, worst <= tol, detail)


def check_step6_a(q_grid: Optional[Sequence[float]] = None) -> VerificationReport:
    """``max(g(q, n(q, 0)), g(q, n(q, 1))) < 0``; the residual is the largest value."""
    grid = default_step6_grid() if q_grid is None else list(q_grid)
    prevs = [Prevalence.from_q(q) for q in grid]
    worst = max(max(step6_g(prev, 0.0), step6_g(prev, 1.0)) for prev in prevs)
    return _report("step6_a", _describe(grid), worst, worst < 0)


def check_step6_b(q_grid: Optional[Sequence[float]] = None) -> VerificationReport:
    """``h(0, q) < 0 < h(1, q)``.

    The residual is the worse of ``max h(0, .)`` and ``-min h(1, .)``.
    """
    grid = default_step6_grid() if q_grid is None else list(q_grid)
    prevs = [Prevalence.from_q(q) for q in grid]
    upper = max(step6_h(prev, 0.0) for prev in prevs)
    lower = min(step6_h(prev, 1.0) for prev in prevs)
    worst = max(upper, -lower)
    return _report("step6_b", _describe(grid), worst, upper < 0 < lower)


def check_step6_monotone(q_grid: Optional[Sequence[float]] = None) -> VerificationReport:
    """``q -> g(q, n(q, i))`` decreases for ``i = 0, 1``; the residual is the largest increment."""
    grid = sorted(default_step6_grid() if q_grid is None else q_grid)
    worst = -math.inf
    for t in (0.0, 1.0):
        values = [step6_g(Prevalence.from_q(q), t) for q in grid]
        worst = max([worst] + [b - a for a, b in zip(values, values[1:])])
    return _report("step6_monotone", _describe(grid), worst, worst < 0)


def check_corollary_region(q_grid: Optional[Sequence[float]] = None) -> VerificationReport:
    """On ``(q_5, 0.755]`` the rounded window expression is 5 and so is the exhaustive optimum."""
    q5 = q_five()
    if q_grid is None:
        grid = [q5 + (0.755 - q5) * i / 200 for i in range(1, 201)]
    else:
        grid = list(q_grid)
    failures = []
    for q in grid:
        prev = Prevalence.from_q(q)
        rounded = math.ceil(window_base(prev.p) + 1.0)
        optimum = a2_integer_optimum(prev, exhaustive=True).integer_opt[0]
        if rounded != 5 or optimum != 5:
            failures.append(q)
    return _report(
        "corollary_region",
        _describe(grid),
        float(len(failures)),
        not failures,
        f"failures={failures[:5]}" if failures else "",
    )


def check_candidate_soundness(samples: int = 1000, seed: int = 1) -> VerificationReport:
    """Random ``q in (q_5, 1)``: the exhaustive argmin lies in the window and never in {2, 3, 4}."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    grid = rng.uniform(q_five(), 1.0, samples)
    misses = []
    for q in grid:
        prev = Prevalence.from_q(float(q))
        config = a2_integer_optimum(prev, exhaustive=True)
        assert config.scan_opt is not None
        n_scan = config.scan_opt[0]
        window = CandidateWindow.for_prevalence(prev)
        if n_scan not in window.candidates or n_scan in (2, 3, 4):
            misses.append(float(q))
    return _report(
        "candidate_soundness",
        f"{samples} uniform q in (q5, 1), seed={seed}",
        float(len(misses)),
        not misses,
        f"misses={misses[:5]}" if misses else "",
    )


def _sign_changes(values: Iterable[float]) -> List[int]:
    signs = np.sign(np.fromiter(values, dtype=float))
    return [int(i) for i in np.nonzero(signs[1:] * signs[:-1] < 0)[0]]


def check_two_critical_points(prev: Prevalence) -> VerificationReport:
    """``dt/dn`` changes sign exactly twice on ``(2, n_cap)``, at a minimum then a maximum.

    The substituted equation ``-x ln x = sqrt(-ln q) sqrt(x / (1 - 2cx))`` on ``(0, q)``
    must have two solutions as well.

    :param prev: Prevalence with ``q > q*``.
    :return: Report; the residual is the number of sign changes.
    """
    try:
        interval = a2_efficiency_interval(prev)
        n_max, _ = a2_continuous_maximizer(prev)
    except (RegionError, ConvergenceError, NoSignChangeError) as e:
        return _report("two_critical_points", f"q = {prev.q}", math.nan, False, str(e))

    orders = np.geomspace(2.0 + 1e-6, 4.0 * n_max, 20000)
    changes = _sign_changes(a2_excess_dn(prev, float(n)) for n in orders)
    located = (
        len(changes) == 2
        and interval.n_lower < orders[changes[0]] < interval.n_upper
        and orders[changes[1]] > interval.n_upper
    )

    c = 1.0 / (2.0 * prev.q)
    root_ln_q = math.sqrt(-prev.ln_q)
    xs = np.geomspace(1e-12, prev.q * (1.0 - 1e-9), 20000)
    substituted = _sign_changes(
        -x * math.log(x) - root_ln_q * math.sqrt(x / (1.0 - 2.0 * c * x)) for x in map(float, xs)
    )
    passed = located and len(substituted) == 2
    return _report(
        "two_critical_points",
        f"q = {prev.q}, n in (2, {4.0 * n_max:.1f})",
        float(len(changes)),
        passed,
        f"substituted_roots={len(substituted)}",
    )


def check_enumeration_oracle(
    probabilities: Sequence[float] = (0.1, 0.3), max_cohort: int = 12, tol: float = 1e-12
) -> VerificationReport:
    """Executors averaged over every status pattern against the cost formulas."""
    worst = 0.0
    cases = 0
    for p in probabilities:
        prev = Prevalence(p)
        for scheme in Scheme:
            sizes = range(2, 4) if scheme is Scheme.A2 else range(1, max_cohort + 1)
            for size in sizes:
                config = SchemeSize(scheme, size)
                expected = tests_per_person(prev, config) * config.cohort_size
                worst = max(worst, abs(enumerate_expected(scheme, size, prev) - expected))
                cases += 1
    return _report(
        "enumeration_oracle",
        f"p in {list(probabilities)}, {cases} (scheme, size) cases",
        worst,
        worst <= tol,
    )


def run_suite(
    samples: int = 1000, seed: int = 1, include_oracle: bool = True
) -> List[VerificationReport]:
    """Run every check in a fixed order.

    :param samples: Random prevalences for the candidate-window check.
    :param seed: Key of the generator drawing those prevalences.
    :param include_oracle: Also run the exhaustive enumeration oracle.
    :return: Reports in execution order.
    """
    reports = [
        check_g_decreasing_in_q(),
        check_half_bound(),
        check_critical_pair(),
        check_q5(),
        check_critical_q_via_x0(),
        check_solve_x0(),
        check_x0_decreasing(),
        check_step6_landmarks(),
        check_step6_a(),
        check_step6_b(),
        check_step6_monotone(),
        check_corollary_region(),
        check_candidate_soundness(samples, seed),
    ]
    reports.extend(check_two_critical_points(Prevalence.from_q(q)) for q in DEFAULT_CHECK_ORDERS)
    if include_oracle:
        reports.append(check_enumeration_oracle())
    failed = [r.check for r in reports if not r.passed]
    if failed:
        logger.warning(f"Failed checks: {failed}")
    else:
        logger.info(f"All {len(reports)} checks passed")
    return reports
