"""
Array order selection when the prevalence is unknown: minimax over a grid of q values
and Bayesian expected loss under a uniform prior on q.
"""

import logging
import math
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from array_pooling.exceptions import NoSignChangeError, RegionError
from array_pooling.numerics import Bracket, Tolerance, find_root, integrate
from array_pooling.optimal import a2_reference_order, q_five
from array_pooling.schemes import Prevalence, Scheme, a2_t, a2_t_array

logger = logging.getLogger(__name__)

DEFAULT_N_RANGE = range(5, 65)
DEFAULT_Q_MAX = 0.996
DEFAULT_GRID_STEP = 1e-3
GRID_OFFSET = 1e-4

# breakpoints are located for p >= TAIL_P; the tail above 1 - TAIL_P is integrated piecewise
TAIL_P = 1e-4
TAIL_P_FLOOR = 1e-12

ReferenceRule = Callable[[Prevalence], int]


class Criterion(str, Enum):
    MINIMAX = "minimax"
    BAYES_SQ = "bayes_sq"
    BAYES_LINEAR = "bayes_linear"


@dataclass(frozen=True)
class LossSpec:
    """Excess tests per person of order ``n`` over the reference order at ``q``.

    The default reference is the integer A2 optimum from the candidate window, which
    exists only for ``q > q_5``.
    """

    scheme: Scheme = Scheme.A2
    reference: Optional[ReferenceRule] = None

    def reference_order(self, prev: Prevalence) -> int:
        if self.reference is not None:
            return self.reference(prev)
        return a2_reference_order(prev)


@dataclass(frozen=True)
class PriorSpec:
    """Uniform prior on ``q`` over ``(lo, hi)``."""

    lo: float = 0.750210
    hi: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.lo < self.hi <= 1.0:
            raise ValueError(
                f"Prior support must satisfy 0 < lo < hi <= 1, got ({self.lo}, {self.hi})"
            )

    @property
    def density(self) -> float:
        return 1.0 / (self.hi - self.lo)


@dataclass(frozen=True)
class RobustChoice:
    """Chosen array order with its criterion value and the setup that produced it."""

    chosen_n: int
    criterion_value: float
    criterion: Criterion
    grid: str
    values: Dict[int, float] = field(default_factory=dict)

    @property
    def cohort_size(self) -> int:
        return self.chosen_n * self.chosen_n


@dataclass(frozen=True)
class Calibration:
    """Upper grid ends scanned for the minimax choice, with the order chosen at each."""

    target: int
    q_max: Optional[float]
    choices: List[Tuple[float, int]]

    @property
    def found(self) -> bool:
        return self.q_max is not None


def loss(prev: Prevalence, n: int, spec: LossSpec = LossSpec()) -> float:
    """Excess tests per person ``t(q, n) - t(q, n_opt(q))``.

    :param prev: Prevalence.
    :param n: Array order, at least 2.
    :param spec: Reference rule; the default requires ``q > q_5``.
    :return: Non-negative loss up to rounding.
    :raises RegionError: If the default reference rule is used with ``q <= q_5``.
    """
    return a2_t(prev, n) - a2_t(prev, spec.reference_order(prev))


def _order_range(n_range: Sequence[int]) -> np.ndarray:
    orders = np.asarray(sorted(set(int(n) for n in n_range)))
    if orders.size == 0 or orders[0] < 2:
        raise ValueError(f"Order range must be nonempty with every n >= 2, got {list(n_range)}")
    return orders


def _pick(orders: np.ndarray, values: np.ndarray) -> Tuple[int, float]:
    idx = int(np.argmin(values))
    return int(orders[idx]), float(values[idx])


def q_grid(
    q_max: float = DEFAULT_Q_MAX,
    step: float = DEFAULT_GRID_STEP,
    q_lo: Optional[float] = None,
    offset: float = GRID_OFFSET,
) -> List[float]:
    """Grid ``q_lo + offset + i * step`` up to ``q_max``, with ``q_max`` always included.

    :param q_max: Upper end, below 1.
    :param step: Grid spacing.
    :param q_lo: Lower end; defaults to ``q_5``.
    :param offset: Distance of the first point from ``q_lo``.
    :return: Increasing list of q values.
    :raises ValueError: If the range is empty or the step is not positive.
    """
    lo = q_five() if q_lo is None else q_lo
    start = lo + offset
    if not step > 0:
        raise ValueError(f"Grid step must be positive, got {step}")
    if not start <= q_max < 1.0:
        raise ValueError(f"Need q_lo + offset <= q_max < 1, got start={start}, q_max={q_max}")
    count = int(math.floor((q_max - start) / step + 1e-9))
    grid = [start + i * step for i in range(count + 1)]
    if q_max - grid[-1] > 1e-12:
        grid.append(q_max)
    return grid


def minimax_values(
    grid: Sequence[float], n_range: Sequence[int] = DEFAULT_N_RANGE, spec: LossSpec = LossSpec()
) -> Dict[int, float]:
    """Worst loss over ``grid`` for every order in ``n_range``."""
    orders = _order_range(n_range)
    worst = np.full(orders.size, -np.inf)
    for q in grid:
        prev = Prevalence.from_q(q)
        losses = a2_t_array(prev, orders) - a2_t(prev, spec.reference_order(prev))
        np.maximum(worst, losses, out=worst)
    return {int(n): float(v) for n, v in zip(orders, worst)}


def minimax_choice(
    grid: Sequence[float], n_range: Sequence[int] = DEFAULT_N_RANGE, spec: LossSpec = LossSpec()
) -> RobustChoice:
    """Order minimising the worst loss over a q grid.

    :param grid: Nonempty q values in ``(q_5, 1)``.
    :param n_range: Candidate orders.
    :param spec: Loss reference rule.
    :return: Minimax choice; ties go to the smaller order.
    :raises ValueError: If the grid is empty.
    """
    if len(grid) == 0:
        raise ValueError("Minimax grid must not be empty")
    values = minimax_values(grid, n_range, spec)
    orders = np.asarray(list(values))
    chosen, value = _pick(orders, np.asarray(list(values.values())))
    description = f"q in [{min(grid):.6f}, {max(grid):.6f}], {len(grid)} points"
    logger.debug(f"Minimax over {description}: n={chosen}, sup loss={value:.9f}")
    return RobustChoice(chosen, value, Criterion.MINIMAX, description, values)


def calibrate_q_max(
    band: Tuple[float, float] = (0.995, 0.998),
    step: float = 1e-4,
    target: int = 12,
    grid_step: float = DEFAULT_GRID_STEP,
    n_range: Sequence[int] = DEFAULT_N_RANGE,
) -> Calibration:
    """Scan upper grid ends in ``band`` for the first one giving the minimax order ``target``.

    :param band: Closed range of upper ends.
    :param step: Spacing of the scanned upper ends.
    :param target: Order sought.
    :param grid_step: Spacing of each minimax grid.
    :param n_range: Candidate orders.
    :return: Calibration with the first matching ``q_max`` or ``None``.
    """
    lo, hi = Decimal(repr(band[0])), Decimal(repr(band[1]))
    delta = Decimal(repr(step))
    if not lo <= hi or not delta > 0:
        raise ValueError(f"Invalid calibration band {band} with step {step}")

    choices: List[Tuple[float, int]] = []
    q_max: Optional[float] = None
    current = lo
    while current <= hi:
        value = float(current)
        chosen = minimax_choice(q_grid(value, grid_step), n_range).chosen_n
        choices.append((value, chosen))
        if chosen == target and q_max is None:
            q_max = value
        current += delta

    if q_max is None:
        logger.warning(f"No upper grid end in {band} yields the minimax order {target}: {choices}")
    return Calibration(target, q_max, choices)


def _order_gap(q: float, k: int) -> float:
    prev = Prevalence.from_q(q)
    return a2_t(prev, k) - a2_t(prev, k + 1)


def _split_breaks(
    qa: float, ka: int, qb: float, kb: int, rule: ReferenceRule, depth: int = 0
) -> List[Tuple[float, int, int]]:
    if ka == kb:
        return []
    if kb == ka + 1:
        try:
            bracket = Bracket.around(lambda q: _order_gap(q, ka), qa, qb)
            return [(find_root(lambda q: _order_gap(q, ka), bracket), ka, kb)]
        except NoSignChangeError:
            pass
    if depth >= 60:
        logger.warning(f"Unresolved optimum change {ka}->{kb} on [{qa}, {qb}]")
        return [((qa + qb) / 2.0, ka, kb)]
    qm = (qa + qb) / 2.0
    km = rule(Prevalence.from_q(qm))
    return _split_breaks(qa, ka, qm, km, rule, depth + 1) + _split_breaks(
        qm, km, qb, kb, rule, depth + 1
    )


def n_opt_breakpoints(
    lo: float, hi: float, spec: LossSpec = LossSpec()
) -> List[Tuple[float, int, int]]:
    """Positions in ``(lo, hi)`` where the integer optimum steps from ``k`` to ``k + 1``.

    The p axis is scanned with spacing ``p^(5/3) / 4``, several times finer than the
    distance between consecutive optimum changes; each change is then solved from
    ``t(q, k) = t(q, k + 1)``.

    :param lo: Lower q.
    :param hi: Upper q.
    :param spec: Reference rule.
    :return: Triples ``(q, k, k + 1)`` in increasing q.
    """
    if not lo < hi:
        raise ValueError(f"Need lo < hi, got ({lo}, {hi})")
    p_hi, p_lo = 1.0 - lo, 1.0 - hi
    points = [p_hi]
    while points[-1] > p_lo:
        p = points[-1]
        points.append(max(p_lo, p - 0.25 * p ** (5.0 / 3.0)))
    qs = [1.0 - p for p in points]
    qs[0], qs[-1] = lo, hi

    rule = spec.reference_order
    breaks: List[Tuple[float, int, int]] = []
    qa, ka = qs[0], rule(Prevalence.from_q(qs[0]))
    for qb in qs[1:]:
        kb = rule(Prevalence.from_q(qb))
        breaks.extend(_split_breaks(qa, ka, qb, kb, rule))
        qa, ka = qb, kb
    logger.debug(f"{len(breaks)} optimum changes on ({lo}, {hi})")
    return breaks


def _segment_integral(
    n: int, k: int, a: float, b: float, squared: bool, tol: Tolerance
) -> float:
    def excess(q: float) -> float:
        prev = Prevalence.from_q(q)
        value = a2_t(prev, n) - a2_t(prev, k)
        return value * value if squared else value

    return integrate(excess, a, b, tol)


def _tail_integral(
    n: int, lo: float, hi: float, squared: bool, spec: LossSpec, tol: Tolerance
) -> float:
    # integrated in p: near q = 1 the difference 1 - q keeps too few significant digits
    def excess(p: float) -> float:
        value = loss(Prevalence(p), n, spec)
        return value * value if squared else value

    p_lo = 1.0 - hi
    total = 0.0
    p = 1.0 - lo
    while p > max(p_lo, TAIL_P_FLOOR):
        p_next = max(p / 10.0, p_lo, TAIL_P_FLOOR)
        total += integrate(excess, p_next, p, tol)
        p = p_next
    if p_lo < TAIL_P_FLOOR:
        limit = 2.0 / n
        total += (limit * limit if squared else limit) * (TAIL_P_FLOOR - p_lo)
    return total


@dataclass(frozen=True)
class _Segments:
    pieces: List[Tuple[float, float, int]]
    tail: Optional[Tuple[float, float]]


def _segments(prior: PriorSpec, spec: LossSpec) -> _Segments:
    body_hi = min(prior.hi, 1.0 - TAIL_P)
    pieces: List[Tuple[float, float, int]] = []
    if prior.lo < body_hi:
        start = prior.lo
        k = spec.reference_order(Prevalence.from_q(start))
        for q_break, _, k_next in n_opt_breakpoints(prior.lo, body_hi, spec):
            pieces.append((start, q_break, k))
            start, k = q_break, k_next
        pieces.append((start, body_hi, k))
    tail = (max(prior.lo, body_hi), prior.hi) if prior.hi > body_hi else None
    return _Segments(pieces, tail)


def bayes_criterion(
    prior: PriorSpec,
    n: int,
    quad_tol: float = 1e-8,
    squared: bool = True,
    spec: LossSpec = LossSpec(),
    segments: Optional[_Segments] = None,
) -> float:
    """Prior-expected loss (squared by default) of order ``n``.

    :param prior: Uniform prior on q inside ``(q_5, 1]``.
    :param n: Array order.
    :param quad_tol: Quadrature error target per unit length.
    :param squared: Square the loss before averaging.
    :param spec: Loss reference rule.
    :return: Criterion value.
    :raises RegionError: If the prior reaches down to ``q_5``.
    :raises QuadratureError: If a segment fails to converge.
    """
    if spec.reference is None and prior.lo <= q_five():
        raise RegionError(f"Prior support must lie above q_5 = {q_five():.9f}, got lo={prior.lo}")
    tol = Tolerance(abs_x=quad_tol)
    parts = _segments(prior, spec) if segments is None else segments
    total = sum(_segment_integral(n, k, a, b, squared, tol) for a, b, k in parts.pieces)
    if parts.tail is not None:
        total += _tail_integral(n, parts.tail[0], parts.tail[1], squared, spec, tol)
    return total * prior.density


def bayes_choice(
    prior: PriorSpec = PriorSpec(),
    n_range: Sequence[int] = range(5, 41),
    quad_tol: float = 1e-8,
    squared: bool = True,
    spec: LossSpec = LossSpec(),
) -> RobustChoice:
    """Order minimising the prior-expected loss.

    The integrand is split at every change of the integer optimum so each piece is
    smooth; the region next to ``q = 1`` is integrated in geometric slices of p and
    closed with the limit ``L -> 2/n``.

    :param prior: Uniform prior on q.
    :param n_range: Candidate orders.
    :param quad_tol: Quadrature error target per unit length.
    :param squared: Use the squared loss, otherwise the loss itself.
    :param spec: Loss reference rule.
    :return: Bayesian choice; ties go to the smaller order.
    """
    orders = _order_range(n_range)
    segments = _segments(prior, spec)
    values = {
        int(n): bayes_criterion(prior, int(n), quad_tol, squared, spec, segments) for n in orders
    }
    chosen, value = _pick(orders, np.asarray([values[int(n)] for n in orders]))
    criterion = Criterion.BAYES_SQ if squared else Criterion.BAYES_LINEAR
    description = (
        f"uniform q on ({prior.lo:.6f}, {prior.hi:.6f}), quad_tol={quad_tol:g}, "
        f"{len(segments.pieces)} segments"
    )
    logger.debug(f"Bayes {criterion.value} over {description}: n={chosen}, value={value:.9g}")
    return RobustChoice(chosen, value, criterion, description, values)
