"""
Expected tests per person for the square-array (A2), Dorfman, Sterrett and Halving
schemes under independent infections and a perfect test.
"""

import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import List, Union

import numpy as np

from array_pooling.exceptions import DomainError

logger = logging.getLogger(__name__)

Size = Union[int, float]


class Scheme(str, Enum):
    """Group testing schemes."""

    A2 = "a2"
    DORFMAN = "dorfman"
    STERRETT = "sterrett"
    HALVING = "halving"


class Scale(str, Enum):
    """Integer pool sizes or their continuous relaxation."""

    INTEGER = "integer"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class Prevalence:
    """Infection probability ``p`` with its complement ``q``."""

    p: float
    q: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"Prevalence must lie in (0, 1), got p={self.p}")
        if math.isnan(self.q):
            object.__setattr__(self, "q", 1.0 - self.p)
        if not 0.0 < self.q < 1.0 or abs(self.p + self.q - 1.0) > 4 * np.finfo(float).eps:
            raise DomainError(f"Inconsistent prevalence pair p={self.p}, q={self.q}")

    @classmethod
    def from_q(cls, q: float) -> "Prevalence":
        """Build a prevalence from the probability of a negative individual.

        :param q: Probability of being uninfected, in (0, 1).
        :return: Prevalence with ``p = 1 - q``.
        """
        if not 0.0 < q < 1.0:
            raise DomainError(f"q must lie in (0, 1), got q={q}")
        return cls(1.0 - q, q)

    @property
    def ln_q(self) -> float:
        return math.log1p(-self.p) if self.p < 0.5 else math.log(self.q)

    def power(self, n: float) -> float:
        """Return ``q**n`` as ``exp(n ln q)``."""
        return math.exp(n * self.ln_q)


@dataclass(frozen=True)
class SchemeSize:
    """A configuration: array order ``n`` for A2, pool size ``N`` otherwise."""

    scheme: Scheme
    size: Size
    scale: Scale = Scale.INTEGER

    def __post_init__(self) -> None:
        lower = 2 if self.scheme is Scheme.A2 else 1
        if not self.size >= lower:
            raise DomainError(f"{self.scheme.value} size must be >= {lower}, got {self.size}")
        if self.scale is Scale.INTEGER and float(self.size) != int(self.size):
            raise DomainError(f"Integer scale requires an integral size, got {self.size}")

    @property
    def cohort_size(self) -> float:
        """Number of individuals covered by one run of the scheme."""
        return float(self.size) ** 2 if self.scheme is Scheme.A2 else float(self.size)


@dataclass(frozen=True)
class EvaluationPoint:
    """Cost of one configuration at one prevalence."""

    prevalence: Prevalence
    config: SchemeSize
    t: float
    g: float
    gain: float
    expected_total: float


def _require_integer(size: Size, lower: int, what: str) -> int:
    if float(size) != int(size) or size < lower:
        raise DomainError(f"{what} must be an integer >= {lower}, got {size}")
    return int(size)


def a2_excess(prev: Prevalence, n: float) -> float:
    """Excess of A2 over individual testing, ``g = 2/n - 2q^n + q^(2n-1)``.

    :param prev: Prevalence.
    :param n: Array order, real and at least 2.
    :return: ``a2_t(prev, n) - 1`` computed without the leading cancellation.
    :raises DomainError: If ``n < 2``.
    """
    if not n >= 2:
        raise DomainError(f"Array order must be >= 2, got {n}")
    x = prev.power(n)
    return 2.0 / n - 2.0 * x + x * x / prev.q


def a2_t(prev: Prevalence, n: float) -> float:
    """Expected tests per person of an ``n x n`` array.

    :param prev: Prevalence.
    :param n: Array order, real and at least 2.
    :return: ``2/n + 1 - 2q^n + q^(2n-1)``.
    :raises DomainError: If ``n < 2``.
    """
    return 1.0 + a2_excess(prev, n)


def a2_excess_dq(prev: Prevalence, n: float) -> float:
    """Partial derivative of the A2 excess with respect to ``q``."""
    y = prev.power(n - 1)
    return -2.0 * n * y + (2.0 * n - 1.0) * y * y


def a2_excess_dn(prev: Prevalence, n: float) -> float:
    """Partial derivative of the A2 excess (and of ``a2_t``) with respect to ``n``."""
    x = prev.power(n)
    ln_q = prev.ln_q
    return -2.0 / (n * n) - 2.0 * x * ln_q + 2.0 * x * x / prev.q * ln_q


def a2_expected_total(prev: Prevalence, n: int) -> float:
    """Expected total number of tests of an ``n x n`` array.

    :param prev: Prevalence.
    :param n: Integer array order, at least 2.
    :return: ``2n + n^2 (1 - 2q^n + q^(2n-1))``.
    :raises DomainError: If ``n`` is not an integer >= 2.
    """
    n = _require_integer(n, 2, "Array order")
    x = prev.power(n)
    return 2.0 * n + n * n * (1.0 - 2.0 * x + x * x / prev.q)


def a2_t_array(prev: Prevalence, n: np.ndarray) -> np.ndarray:
    """Vectorised ``a2_t`` over an array of orders (used by exhaustive scans)."""
    x = np.exp(np.asarray(n, dtype=float) * prev.ln_q)
    return 1.0 + 2.0 / n - 2.0 * x + x * x / prev.q


def dorfman_t(prev: Prevalence, N: float) -> float:
    """Expected tests per person of Dorfman's two-stage pooling.

    :param prev: Prevalence.
    :param N: Pool size, real and at least 1.
    :return: ``1/N + 1 - q^N``.
    :raises DomainError: If ``N < 1``.
    """
    if not N >= 1:
        raise DomainError(f"Pool size must be >= 1, got {N}")
    return 1.0 / N + 1.0 - prev.power(N)


def dorfman_t_array(prev: Prevalence, N: np.ndarray) -> np.ndarray:
    N = np.asarray(N, dtype=float)
    return 1.0 / N + 1.0 - np.exp(N * prev.ln_q)


class _SterrettMemo:
    """Per-prevalence table of ``U(m) = (1 - q^m) D(m)``, grown on demand.

    ``D(m)`` is the expected number of further tests for a block of ``m`` members
    known to hold at least one positive. The geometric weights of the first-positive
    position turn the convolution in the recursion into a running sum, so each new
    entry costs O(1).
    """

    def __init__(self, max_entries: int = 64):
        self._tables: "OrderedDict[float, List[float]]" = OrderedDict()
        self._state: "dict[float, tuple]" = {}
        self._lock = threading.Lock()
        self.max_entries = max_entries

    def expected_further(self, prev: Prevalence, m: int) -> float:
        with self._lock:
            return self._grow(prev, m)[m]

    def table_upto(self, prev: Prevalence, m: int) -> List[float]:
        with self._lock:
            return list(self._grow(prev, m)[: m + 1])

    def _grow(self, prev: Prevalence, m: int) -> List[float]:
        key = prev.p
        table = self._tables.get(key)
        if table is None:
            table = [0.0, 0.0]
            # (cumulative first-positive cost, convolution sum, q^(m-1)) at m = 1
            self._state[key] = (0.0, 0.0, 1.0)
            self._tables[key] = table
            if len(self._tables) > self.max_entries:
                evicted, _ = self._tables.popitem(last=False)
                self._state.pop(evicted, None)
        else:
            self._tables.move_to_end(key)

        p, q = prev.p, prev.q
        acc, conv, q_pow = self._state[key]
        while len(table) <= m:
            size = len(table) - 1
            # advance (acc, conv, q_pow) from block size `size` to `size + 1`
            acc += p * q_pow * (size + 1)
            conv = q * conv + p * table[size]
            q_pow *= q
            size += 1
            table.append(acc + conv + p * q_pow * (size - 1))
        self._state[key] = (acc, conv, q_pow)
        return table

    def clear(self) -> None:
        with self._lock:
            self._tables.clear()
            self._state.clear()


_sterrett_memo = _SterrettMemo()


def sterrett_expected_total(prev: Prevalence, N: int) -> float:
    """Expected total tests of Sterrett's procedure on a cohort of ``N``.

    A positive pool is resolved by individual tests up to the first positive, after
    which the untested tail is pooled again; once all but the last member of a block
    known to be positive have tested negative, the last one is inferred positive.
    A singleton pool that tests positive is confirmed by one individual test.

    :param prev: Prevalence.
    :param N: Integer pool size, at least 1.
    :return: Expected number of tests.
    """
    N = _require_integer(N, 1, "Pool size")
    if N == 1:
        return 1.0 + prev.p
    return 1.0 + _sterrett_memo.expected_further(prev, N)


def sterrett_t(prev: Prevalence, N: int) -> float:
    """Expected tests per person of Sterrett's procedure (exact dynamic program).

    :param prev: Prevalence.
    :param N: Integer pool size, at least 1.
    :return: Expected tests divided by ``N``.
    :raises DomainError: If ``N`` is not an integer >= 1.
    """
    return sterrett_expected_total(prev, N) / int(N)


def sterrett_t_upto(prev: Prevalence, N_max: int) -> np.ndarray:
    """Sterrett ``t`` for every pool size ``1..N_max`` (index 0 is size 1)."""
    N_max = _require_integer(N_max, 1, "Pool size")
    further = np.asarray(_sterrett_memo.table_upto(prev, N_max), dtype=float)
    sizes = np.arange(1, N_max + 1, dtype=float)
    totals = 1.0 + further[1:]
    totals[0] = 1.0 + prev.p
    return totals / sizes


def sterrett_t_continuous(prev: Prevalence, N: float) -> float:
    """Closed form of the Sterrett cost, valid for real ``N >= 1``.

    ``E(N) = 1 + N + Np - 2p - (q/p)(1 - q^N)``; it coincides with the dynamic
    program at every integer ``N >= 2``.
    """
    if not N >= 1:
        raise DomainError(f"Pool size must be >= 1, got {N}")
    p, q = prev.p, prev.q
    miss = -math.expm1(N * prev.ln_q)
    return (1.0 + N + N * p - 2.0 * p - (q / p) * miss) / N


@lru_cache(maxsize=1 << 17)
def _halving_total(p: float, N: int) -> float:
    if N == 1:
        return 1.0
    q_pow = math.exp(N * math.log1p(-p))
    return 1.0 + _halving_total(p, (N + 1) // 2) + _halving_total(p, N // 2) - 2.0 * q_pow


def halving_expected_total(prev: Prevalence, N: int) -> float:
    """Expected total tests of recursive halving; the first half gets ``ceil(N/2)``."""
    N = _require_integer(N, 1, "Pool size")
    return _halving_total(prev.p, N)


def halving_t(prev: Prevalence, N: int) -> float:
    """Expected tests per person of recursive halving.

    ``f(1) = 1`` and ``f(N) = 1 + f(ceil(N/2)) + f(floor(N/2)) - 2q^N``: both halves
    are tested only when the parent pool is positive, and a half whose sibling is
    negative is still tested.

    :param prev: Prevalence.
    :param N: Integer pool size, at least 1.
    :return: ``f(N) / N``.
    :raises DomainError: If ``N`` is not an integer >= 1.
    """
    return halving_expected_total(prev, N) / int(N)


def halving_t_upto(prev: Prevalence, N_max: int) -> np.ndarray:
    """Halving ``t`` for every pool size ``1..N_max``, built bottom-up."""
    N_max = _require_integer(N_max, 1, "Pool size")
    powers = np.exp(np.arange(N_max + 1, dtype=float) * prev.ln_q)
    totals = [0.0, 1.0]
    for N in range(2, N_max + 1):
        totals.append(1.0 + totals[(N + 1) // 2] + totals[N // 2] - 2.0 * powers[N])
    return np.asarray(totals[1:]) / np.arange(1, N_max + 1, dtype=float)


def halving_unrounded_size(prev: Prevalence) -> float:
    """Unrounded Halving pool size ``1 / (2 log2(1/q))``."""
    return math.log(2.0) / (-2.0 * prev.ln_q)


def halving_t_continuous(prev: Prevalence, N: float) -> float:
    """Leading-order Halving cost ``1/N + 2p log2 N`` for real ``N > 0``.

    Each halving level costs about ``2p`` tests per person.
    """
    if not N > 0:
        raise DomainError(f"Pool size must be positive, got {N}")
    return 1.0 / N + 2.0 * prev.p * math.log2(N)


def tests_per_person(prev: Prevalence, config: SchemeSize) -> float:
    """Dispatch to the scheme-appropriate cost function."""
    size = config.size
    if config.scheme is Scheme.A2:
        return a2_t(prev, size)
    if config.scheme is Scheme.DORFMAN:
        return dorfman_t(prev, size)
    if config.scale is Scale.CONTINUOUS:
        if config.scheme is Scheme.STERRETT:
            return sterrett_t_continuous(prev, size)
        return halving_t_continuous(prev, size)
    if config.scheme is Scheme.STERRETT:
        return sterrett_t(prev, int(size))
    return halving_t(prev, int(size))


def gain(prev: Prevalence, config: SchemeSize) -> float:
    """Tests saved per person relative to individual testing, ``1 - t``.

    :param prev: Prevalence.
    :param config: Scheme and size.
    :return: Gain of the configuration.
    :raises DomainError: Propagated from the cost functions.
    """
    return 1.0 - tests_per_person(prev, config)


def evaluate(prev: Prevalence, config: SchemeSize) -> EvaluationPoint:
    """Evaluate a configuration: t, excess, gain and expected total tests."""
    t = tests_per_person(prev, config)
    g = t - 1.0
    return EvaluationPoint(
        prevalence=prev,
        config=config,
        t=t,
        g=g,
        gain=-g,
        expected_total=config.cohort_size * t,
    )
