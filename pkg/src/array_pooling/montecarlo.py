"""
Executable versions of the four pooling schemes, an exact enumeration oracle and a
seeded Monte Carlo estimator of tests per person.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Sequence

import numpy as np

from array_pooling.exceptions import DomainError, ShapeError
from array_pooling.schemes import Prevalence, Scheme, SchemeSize

logger = logging.getLogger(__name__)

BLOCK_TRIALS = 4096
ENUMERATION_LIMIT = 12


@dataclass(frozen=True)
class Cohort:
    """Infection statuses of one run; ``True`` marks an infected individual."""

    statuses: Sequence[bool]
    seed: int = 0
    prevalence: float = float("nan")

    def __len__(self) -> int:
        return len(self.statuses)

    @property
    def infected(self) -> FrozenSet[int]:
        return frozenset(i for i, s in enumerate(self.statuses) if s)


@dataclass(frozen=True)
class Execution:
    """Number of tests used and the individuals classified as infected."""

    tests: int
    infected: FrozenSet[int]


@dataclass(frozen=True)
class SimulationReport:
    scheme: Scheme
    size: int
    trials: int
    mean_tests_per_person: float
    std_error: float
    seed: int
    p: float
    std_error_defined: bool = True


def _statuses(cohort: Cohort) -> List[bool]:
    if len(cohort) == 0:
        raise ShapeError("Cohort must not be empty")
    return [bool(s) for s in cohort.statuses]


def run_a2(cohort: Cohort) -> Execution:
    """Square array: all row and column pools, then every positive-row/positive-column cell.

    :param cohort: ``n^2`` statuses in row-major order, ``n >= 2``.
    :return: Execution with ``2n`` pool tests plus the intersection retests.
    :raises ShapeError: If the length is not a perfect square of an order >= 2.
    """
    statuses = _statuses(cohort)
    n = math.isqrt(len(statuses))
    if n * n != len(statuses) or n < 2:
        raise ShapeError(f"A2 needs n^2 statuses with n >= 2, got {len(statuses)}")

    rows = [any(statuses[r * n : (r + 1) * n]) for r in range(n)]
    cols = [any(statuses[c::n]) for c in range(n)]
    tests = 2 * n
    infected = set()
    for r, c in itertools.product(range(n), range(n)):
        if rows[r] and cols[c]:
            tests += 1
            if statuses[r * n + c]:
                infected.add(r * n + c)
    return Execution(tests, frozenset(infected))


def run_dorfman(cohort: Cohort) -> Execution:
    """Pool test; a positive pool is followed by one test per member."""
    statuses = _statuses(cohort)
    if not any(statuses):
        return Execution(1, frozenset())
    return Execution(1 + len(statuses), cohort.infected)


def _sterrett_block(statuses: List[bool], members: List[int], infected: set) -> int:
    """Resolve a block known to hold at least one positive; returns tests used."""
    tests = 0
    while True:
        if len(members) == 1:
            infected.add(members[0])
            return tests
        for j, member in enumerate(members):
            if j == len(members) - 1:
                # every earlier member was negative
                infected.add(member)
                return tests
            tests += 1
            if not statuses[member]:
                continue
            infected.add(member)
            tail = members[j + 1 :]
            tests += 1
            if not any(statuses[i] for i in tail):
                return tests
            if len(tail) == 1:
                infected.add(tail[0])
                return tests
            members = tail
            break


def run_sterrett(cohort: Cohort) -> Execution:
    """Sequential individual tests up to the first positive, then re-pool the rest.

    The last untested member of a positive block is inferred positive when all
    earlier members were negative; a singleton cohort that tests positive is confirmed
    by one individual test.
    """
    statuses = _statuses(cohort)
    if not any(statuses):
        return Execution(1, frozenset())
    if len(statuses) == 1:
        return Execution(2, frozenset({0}))
    infected: set = set()
    tests = 1 + _sterrett_block(statuses, list(range(len(statuses))), infected)
    return Execution(tests, frozenset(infected))


def _halving_pool(statuses: List[bool], lo: int, hi: int, infected: set) -> int:
    tests = 1
    if not any(statuses[lo:hi]):
        return tests
    if hi - lo == 1:
        infected.add(lo)
        return tests
    mid = lo + (hi - lo + 1) // 2
    return tests + _halving_pool(statuses, lo, mid, infected) + _halving_pool(
        statuses, mid, hi, infected
    )


def run_halving(cohort: Cohort) -> Execution:
    """Recursive halving; the first half of a positive pool gets ``ceil(N/2)`` members."""
    statuses = _statuses(cohort)
    infected: set = set()
    tests = _halving_pool(statuses, 0, len(statuses), infected)
    return Execution(tests, frozenset(infected))


EXECUTORS: Dict[Scheme, Callable[[Cohort], Execution]] = {
    Scheme.A2: run_a2,
    Scheme.DORFMAN: run_dorfman,
    Scheme.STERRETT: run_sterrett,
    Scheme.HALVING: run_halving,
}


def _cohort_length(config: SchemeSize) -> int:
    return int(config.cohort_size)


def enumerate_expected(scheme: Scheme, size: int, prev: Prevalence) -> float:
    """Exact expected test count by summing over every status pattern.

    :param scheme: Scheme.
    :param size: Integer size; the cohort has ``size^2`` members for A2.
    :param prev: Prevalence.
    :return: Probability-weighted mean number of tests.
    :raises DomainError: If the cohort exceeds the enumeration limit.
    """
    length = _cohort_length(SchemeSize(scheme, size))
    if length > ENUMERATION_LIMIT:
        raise DomainError(
            f"Enumeration is limited to {ENUMERATION_LIMIT} individuals, got {length}"
        )
    executor = EXECUTORS[scheme]
    terms = []
    for pattern in itertools.product((False, True), repeat=length):
        positives = sum(pattern)
        weight = prev.p**positives * prev.q ** (length - positives)
        terms.append(weight * executor(Cohort(pattern)).tests)
    return math.fsum(terms)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` whose counter starts at ``block * 2^64``."""
    return np.random.Generator(np.random.Philox(key=seed, counter=block << 64))


def sample_cohorts(prev: Prevalence, length: int, trials: int, seed: int) -> List[np.ndarray]:
    """Status matrices of ``trials`` cohorts, one per block of at most ``BLOCK_TRIALS`` rows."""
    blocks = []
    for block in range(-(-trials // BLOCK_TRIALS)):
        rows = min(BLOCK_TRIALS, trials - block * BLOCK_TRIALS)
        blocks.append(block_generator(seed, block).random((rows, length)) < prev.p)
    return blocks


def estimate_t(
    prev: Prevalence, scheme: Scheme, size: int, trials: int, seed: int
) -> SimulationReport:
    """Monte Carlo estimate of tests per person.

    Trial ``i`` uses row ``i mod 4096`` of block ``i // 4096``, so each cohort depends
    only on the seed and its trial index.

    :param prev: Prevalence.
    :param scheme: Scheme.
    :param size: Integer size.
    :param trials: Number of simulated runs, at least 1.
    :param seed: Non-negative generator key.
    :return: Report with the sample mean and its standard error.
    :raises DomainError: On invalid trials, seed or size.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if seed < 0:
        raise DomainError(f"seed must be non-negative, got {seed}")
    config = SchemeSize(scheme, size)
    length = _cohort_length(config)
    executor = EXECUTORS[scheme]

    per_person = np.empty(trials, dtype=float)
    i = 0
    for block in sample_cohorts(prev, length, trials, seed):
        for row in block:
            per_person[i] = executor(Cohort(row.tolist(), seed, prev.p)).tests / length
            i += 1

    mean = float(np.mean(per_person))
    defined = trials > 1
    std_error = float(np.std(per_person, ddof=1) / math.sqrt(trials)) if defined else 0.0
    logger.debug(f"{scheme.value} size={size}: {trials} trials, mean={mean:.6f}")
    return SimulationReport(
        scheme=scheme,
        size=int(size),
        trials=trials,
        mean_tests_per_person=mean,
        std_error=std_error,
        seed=seed,
        p=prev.p,
        std_error_defined=defined,
    )
