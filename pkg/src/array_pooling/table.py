"""
Comparison table of optimal pool sizes, its re-check against recomputation, and the
series files behind the comparison plots.
"""

import csv
import logging
import math
import os
from dataclasses import astuple, dataclass, fields
from decimal import Decimal
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, TextIO

from deepdiff import DeepDiff

from array_pooling.optimal import (
    P_CAP,
    a2_reference_order,
    continuous_optimum,
    dorfman_optimum,
    halving_optimum,
    maximal_pool_size,
    optimal_cohort_size,
    q_n_curve,
    sterrett_optimum,
)
from array_pooling.schemes import Prevalence, Scheme, a2_t
from array_pooling.utils import format_decimal
from array_pooling.verify import default_step6_grid, step6_g, step6_h

logger = logging.getLogger(__name__)

TABLE_TOLERANCE = 5e-7


@dataclass(frozen=True)
class TableRow:
    """Integer optima of every scheme at one prevalence."""

    p: float
    n_opt_a2: int
    t_a2: float
    gain_a2: float
    N_opt_d: int
    t_d: float
    gain_d: float
    N_opt_s: int
    t_s: float
    gain_s: float
    N_opt_h: int
    t_h: float
    gain_h: float

    def as_dict(self) -> Dict[str, Any]:
        return dict(zip(HEADER, astuple(self)))

    def as_record(self) -> Dict[str, str]:
        """CSV cells: integers as is, reals with six decimals."""
        return {
            name: str(value) if isinstance(value, int) else format_decimal(value)
            for name, value in self.as_dict().items()
        }


HEADER = [f.name for f in fields(TableRow)]
_INTEGER_COLUMNS = {name for name in HEADER if name.startswith(("n_opt", "N_opt"))}


def prevalence_grid(p_min: float, p_max: float, step: float) -> List[float]:
    """Prevalences ``p_min + i * step`` up to ``p_max``, computed in decimal arithmetic.

    :param p_min: First prevalence, positive.
    :param p_max: Last admissible prevalence, at most ``0.249790``.
    :param step: Spacing, positive.
    :return: Increasing list of prevalences; ``p_max`` is included when hit exactly.
    :raises ValueError: On an empty or out-of-range grid.
    """
    lo, hi, delta = (Decimal(repr(v)) for v in (p_min, p_max, step))
    if not Decimal(0) < lo < hi <= Decimal(repr(P_CAP)):
        raise ValueError(f"Need 0 < p_min < p_max <= {P_CAP}, got ({p_min}, {p_max})")
    if not delta > 0:
        raise ValueError(f"step must be positive, got {step}")
    grid = []
    i = 0
    while lo + i * delta <= hi:
        grid.append(float(lo + i * delta))
        i += 1
    return grid


def build_row(p: float) -> TableRow:
    """Integer optimum, cost and gain of every scheme at ``p``.

    :param p: Prevalence in ``(0, 0.249790]``.
    :return: Table row.
    """
    prev = Prevalence(p)
    n_a2 = a2_reference_order(prev)
    t_a2 = a2_t(prev, n_a2)
    dorfman = dorfman_optimum(prev).integer_opt
    sterrett = sterrett_optimum(prev).integer_opt
    halving = halving_optimum(prev).integer_opt
    return TableRow(
        p,
        n_a2,
        t_a2,
        1.0 - t_a2,
        dorfman[0],
        dorfman[1],
        1.0 - dorfman[1],
        sterrett[0],
        sterrett[1],
        1.0 - sterrett[1],
        halving[0],
        halving[1],
        1.0 - halving[1],
    )


def _open_for_write(path: str, force: bool) -> TextIO:
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path} already exists; use --force to overwrite")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="")


def write_table(rows: Sequence[TableRow], path: str, force: bool = False) -> None:
    """Write the comparison table as CSV with LF line endings.

    :param rows: Rows in ascending p.
    :param path: Output file.
    :param force: Overwrite an existing file.
    :raises FileExistsError: If ``path`` exists and ``force`` is not set.
    """
    with _open_for_write(path, force) as f:
        writer = csv.DictWriter(f, fieldnames=HEADER, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_record())
    logger.info(f"Wrote {len(rows)} rows to {path}")


def read_table(path: str) -> List[Dict[str, Any]]:
    """Read a comparison table back into numbers.

    :param path: CSV file written by ``write_table``.
    :return: One mapping per row, integers for the size columns and floats otherwise.
    :raises ValueError: If the header does not match.
    """
    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != HEADER:
            raise ValueError(f"Unexpected table header in {path}: {reader.fieldnames}")
        return [
            {k: int(v) if k in _INTEGER_COLUMNS else float(v) for k, v in record.items()}
            for record in reader
        ]


def check_table(path: str, tolerance: float = TABLE_TOLERANCE) -> Dict[str, Any]:
    """Recompute every row of a written table and compare the two.

    :param path: CSV file written by ``write_table``.
    :param tolerance: Allowed absolute difference per real cell.
    :return: Dictionary with ``has_changes``, the DeepDiff result and the row count.
    """
    parsed = read_table(path)
    expected = [build_row(row["p"]).as_dict() for row in parsed]
    diff = DeepDiff(expected, parsed, math_epsilon=tolerance + 1e-12)
    if diff:
        logger.warning(f"Table {path} differs from recomputation")
    return {"has_changes": bool(diff), "diff": diff, "rows": len(parsed)}


def _write_series(path: Path, header: Sequence[str], rows: Sequence[Sequence[float]]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_decimal(v) for v in row])


def _step6_point(q: float) -> List[float]:
    prev = Prevalence.from_q(q)
    return [q, step6_g(prev, 0.0), step6_g(prev, 1.0), step6_h(prev, 0.0), step6_h(prev, 1.0)]


def write_plot_data(out_dir: str, p_grid: Sequence[float]) -> List[str]:
    """Write the series behind the comparison plots.

    :param out_dir: Output directory, created if missing.
    :param p_grid: Prevalences in ``(0, 0.249790]``.
    :return: Paths of the written files.
    """
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    schemes = list(Scheme)

    sizes: List[List[float]] = []
    logs: List[List[float]] = []
    pools: List[List[float]] = []
    for p in p_grid:
        prev = Prevalence(p)
        cohorts = [optimal_cohort_size(s, prev) for s in schemes]
        gains = [1.0 - continuous_optimum(s, prev)[1] for s in schemes]
        sizes.append([p] + cohorts + gains)
        logs.append([-math.log(p)] + [math.log(c) for c in cohorts])
        pools.append([p] + [maximal_pool_size(s, prev) for s in schemes])

    names = [s.value for s in schemes]
    files = {
        "optimal_sizes.csv": (
            ["p"] + [f"N_{n}" for n in names] + [f"gain_{n}" for n in names],
            sizes,
        ),
        "log_sizes.csv": (["neg_log_p"] + [f"log_N_{n}" for n in names], logs),
        "max_pool_sizes.csv": (["p"] + [f"pool_{n}" for n in names], pools),
        "q_n_curve.csv": (
            ["n", "q_n"],
            [list(point) for point in q_n_curve([2.0 + 0.05 * i for i in range(1, 361)])],
        ),
        "step6_curves.csv": (
            ["q", "g_t0", "g_t1", "h_t0", "h_t1"],
            [_step6_point(q) for q in default_step6_grid()],
        ),
    }
    written = []
    for name, (header, rows) in files.items():
        path = target / name
        _write_series(path, header, rows)
        written.append(str(path))
    logger.info(f"Wrote {len(written)} series files to {target}")
    return written


def write_summary(
    out_dir: str, summary: Mapping[str, float], name: str = "summary.txt"
) -> str:
    """Write the comparison summary as ``key=value`` lines."""
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        for key, value in summary.items():
            f.write(f"{key}={format_decimal(value)}\n")
    return str(path)
