"""
Command-line interface for array-pooling.
"""

import logging
import math
import sys
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional

import typer
from rich.console import Console
from rich.table import Table

from array_pooling.config import Config
from array_pooling.montecarlo import estimate_t
from array_pooling.optimal import (
    P_CAP,
    comparison_summary,
    optimum,
    q_five,
)
from array_pooling.robust import (
    PriorSpec,
    bayes_choice,
    calibrate_q_max,
    minimax_choice,
    q_grid,
)
from array_pooling.schemes import (
    Prevalence,
    Scale,
    Scheme,
    SchemeSize,
    evaluate,
    tests_per_person,
)
from array_pooling.table import (
    build_row,
    check_table,
    prevalence_grid,
    write_plot_data,
    write_summary,
    write_table,
)
from array_pooling.utils import format_decimal, format_records, format_value, setup_logging
from array_pooling.verify import run_suite

logger = logging.getLogger(__name__)

EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_IO = 3

# Create Typer app
app = typer.Typer(help="Optimal square-array and comparison group testing configurations.")
robust_app = typer.Typer(help="Choose an array order when the prevalence is unknown.")

# Add subcommands
app.add_typer(robust_app, name="robust")

# Global state for configuration
config_instance: Optional[Config] = None
console = Console()

FORMAT_HELP = "Output format (records, json, yaml, table)."
SCHEME_HELP = "Scheme (a2, dorfman, sterrett, halving)."
SIZE_HELP = "Array order for A2, pool size otherwise."


def get_config(config_path: Optional[str] = None) -> Config:
    """Get or create a Config instance.

    :param config_path: Path to the configuration file.
    :return: Config instance.
    """
    global config_instance
    if config_instance is None:
        try:
            config_instance = Config(config_path)
        except OSError as e:
            logger.error(f"Failed to load configuration: {e}")
            sys.exit(EXIT_IO)
        except Exception as e:
            logger.error(f"Failed to load configuration: {e}")
            sys.exit(EXIT_USAGE)
    return config_instance


@contextmanager
def handle_errors(action: str) -> Iterator[None]:
    """Map library exceptions to exit codes: usage 2, I/O 3, anything else 1."""
    try:
        yield
    except FileExistsError as e:
        logger.error(f"Failed to {action}: {e}")
        sys.exit(EXIT_USAGE)
    except ValueError as e:
        logger.error(f"Invalid input to {action}: {e}")
        sys.exit(EXIT_USAGE)
    except OSError as e:
        logger.error(f"Failed to {action}: {e}")
        sys.exit(EXIT_IO)
    except Exception as e:
        logger.exception(f"Failed to {action}: {e}")
        sys.exit(1)


def emit(records: List[Dict[str, Any]], output_format: str = "records", title: str = "") -> None:
    """Print records in the requested format.

    :param records: Result records.
    :param output_format: Output format (records, json, yaml, table).
    :param title: Table title for the rich output.
    """
    output_format = output_format.lower()
    if output_format not in ("records", "json", "yaml", "table"):
        logger.error(f"Unknown output format '{output_format}'")
        sys.exit(EXIT_USAGE)
    if output_format == "table":
        columns: List[str] = []
        for record in records:
            columns.extend(k for k in record if k not in columns)
        table = Table(title=title or None)
        for column in columns:
            table.add_column(column)
        for record in records:
            table.add_row(*(format_value(record.get(c, "")) for c in columns))
        console.print(table)
    else:
        typer.echo(format_records(records, output_format))


def _scheme(value: str) -> Scheme:
    try:
        return Scheme(value.lower())
    except ValueError:
        raise ValueError(f"Unknown scheme '{value}'; choose from {[s.value for s in Scheme]}")


@app.callback()
def main(
    config: Optional[str] = typer.Option(
        None, "--config", "-c", help="Path to configuration file."
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable verbose logging."),
):
    """Optimal square-array and comparison group testing configurations.

    :param config: Path to configuration file.
    :param verbose: Enable verbose logging.
    """
    global config_instance
    setup_logging(verbose)
    config_instance = None
    get_config(config)


@app.command("eval")
def eval_config(
    scheme: str = typer.Option(..., "--scheme", "-s", help=SCHEME_HELP),
    p: float = typer.Option(..., "--p", help="Prevalence in (0, 1)."),
    size: float = typer.Option(..., "--size", "-n", help=SIZE_HELP),
    continuous: bool = typer.Option(
        False, "--continuous", help="Evaluate the continuous-scale cost at a real size."
    ),
):
    """Evaluate tests per person of one configuration.

    :param scheme: Scheme name.
    :param p: Prevalence.
    :param size: Array order or pool size.
    :param continuous: Use the continuous scale.
    """
    with handle_errors("evaluate configuration"):
        chosen = _scheme(scheme)
        if continuous:
            config = SchemeSize(chosen, size, Scale.CONTINUOUS)
        elif size != int(size):
            raise ValueError(f"Integer scale requires an integral size, got {size}")
        else:
            config = SchemeSize(chosen, int(size))
        point = evaluate(Prevalence(p), config)
        records: List[Dict[str, Any]] = [
            {
                "scheme": config.scheme,
                "p": p,
                "size": config.size,
                "t": point.t,
                "g": point.g,
                "gain": point.gain,
                "expected_total": point.expected_total,
            }
        ]
        if config.scheme is Scheme.A2 and point.t > 1.0:
            logger.warning(f"A2 is inefficient at p={p}: t={point.t:.6f} > 1")
            records.append({"warning": "inefficient"})
        emit(records)


def _optimize_record(scheme: Scheme, p: float, exhaustive: bool) -> Dict[str, Any]:
    prev = Prevalence(p)
    result = optimum(scheme, prev, exhaustive=exhaustive)
    record: Dict[str, Any] = {
        "scheme": scheme,
        "p": p,
        "candidates": list(result.candidates),
        "integer_opt": result.integer_opt[0],
        "t_integer": result.integer_opt[1],
        "gain_integer": 1.0 - result.integer_opt[1],
        "in_candidates": result.in_candidates,
    }
    if result.scan_opt is not None:
        record["scan_opt"] = result.scan_opt[0]
    if result.continuous_opt is not None:
        record["continuous_opt"] = result.continuous_opt[0]
        record["t_continuous"] = result.continuous_opt[1]
    if result.efficiency is not None:
        record["n_lower"] = result.efficiency.n_lower
        record["n_upper"] = result.efficiency.n_upper
    if result.offset_t is not None:
        record["t_star"] = result.offset_t
    if result.reference_band is not None:
        record["band"] = list(result.reference_band)
    if result.individual_testing_preferred:
        record["marker"] = "individual_testing_preferred"
    record["ties"] = "smaller_size"
    return record


@app.command("optimize")
def optimize(
    scheme: str = typer.Option(..., "--scheme", "-s", help=SCHEME_HELP),
    p: float = typer.Option(..., "--p", help="Prevalence in (0, 1)."),
    exhaustive: bool = typer.Option(
        False, "--exhaustive", help="Confirm the candidate set by an exhaustive scan."
    ),
    format: str = typer.Option("records", "--format", "-f", help=FORMAT_HELP),
):
    """Print the candidate set, integer and continuous optima of a scheme.

    :param scheme: Scheme name.
    :param p: Prevalence.
    :param exhaustive: Run the exhaustive scan as well.
    :param format: Output format.
    """
    with handle_errors("optimize"):
        chosen = _scheme(scheme)
        if chosen is Scheme.A2 and p >= 1.0 - q_five():
            logger.info(f"p={p} is beyond {P_CAP}: individual testing preferred for A2")
        emit([_optimize_record(chosen, p, exhaustive)], format, title="Optimal configuration")


@app.command("table")
def table(
    p_min: Optional[float] = typer.Option(None, "--p-min", help="Smallest prevalence."),
    p_max: Optional[float] = typer.Option(None, "--p-max", help="Largest prevalence."),
    step: Optional[float] = typer.Option(None, "--step", help="Prevalence step."),
    out: str = typer.Option(..., "--out", "-o", help="Output CSV file."),
    force: bool = typer.Option(False, "--force", help="Overwrite an existing file."),
    check: bool = typer.Option(False, "--check", help="Re-read the table and compare it."),
):
    """Write the comparison table of optimal pool sizes.

    :param p_min: Smallest prevalence.
    :param p_max: Largest prevalence.
    :param step: Prevalence step.
    :param out: Output CSV file.
    :param force: Overwrite an existing file.
    :param check: Re-read the written table and compare it with recomputation.
    """
    settings = get_config().get_table_settings()
    with handle_errors("write table"):
        grid = prevalence_grid(
            settings["p_min"] if p_min is None else p_min,
            settings["p_max"] if p_max is None else p_max,
            settings["step"] if step is None else step,
        )
        write_table([build_row(p) for p in grid], out, force)
        typer.echo(f"rows={len(grid)}\nout={out}")
        if check:
            result = check_table(out)
            changed = str(result["has_changes"]).lower()
            typer.echo(f"check_rows={result['rows']}\nhas_changes={changed}")
            if result["has_changes"]:
                typer.echo(result["diff"].pretty())
                sys.exit(EXIT_VERIFICATION)


@app.command("compare")
def compare(
    emit_plot_data: bool = typer.Option(
        False, "--emit-plot-data", help="Write the series files behind the comparison plots."
    ),
    out_dir: Optional[str] = typer.Option(None, "--out-dir", help="Output directory."),
    points: int = typer.Option(200, "--points", help="Log-spaced prevalences in the series."),
):
    """Crossing points, maximal gain gaps and slopes of the four schemes.

    :param emit_plot_data: Write series files.
    :param out_dir: Output directory; defaults to the configured one.
    :param points: Number of prevalences in the series.
    """
    with handle_errors("compare schemes"):
        summary = comparison_summary(get_config().get_tolerance())
        emit([summary])
        target = out_dir if out_dir is not None else get_config().get_output_dir()
        written = [write_summary(target, summary)]
        if emit_plot_data:
            settings = get_config().get_table_settings()
            lo, hi = math.log(settings["p_min"]), math.log(settings["p_max"])
            grid = [math.exp(lo + (hi - lo) * i / (points - 1)) for i in range(points)]
            written.extend(write_plot_data(target, grid))
        for path in written:
            typer.echo(f"wrote={path}")


def _robust_record(choice: Any, **parameters: Any) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "criterion": choice.criterion,
        "n": choice.chosen_n,
        "N": choice.cohort_size,
        "value": choice.criterion_value,
    }
    record.update(parameters)
    record["grid"] = choice.grid.replace(" ", "")
    return record


@robust_app.command("minimax")
def robust_minimax(
    q_max: Optional[float] = typer.Option(None, "--q-max", help="Upper end of the q grid."),
    grid_step: Optional[float] = typer.Option(None, "--grid-step", help="Spacing of the q grid."),
    n_min: Optional[int] = typer.Option(None, "--n-min", help="Smallest array order."),
    n_max: Optional[int] = typer.Option(None, "--n-max", help="Largest array order."),
    calibrate: bool = typer.Option(
        False, "--calibrate", help="Scan the calibration band for the upper grid end."
    ),
    format: str = typer.Option("records", "--format", "-f", help=FORMAT_HELP),
):
    """Minimise the worst excess tests per person over a q grid.

    :param q_max: Upper end of the q grid.
    :param grid_step: Spacing of the q grid.
    :param n_min: Smallest array order.
    :param n_max: Largest array order.
    :param calibrate: Run the upper-end calibration.
    :param format: Output format.
    """
    settings = get_config().get_robust_settings()
    with handle_errors("choose minimax order"):
        step = settings["grid_step"] if grid_step is None else grid_step
        orders = range(
            settings["n_min"] if n_min is None else n_min,
            (settings["n_max"] if n_max is None else n_max) + 1,
        )
        records = []
        if calibrate:
            result = calibrate_q_max(
                (settings["calibration_lo"], settings["calibration_hi"]),
                settings["calibration_step"],
                grid_step=step,
                n_range=orders,
            )
            calibration: Dict[str, Any] = {
                "calibrated_q_max": result.q_max,
                "target": result.target,
                "found": result.found,
                "choices": [f"{q:.4f}:{n}" for q, n in result.choices],
            }
            if not result.found:
                calibration["discrepancy"] = "target_order_not_reached"
            records.append(calibration)
            if q_max is None and result.q_max is not None:
                q_max = result.q_max
        upper = settings["q_max"] if q_max is None else q_max
        choice = minimax_choice(q_grid(upper, step), orders)
        record = _robust_record(
            choice, q_max=upper, grid_step=step, n_min=orders[0], n_max=orders[-1]
        )
        records.insert(0, record)
        emit(records, format, title="Minimax choice")


@robust_app.command("bayes")
def robust_bayes(
    prior_lo: Optional[float] = typer.Option(None, "--prior-lo", help="Prior lower end."),
    prior_hi: Optional[float] = typer.Option(None, "--prior-hi", help="Prior upper end."),
    quad_tol: Optional[float] = typer.Option(None, "--quad-tol", help="Quadrature tolerance."),
    n_min: Optional[int] = typer.Option(None, "--n-min", help="Smallest array order."),
    n_max: Optional[int] = typer.Option(None, "--n-max", help="Largest array order."),
    linear: bool = typer.Option(False, "--linear", help="Average the loss instead of its square."),
    format: str = typer.Option("records", "--format", "-f", help=FORMAT_HELP),
):
    """Minimise the prior-expected (squared) excess tests per person.

    :param prior_lo: Lower end of the uniform prior on q.
    :param prior_hi: Upper end of the uniform prior on q.
    :param quad_tol: Quadrature tolerance.
    :param n_min: Smallest array order.
    :param n_max: Largest array order.
    :param linear: Use the unsquared loss.
    :param format: Output format.
    """
    settings = get_config().get_robust_settings()
    with handle_errors("choose Bayesian order"):
        prior = PriorSpec(
            settings["prior_lo"] if prior_lo is None else prior_lo,
            settings["prior_hi"] if prior_hi is None else prior_hi,
        )
        tol = settings["quad_tol"] if quad_tol is None else quad_tol
        orders = range(
            settings["n_min"] if n_min is None else n_min,
            (settings["n_max"] if n_max is None else n_max) + 1,
        )
        choice = bayes_choice(prior, orders, tol, squared=not linear)
        record = _robust_record(
            choice,
            prior_lo=prior.lo,
            prior_hi=prior.hi,
            quad_tol=f"{tol:g}",
            n_min=orders[0],
            n_max=orders[-1],
        )
        emit([record], format, title="Bayesian choice")


@app.command("verify")
def verify(
    samples: int = typer.Option(1000, "--samples", help="Random prevalences for the window check."),
    seed: int = typer.Option(1, "--seed", help="Seed of the random prevalences."),
    no_oracle: bool = typer.Option(False, "--no-oracle", help="Skip the enumeration oracle."),
    format: str = typer.Option("records", "--format", "-f", help=FORMAT_HELP),
):
    """Run the verification suite; exits 1 if any check fails.

    :param samples: Random prevalences for the candidate-window check.
    :param seed: Seed of the random prevalences.
    :param no_oracle: Skip the enumeration oracle.
    :param format: Output format.
    """
    with handle_errors("verify"):
        reports = run_suite(samples, seed, include_oracle=not no_oracle)
        records = [
            {
                "check": r.check,
                "grid": r.grid.replace(" ", ""),
                "worst_residual": f"{r.worst_residual:.3e}",
                "pass": r.passed,
            }
            for r in reports
        ]
        emit(records, format, title="Verification")
    if not all(r.passed for r in reports):
        sys.exit(EXIT_VERIFICATION)


@app.command("simulate")
def simulate(
    scheme: str = typer.Option(..., "--scheme", "-s", help=SCHEME_HELP),
    p: float = typer.Option(..., "--p", help="Prevalence in (0, 1)."),
    size: int = typer.Option(..., "--size", "-n", help=SIZE_HELP),
    trials: Optional[int] = typer.Option(None, "--trials", help="Number of simulated runs."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Generator key."),
):
    """Estimate tests per person by simulation and compare with the formula.

    :param scheme: Scheme name.
    :param p: Prevalence.
    :param size: Array order or pool size.
    :param trials: Number of simulated runs.
    :param seed: Generator key.
    """
    settings = get_config().get_simulation_settings()
    with handle_errors("simulate"):
        chosen = _scheme(scheme)
        prev = Prevalence(p)
        report = estimate_t(
            prev,
            chosen,
            size,
            settings["trials"] if trials is None else trials,
            settings["seed"] if seed is None else seed,
        )
        analytic = tests_per_person(prev, SchemeSize(chosen, size))
        z = (
            (report.mean_tests_per_person - analytic) / report.std_error
            if report.std_error > 0
            else math.nan
        )
        emit(
            [
                {
                    "scheme": report.scheme,
                    "p": report.p,
                    "size": report.size,
                    "trials": report.trials,
                    "seed": report.seed,
                    "mean": report.mean_tests_per_person,
                    "std_error": report.std_error,
                    "std_error_defined": report.std_error_defined,
                    "analytic_t": analytic,
                    "z": format_decimal(z, 3) if not math.isnan(z) else "nan",
                }
            ]
        )
