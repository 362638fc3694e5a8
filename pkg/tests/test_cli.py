"""
Tests for the command-line interface.
"""

import os
import re
import tempfile

import pytest
from typer.testing import CliRunner

from array_pooling.cli import app

runner = CliRunner()


@pytest.fixture
def out_dir():
    """Create a temporary output directory."""
    with tempfile.TemporaryDirectory() as path:
        yield path


def test_eval_a2():
    """Test evaluating an A2 configuration."""
    result = runner.invoke(app, ["eval", "--scheme", "a2", "--p", "0.1", "--size", "5"])
    assert result.exit_code == 0
    assert "t=0.606440" in result.stdout
    assert "expected_total=" in result.stdout


def test_eval_dorfman():
    """Test evaluating a Dorfman configuration."""
    result = runner.invoke(app, ["eval", "--scheme", "dorfman", "--p", "0.01", "--size", "11"])
    assert result.exit_code == 0
    assert "t=0.19557" in result.stdout


def test_eval_inefficient_a2():
    """Test the warning for an array that loses to individual testing."""
    result = runner.invoke(app, ["eval", "--scheme", "a2", "--p", "0.3", "--size", "5"])
    assert result.exit_code == 0
    assert "warning=inefficient" in result.stdout


def test_eval_usage_errors():
    """Test exit code 2 on invalid input."""
    for scheme, p, size in (
        ("pairs", "0.1", "5"),
        ("a2", "1.5", "5"),
        ("a2", "0.1", "1"),
        ("halving", "0.1", "2.5"),
    ):
        result = runner.invoke(app, ["eval", "--scheme", scheme, "--p", p, "--size", size])
        assert result.exit_code == 2


def test_eval_continuous():
    """Test the continuous scale."""
    result = runner.invoke(
        app, ["eval", "--scheme", "halving", "--p", "0.1", "--size", "2.5", "--continuous"]
    )
    assert result.exit_code == 0
    assert "size=2.500000" in result.stdout


def test_optimize_a2():
    """Test the A2 candidate set at p = 0.01."""
    result = runner.invoke(app, ["optimize", "--scheme", "a2", "--p", "0.01"])
    assert result.exit_code == 0
    assert "candidates=24,25,26" in result.stdout
    assert "n_lower=" in result.stdout
    assert "t_star=" in result.stdout


def test_optimize_sterrett():
    """Test the Sterrett candidate set at p = 0.01."""
    result = runner.invoke(app, ["optimize", "--scheme", "sterrett", "--p", "0.01"])
    assert result.exit_code == 0
    assert "candidates=14,15,16" in result.stdout


def test_optimize_individual_testing():
    """Test the marker above the A2 prevalence cap."""
    result = runner.invoke(app, ["optimize", "--scheme", "a2", "--p", "0.3"])
    assert result.exit_code == 0
    assert "marker=individual_testing_preferred" in result.stdout


def test_optimize_formats():
    """Test the structured and tabular output formats."""
    result = runner.invoke(
        app, ["optimize", "--scheme", "dorfman", "--p", "0.01", "--format", "json"]
    )
    assert result.exit_code == 0
    assert '"integer_opt": 11' in result.stdout
    result = runner.invoke(
        app, ["optimize", "--scheme", "dorfman", "--p", "0.01", "--format", "table"]
    )
    assert result.exit_code == 0
    assert "11" in result.stdout
    result = runner.invoke(app, ["optimize", "--scheme", "dorfman", "--p", "0.01", "-f", "xml"])
    assert result.exit_code == 2


def test_table_write_and_check(out_dir):
    """Test writing a table, checking it and refusing to overwrite."""
    path = os.path.join(out_dir, "table.csv")
    args = ["table", "--p-min", "0.01", "--p-max", "0.03", "--step", "0.01", "--out", path]
    result = runner.invoke(app, args + ["--check"])
    assert result.exit_code == 0
    assert "rows=3" in result.stdout
    assert "has_changes=false" in result.stdout

    assert runner.invoke(app, args).exit_code == 2
    assert runner.invoke(app, args + ["--force"]).exit_code == 0


def test_table_bad_range(out_dir):
    """Test exit code 2 on a prevalence range beyond the cap."""
    path = os.path.join(out_dir, "table.csv")
    result = runner.invoke(
        app, ["table", "--p-min", "0.1", "--p-max", "0.3", "--step", "0.1", "--out", path]
    )
    assert result.exit_code == 2


def test_compare(out_dir):
    """Test the comparison summary and the plot series."""
    result = runner.invoke(
        app, ["compare", "--emit-plot-data", "--out-dir", out_dir, "--points", "3"]
    )
    assert result.exit_code == 0
    assert "crossing_a2_dorfman=0.11" in result.stdout
    assert os.path.exists(os.path.join(out_dir, "summary.txt"))
    assert os.path.exists(os.path.join(out_dir, "optimal_sizes.csv"))


def test_robust_minimax():
    """Test the minimax order for the default upper grid end."""
    result = runner.invoke(app, ["robust", "minimax", "--q-max", "0.996"])
    assert result.exit_code == 0
    assert "n=10\nN=100\n" in result.stdout
    assert "q_max=0.996000" in result.stdout


def test_robust_minimax_calibration():
    """Test that the calibration reports the unreached target order."""
    result = runner.invoke(app, ["robust", "minimax", "--calibrate"])
    assert result.exit_code == 0
    assert "found=false" in result.stdout
    assert "discrepancy=target_order_not_reached" in result.stdout
    assert "n=10\nN=100\n" in result.stdout


def test_robust_bayes():
    """Test the Bayesian order under the default prior."""
    result = runner.invoke(app, ["robust", "bayes", "--n-min", "5", "--n-max", "40"])
    assert result.exit_code == 0
    assert "n=7\nN=49\n" in result.stdout


def test_robust_bayes_tight_quadrature():
    """Test the Bayesian order at a tight quadrature tolerance."""
    result = runner.invoke(
        app, ["robust", "bayes", "--n-min", "5", "--n-max", "9", "--quad-tol", "1e-10"]
    )
    assert result.exit_code == 0
    assert "n=7\nN=49\n" in result.stdout


def test_robust_bayes_bad_prior():
    """Test exit code 2 on a prior reaching below q_5."""
    result = runner.invoke(app, ["robust", "bayes", "--prior-lo", "0.7", "--n-max", "10"])
    assert result.exit_code == 2


def test_verify():
    """Test the verification suite without the enumeration oracle."""
    result = runner.invoke(app, ["verify", "--samples", "20", "--no-oracle"])
    assert result.exit_code == 0
    assert "check=critical_pair" in result.stdout
    assert "pass=false" not in result.stdout


def test_simulate():
    """Test a seeded simulation."""
    args = ["simulate", "--scheme", "dorfman", "--p", "0.1", "--size", "4", "--trials", "1000"]
    first = runner.invoke(app, args + ["--seed", "5"])
    second = runner.invoke(app, args + ["--seed", "5"])
    assert first.exit_code == 0
    assert "trials=1000" in first.stdout
    assert "analytic_t=" in first.stdout
    records = [
        [line for line in r.stdout.splitlines() if re.match(r"^\w+=", line)]
        for r in (first, second)
    ]
    assert "mean=" in "\n".join(records[0])
    assert records[0] == records[1]


def test_simulate_usage_error():
    """Test exit code 2 on a non-positive trial count."""
    result = runner.invoke(
        app, ["simulate", "--scheme", "dorfman", "--p", "0.1", "--size", "4", "--trials", "0"]
    )
    assert result.exit_code == 2


def test_missing_config_file():
    """Test exit code 3 when the configuration file cannot be read."""
    result = runner.invoke(app, ["--config", "/nonexistent/config.yaml", "verify"])
    assert result.exit_code == 3
