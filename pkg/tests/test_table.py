"""
Tests for the table module.
"""

import csv
import os
import tempfile

import pytest

from array_pooling.table import (
    HEADER,
    build_row,
    check_table,
    prevalence_grid,
    read_table,
    write_plot_data,
    write_summary,
    write_table,
)


@pytest.fixture
def out_dir():
    """Create a temporary output directory."""
    with tempfile.TemporaryDirectory() as path:
        yield path


def test_prevalence_grid():
    """Test decimal stepping of the prevalence grid."""
    assert prevalence_grid(0.01, 0.03, 0.01) == [0.01, 0.02, 0.03]
    grid = prevalence_grid(1e-4, 0.249790, 1e-4)
    assert len(grid) == 2497
    assert grid[-1] == 0.2497


def test_prevalence_grid_validation():
    """Test rejected ranges."""
    with pytest.raises(ValueError):
        prevalence_grid(0.02, 0.01, 0.01)
    with pytest.raises(ValueError):
        prevalence_grid(0.01, 0.3, 0.01)
    with pytest.raises(ValueError):
        prevalence_grid(0.01, 0.02, 0.0)


def test_build_row():
    """Test the optima in one row."""
    row = build_row(0.01)
    assert row.n_opt_a2 in (24, 25, 26)
    assert row.N_opt_d == 11
    assert row.t_d == pytest.approx(0.195570, abs=1e-5)
    assert row.gain_a2 == pytest.approx(1.0 - row.t_a2)
    assert row.t_a2 < row.t_s < row.t_d
    assert list(row.as_dict()) == HEADER


def test_write_and_check_table(out_dir):
    """Test that a written table matches its recomputation."""
    path = os.path.join(out_dir, "table.csv")
    write_table([build_row(p) for p in (0.01, 0.02)], path)

    with open(path, newline="") as f:
        content = f.read()
    assert "\r" not in content
    assert content.splitlines()[0] == ",".join(HEADER)
    assert content.splitlines()[1].startswith("0.010000,")

    rows = read_table(path)
    assert len(rows) == 2
    assert isinstance(rows[0]["N_opt_h"], int)

    result = check_table(path)
    assert not result["has_changes"]
    assert result["rows"] == 2


def test_check_table_detects_changes(out_dir):
    """Test that a tampered cell is reported."""
    path = os.path.join(out_dir, "table.csv")
    write_table([build_row(0.05)], path)
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    rows[0]["t_d"] = "0.999999"
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)

    result = check_table(path)
    assert result["has_changes"]
    assert "values_changed" in result["diff"]


def test_write_table_refuses_overwrite(out_dir):
    """Test that an existing file is kept unless forced."""
    path = os.path.join(out_dir, "table.csv")
    write_table([build_row(0.01)], path)
    with pytest.raises(FileExistsError):
        write_table([build_row(0.02)], path)
    write_table([build_row(0.02)], path, force=True)
    assert read_table(path)[0]["p"] == 0.02


def test_read_table_header_mismatch(out_dir):
    """Test that a foreign CSV is rejected."""
    path = os.path.join(out_dir, "other.csv")
    with open(path, "w") as f:
        f.write("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_table(path)


def test_write_summary(out_dir):
    """Test the key=value summary file."""
    path = write_summary(out_dir, {"crossing_a2_dorfman": 0.1155891234, "slope_a2": 1.3})
    with open(path) as f:
        lines = f.read().splitlines()
    assert lines == ["crossing_a2_dorfman=0.115589", "slope_a2=1.300000"]


def test_write_plot_data(out_dir):
    """Test the series files behind the comparison plots."""
    written = write_plot_data(out_dir, [0.01, 0.05])
    names = sorted(os.path.basename(p) for p in written)
    assert names == [
        "log_sizes.csv",
        "max_pool_sizes.csv",
        "optimal_sizes.csv",
        "q_n_curve.csv",
        "step6_curves.csv",
    ]
    with open(os.path.join(out_dir, "optimal_sizes.csv")) as f:
        rows = list(csv.reader(f))
    assert rows[0][:5] == ["p", "N_a2", "N_dorfman", "N_sterrett", "N_halving"]
    assert len(rows) == 3
    with open(os.path.join(out_dir, "q_n_curve.csv")) as f:
        assert len(f.read().splitlines()) == 361
