"""
Tests for the command line
"""

import pytest

from gpwtdg import harness
from gpwtdg.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main
from gpwtdg.config import THREADS_ENV
from gpwtdg.harness import CSV_COLUMNS, read_csv
from gpwtdg.solver import SingularSystemError
from .utils import write_text

# pylint: disable=redefined-outer-name

LABEL = "constant-k10-n1-q1-g1h3-robin"


@pytest.fixture
def solve_args(tmp_path, monkeypatch):
    """
    Arguments for a two level plane wave study, single threaded
    """
    monkeypatch.setenv(THREADS_ENV, "1")
    return [
        "solve",
        "--problem",
        "constant",
        "--kappa",
        "10",
        "--n",
        "1",
        "--q",
        "1",
        "--levels",
        "2",
        "--out",
        str(tmp_path),
    ]


def test_solve(tmp_path, solve_args, capsys):
    """
    solve writes the CSV table and the plot
    """
    assert main(solve_args) == EXIT_OK
    records = read_csv(tmp_path / f"{LABEL}.csv")
    assert [r.ndof for r in records] == [24, 96]
    assert all(r.rel_l2 <= 1e-8 for r in records)
    assert (tmp_path / f"{LABEL}.svg").exists()
    out = capsys.readouterr().out
    assert "✅ 1 studies complete" in out


def test_invalid_value(solve_args, capsys):
    """
    Out of range values exit with the configuration code
    """
    assert main(solve_args + ["--n", "0"]) == EXIT_CONFIG
    assert "❌ Invalid configuration" in capsys.readouterr().out


@pytest.mark.parametrize(
    "extra",
    [["--problem", "bessel"], ["--kappa", "abc"], ["--levels", "2.5"], ["--colour"]],
)
def test_unparsable_arguments(solve_args, extra, capsys):
    """
    Arguments argparse cannot parse exit with the configuration code
    """
    assert main(solve_args + extra) == EXIT_CONFIG
    assert "❌ gpwtdg" in capsys.readouterr().out


def test_missing_command(capsys):
    """
    A subcommand is required
    """
    assert main([]) == EXIT_CONFIG
    assert "❌" in capsys.readouterr().out


def test_help_exits_cleanly():
    """
    --help still exits with status 0
    """
    with pytest.raises(SystemExit) as info:
        main(["solve", "--help"])
    assert info.value.code == 0


def test_unknown_preset(tmp_path, capsys):
    """
    Unknown presets exit with the configuration code
    """
    assert main(["sweep", "--preset", "nope", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "❌ Unknown preset" in capsys.readouterr().out


def test_missing_mesh(tmp_path, solve_args, capsys):
    """
    A missing mesh file exits with the configuration code
    """
    args = solve_args + ["--mesh", str(tmp_path / "missing.mesh")]
    assert main(args) == EXIT_CONFIG
    assert "❌ Mesh file not found" in capsys.readouterr().out


@pytest.mark.parametrize(
    "text, message",
    [
        ("3 1\n0 0\n0 1\n1 0\n0 1 2\n", "non-positive signed area"),
        ("3 1\n0 0\n1 0\n0 1\n", "truncated"),
    ],
    ids=["clockwise", "truncated"],
)
def test_malformed_mesh(tmp_path, solve_args, text, message, capsys):
    """
    A malformed mesh file exits with the configuration code
    """
    path = write_text(tmp_path / "bad.mesh", text)
    assert main(solve_args + ["--mesh", str(path)]) == EXIT_CONFIG
    assert message in capsys.readouterr().out


def test_argument_out_of_range(solve_args, capsys):
    """
    Exact solutions evaluated outside their range exit with the configuration code
    """
    args = solve_args + ["--problem", "airy", "--kappa", "200"]
    assert main(args) == EXIT_CONFIG
    assert "Airy argument" in capsys.readouterr().out


def test_solver_failure(tmp_path, solve_args, monkeypatch, capsys):
    """
    A singular system exits with the solver code after writing outputs
    """

    def failing(system, **_kwargs):
        raise SingularSystemError(f"❌ Singular matrix of size {system.ndof}")

    monkeypatch.setattr(harness, "solve_direct", failing)
    assert main(solve_args) == EXIT_SOLVER
    csv_path = tmp_path / f"{LABEL}.csv"
    assert csv_path.read_text(encoding="utf-8") == ",".join(CSV_COLUMNS) + "\n"
    assert (tmp_path / f"{LABEL}.svg").exists()
    out = capsys.readouterr().out
    assert "level 0" in out
    assert "studies complete" not in out
