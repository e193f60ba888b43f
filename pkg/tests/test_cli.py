"""
Unit tests for the seesaw_lt.cli module.

This module tests the command-line interface functionality.
"""

from pathlib import Path
from typing import Any, List, Protocol

import pytest

# Import MockFixture from conftest to avoid import errors
from tests.conftest import MockFixture

from seesaw_lt.cli import EXIT_DIVERGED, EXIT_GRADCHECK_FAILED, EXIT_INVALID, app, cli_main
from seesaw_lt.exceptions import DivergenceError
from seesaw_lt.gradcheck import SuiteResult
from seesaw_lt.models import Metrics


class CliRunner(Protocol):
    """Protocol for typer.testing.CliRunner."""
    def invoke(self, app: Any, args: List[str], **kwargs: Any) -> Any: ...


@pytest.fixture
def cli_runner() -> Any:
    """Create a CLI runner for testing."""
    from typer.testing import CliRunner as TyperCliRunner
    return TyperCliRunner()


class TestGenCommand:
    """Tests for dataset generation."""

    def test_writes_both_splits(self, cli_runner: CliRunner, tmp_path: Path) -> None:
        result = cli_runner.invoke(app, ["gen", "--classes", "5", "--seed", "1", "--output-dir", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "train.csv").exists()
        assert (tmp_path / "test.csv").exists()
        assert (tmp_path / "train.csv").read_text(encoding="utf-8").startswith("label,f0,")

    def test_invalid_ratio(self, cli_runner: CliRunner, tmp_path: Path) -> None:
        result = cli_runner.invoke(app, ["gen", "--ratio", "0.5", "--output-dir", str(tmp_path / "out")])
        assert result.exit_code == EXIT_INVALID
        assert not (tmp_path / "out").exists()


class TestTrainCommand:
    """Tests for single training runs."""

    def test_writes_results(self, cli_runner: CliRunner, config_file: Path) -> None:
        result = cli_runner.invoke(app, ["train", "--config", str(config_file)])
        assert result.exit_code == 0, result.output
        out = config_file.parent / "out"
        for name in ("metrics.csv", "telemetry.csv", "checkpoint.txt", "counts.txt"):
            assert (out / name).exists(), name
        metrics = Metrics.load_csv(out / "metrics.csv")
        assert len(metrics.loss_curve) == 2
        assert len(metrics.per_class_acc) == 6

    def test_ce_writes_no_counts(self, cli_runner: CliRunner, config_file: Path) -> None:
        result = cli_runner.invoke(app, ["train", "--config", str(config_file), "--loss", "ce"])
        assert result.exit_code == 0, result.output
        assert not (config_file.parent / "out" / "counts.txt").exists()

    def test_missing_config_writes_nothing(self, cli_runner: CliRunner, tmp_path: Path) -> None:
        result = cli_runner.invoke(app, [
            "train", "--config", str(tmp_path / "missing.cfg"), "--output-dir", str(tmp_path / "out"),
        ])
        assert result.exit_code == EXIT_INVALID
        assert not (tmp_path / "out").exists()

    def test_unknown_loss(self, cli_runner: CliRunner, config_file: Path) -> None:
        result = cli_runner.invoke(app, ["train", "--config", str(config_file), "--loss", "focal"])
        assert result.exit_code == EXIT_INVALID
        assert not (config_file.parent / "out").exists()

    def test_divergence(self, cli_runner: CliRunner, config_file: Path, mocker: MockFixture) -> None:
        mocker.patch("seesaw_lt.cli.run_train", side_effect=DivergenceError(0, 3, float("inf")))
        result = cli_runner.invoke(app, ["train", "--config", str(config_file)])
        assert result.exit_code == EXIT_DIVERGED
        assert not (config_file.parent / "out").exists()

    def test_objectness_checkpoint(self, cli_runner: CliRunner, config_file: Path) -> None:
        with open(config_file, "a", encoding="utf-8") as f:
            f.write("background_fraction = 0.2\n")
        result = cli_runner.invoke(app, ["train", "--config", str(config_file), "--objectness", "--normalized"])
        assert result.exit_code == 0, result.output
        checkpoint = (config_file.parent / "out" / "checkpoint.txt").read_text(encoding="utf-8")
        assert "classifier" in checkpoint
        assert "objectness" in checkpoint


class TestSweepCommand:
    """Tests for hyper-parameter sweeps."""

    def test_writes_sweep_csv(self, cli_runner: CliRunner, config_file: Path) -> None:
        result = cli_runner.invoke(app, ["sweep", "--config", str(config_file), "--param", "q", "--values", "0.5,2"])
        assert result.exit_code == 0, result.output
        lines = (config_file.parent / "out" / "sweep_q.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "param,value,seed,overall_acc,rare_acc,common_acc,frequent_acc"
        assert len(lines) == 1 + 2 + 2

    def test_unknown_param(self, cli_runner: CliRunner, config_file: Path) -> None:
        result = cli_runner.invoke(app, ["sweep", "--config", str(config_file), "--param", "lr"])
        assert result.exit_code == EXIT_INVALID

    def test_bad_values(self, cli_runner: CliRunner, config_file: Path) -> None:
        result = cli_runner.invoke(app, ["sweep", "--config", str(config_file), "--values", "a,b"])
        assert result.exit_code == EXIT_INVALID

    def test_tau_needs_normalized_head(self, cli_runner: CliRunner, config_file: Path) -> None:
        args = ["sweep", "--config", str(config_file), "--param", "tau", "--values", "10,30"]
        result = cli_runner.invoke(app, args)
        assert result.exit_code == EXIT_INVALID
        assert not (config_file.parent / "out" / "sweep_tau.csv").exists()

        result = cli_runner.invoke(app, [*args, "--normalized"])
        assert result.exit_code == 0, result.output
        lines = (config_file.parent / "out" / "sweep_tau.csv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1 + 2 + 2


class TestGradcheckCommand:
    """Tests for the gradient check command."""

    def test_passes(self, cli_runner: CliRunner) -> None:
        result = cli_runner.invoke(app, ["gradcheck", "--trials", "3"])
        assert result.exit_code == 0, result.output
        assert "max relative error" in result.output

    def test_failure_exit_code(self, cli_runner: CliRunner, mocker: MockFixture) -> None:
        mocker.patch(
            "seesaw_lt.cli.run_gradcheck",
            return_value=[SuiteResult("ce_loss", 3, 1e-9, 1e-6), SuiteResult("seesaw_loss", 3, 0.5, 1e-6)],
        )
        result = cli_runner.invoke(app, ["gradcheck", "--trials", "3"])
        assert result.exit_code == EXIT_GRADCHECK_FAILED

    def test_zero_trials(self, cli_runner: CliRunner) -> None:
        assert cli_runner.invoke(app, ["gradcheck", "--trials", "0"]).exit_code == EXIT_INVALID


class TestCompareCommand:
    """Tests for paired comparisons."""

    def test_writes_compare_csv(self, cli_runner: CliRunner, config_file: Path) -> None:
        result = cli_runner.invoke(app, ["compare", "--config", str(config_file), "--seeds", "2"])
        assert result.exit_code == 0, result.output
        lines = (config_file.parent / "out" / "compare.csv").read_text(encoding="utf-8").splitlines()
        assert [line.split(",")[0] for line in lines[1:]] == ["5", "6", "mean"]


class TestCliMain:
    """Tests for the exit-code returning entry point."""

    def test_success(self) -> None:
        assert cli_main(["gradcheck", "--trials", "2"]) == 0

    def test_invalid_config(self, tmp_path: Path) -> None:
        assert cli_main(["train", "--config", str(tmp_path / "missing.cfg")]) == EXIT_INVALID

    def test_unknown_option(self) -> None:
        assert cli_main(["gradcheck", "--bogus"]) == EXIT_INVALID

    def test_gradcheck_failure(self, mocker: MockFixture) -> None:
        mocker.patch("seesaw_lt.cli.run_gradcheck", return_value=[SuiteResult("ce_loss", 1, 1.0, 1e-6)])
        assert cli_main(["gradcheck"]) == EXIT_GRADCHECK_FAILED
