"""
Command-line interface for seesaw_lt.

This module provides the `seesaw-lt` command: dataset generation, single
training runs, hyper-parameter sweeps, finite-difference gradient checks and
paired CE/Seesaw comparisons.
"""

import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Import package modules first
from .app import run_compare, run_gen, run_sweep, run_train
from .config import ExperimentConfig, load_settings
from .data import GROUP_NAMES
from .exceptions import ConfigurationError, DataError, DivergenceError, LossError, NumericsError
from .gradcheck import DEFAULT_TOLERANCE, run_gradcheck
from .models import COMPARE_KEYS

try:
    import typer  # type: ignore

    try:
        # Newer typer vendors click; its exceptions are not click's.
        from typer import _click as click  # type: ignore
    except ImportError:
        import click  # type: ignore
    from rich.console import Console  # type: ignore
    from rich.logging import RichHandler  # type: ignore
    from rich.progress import Progress, SpinnerColumn, TextColumn  # type: ignore
    from rich.table import Table  # type: ignore
except ImportError:
    print("CLI dependencies not installed. Please install with: pip install typer rich")
    sys.exit(1)

EXIT_INVALID = 1
EXIT_DIVERGED = 2
EXIT_GRADCHECK_FAILED = 3

DEFAULT_SWEEP_VALUES: Dict[str, str] = {
    "p": "0.2,0.4,0.6,0.8,1.0,1.2",
    "q": "0.5,1.0,1.5,2.0,2.5,3.0",
    "tau": "5,10,20,30,40",
}


# Type helpers for typer - using simple functions with type ignores
def path_option(default: Any, help_text: str) -> Optional[Path]:
    """Helper to properly type optional Path options."""
    return typer.Option(default, help=help_text)  # type: ignore

def str_option(default: Any, help_text: str) -> Optional[str]:
    """Helper to properly type str options."""
    return typer.Option(default, help=help_text)  # type: ignore

def float_option(default: Any, help_text: str) -> Optional[float]:
    """Helper to properly type float options."""
    return typer.Option(default, help=help_text)  # type: ignore

def int_option(default: Any, help_text: str) -> Optional[int]:
    """Helper to properly type int options."""
    return typer.Option(default, help=help_text)  # type: ignore

def bool_option(default: Any, help_text: str) -> Optional[bool]:
    """Helper to properly type bool options."""
    return typer.Option(default, help=help_text)  # type: ignore


# Set up CLI app
app = typer.Typer(help="Seesaw loss for long-tailed classification", no_args_is_help=True)
console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger("seesaw_lt")


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, rich_tracebacks=True)],
        force=True,
    )


@app.callback()
def main_callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug logging"),  # type: ignore
) -> None:
    """Seesaw loss experiments on synthetic long-tailed data."""
    configure_logging(verbose)


def _fail(message: str, code: int, details: Optional[List[str]] = None) -> "typer.Exit":
    err_console.print(f"[bold red]{message}[/bold red]")
    for detail in details or []:
        err_console.print(f"  - {detail}")
    return typer.Exit(code=code)


def _settings(config: Optional[Path], overrides: Dict[str, Any]) -> ExperimentConfig:
    """Load settings or exit with EXIT_INVALID before anything is written."""
    try:
        return load_settings(config, overrides)
    except ConfigurationError as e:
        raise _fail(f"Invalid configuration: {e.message}", EXIT_INVALID, e.validation_errors)


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise _fail(f"Cannot parse values '{text}'", EXIT_INVALID)


def _spinner(text: str) -> Progress:
    return Progress(SpinnerColumn(), TextColumn(f"[bold blue]{text}[/bold blue]"), transient=True, console=err_console)


def _fmt(value: float) -> str:
    return "-" if value != value else f"{value:.4f}"


@app.command()
def gen(
    config: Optional[Path] = path_option(None, "Flat key = value experiment file"),  # type: ignore
    classes: Optional[int] = int_option(None, "Number of classes"),  # type: ignore
    ratio: Optional[float] = float_option(None, "Imbalance ratio between the largest and smallest class"),  # type: ignore
    dim: Optional[int] = int_option(None, "Feature dimension"),  # type: ignore
    background: Optional[float] = float_option(None, "Fraction of background samples"),  # type: ignore
    seed: Optional[int] = int_option(None, "Random seed"),  # type: ignore
    output_dir: Optional[Path] = path_option(None, "Directory for the CSV files"),  # type: ignore
) -> None:
    """
    Generate a synthetic long-tailed dataset.

    Writes the training split and the balanced evaluation split as CSV.
    """
    settings = _settings(config, {
        "num_classes": classes, "imbalance_ratio": ratio, "feature_dim": dim,
        "background_fraction": background, "seed": seed, "output_dir": output_dir,
    })
    try:
        paths = run_gen(settings)
    except (DataError, OSError) as e:
        raise _fail(f"Error generating dataset: {e}", EXIT_INVALID)
    for path in paths:
        console.print(f"Wrote {path}")


@app.command()
def train(
    config: Optional[Path] = path_option(None, "Flat key = value experiment file"),  # type: ignore
    preset: Optional[str] = str_option(None, "Hyper-parameter preset (lvis, imagenet_lt)"),  # type: ignore
    loss: Optional[str] = str_option(None, "Loss: ce or seesaw"),  # type: ignore
    epochs: Optional[int] = int_option(None, "Training epochs"),  # type: ignore
    lr: Optional[float] = float_option(None, "Learning rate"),  # type: ignore
    sampler: Optional[str] = str_option(None, "Sampler: random, repeat_factor or class_balanced"),  # type: ignore
    pipeline: Optional[str] = str_option(None, "Pipeline: end_to_end or decoupled"),  # type: ignore
    normalized: Optional[bool] = bool_option(None, "Use the normalized (cosine) classifier"),  # type: ignore
    objectness: Optional[bool] = bool_option(None, "Train an objectness branch for background"),  # type: ignore
    classes: Optional[int] = int_option(None, "Number of classes"),  # type: ignore
    ratio: Optional[float] = float_option(None, "Imbalance ratio"),  # type: ignore
    seed: Optional[int] = int_option(None, "Random seed"),  # type: ignore
    output_dir: Optional[Path] = path_option(None, "Directory for metrics, telemetry and checkpoint"),  # type: ignore
) -> None:
    """
    Train one classifier and write metrics, telemetry and a checkpoint.
    """
    settings = _settings(config, {
        "preset": preset, "loss": loss, "epochs": epochs, "lr": lr, "sampler": sampler,
        "pipeline": pipeline, "normalized": normalized, "use_objectness": objectness,
        "num_classes": classes, "imbalance_ratio": ratio, "seed": seed, "output_dir": output_dir,
    })

    try:
        with _spinner(f"Training {settings.train.loss}...") as progress:
            progress.add_task("train", total=None)
            outcome = run_train(settings)
    except DivergenceError as e:
        raise _fail(f"Training diverged: {e}", EXIT_DIVERGED)
    except (DataError, LossError, NumericsError, ConfigurationError) as e:
        raise _fail(f"Error training: {e}", EXIT_INVALID)

    metrics = outcome.result.metrics
    table = Table(title=f"{settings.train.loss} ({settings.train.pipeline})")
    table.add_column("Group", style="blue")
    table.add_column("Accuracy", style="cyan")
    table.add_row("overall", _fmt(metrics.overall_acc))
    for name in GROUP_NAMES:
        table.add_row(name, _fmt(metrics.group(name)))
    if metrics.background_acc is not None:
        table.add_row("background", _fmt(metrics.background_acc))
    console.print(table)
    for path in outcome.files:
        console.print(f"Wrote {path}")


@app.command()
def sweep(
    param: str = typer.Option("p", help="Seesaw parameter to sweep: p, q or tau"),  # type: ignore
    values: Optional[str] = str_option(None, "Comma-separated values (default depends on the parameter)"),  # type: ignore
    seeds: int = typer.Option(1, help="Number of seeds per value, counting up from the base seed"),  # type: ignore
    workers: int = typer.Option(1, help="Worker threads for independent runs"),  # type: ignore
    config: Optional[Path] = path_option(None, "Flat key = value experiment file"),  # type: ignore
    preset: Optional[str] = str_option(None, "Hyper-parameter preset (lvis, imagenet_lt)"),  # type: ignore
    epochs: Optional[int] = int_option(None, "Training epochs"),  # type: ignore
    classes: Optional[int] = int_option(None, "Number of classes"),  # type: ignore
    ratio: Optional[float] = float_option(None, "Imbalance ratio"),  # type: ignore
    normalized: Optional[bool] = bool_option(None, "Use the normalized (cosine) classifier; required for tau"),  # type: ignore
    seed: Optional[int] = int_option(None, "Base random seed"),  # type: ignore
    output_dir: Optional[Path] = path_option(None, "Directory for the sweep CSV"),  # type: ignore
) -> None:
    """
    Sweep one Seesaw hyper-parameter and write a table of grouped accuracies.
    """
    if param not in DEFAULT_SWEEP_VALUES:
        raise _fail(f"Cannot sweep '{param}'; choose one of {', '.join(DEFAULT_SWEEP_VALUES)}", EXIT_INVALID)
    if seeds < 1 or workers < 1:
        raise _fail("--seeds and --workers must be at least 1", EXIT_INVALID)
    parsed = _parse_floats(values or DEFAULT_SWEEP_VALUES[param])
    if not parsed:
        raise _fail("No sweep values given", EXIT_INVALID)
    settings = _settings(config, {
        "preset": preset, "epochs": epochs, "num_classes": classes,
        "imbalance_ratio": ratio, "normalized": normalized, "seed": seed, "output_dir": output_dir,
    })
    seed_list = [settings.train.seed + k for k in range(seeds)]

    try:
        with _spinner(f"Sweeping {param}...") as progress:
            progress.add_task("sweep", total=None)
            _, summaries, path = run_sweep(settings, param, parsed, seed_list, workers)
    except DivergenceError as e:
        raise _fail(f"Sweep run diverged: {e}", EXIT_DIVERGED)
    except (DataError, LossError, NumericsError, ConfigurationError, ValueError) as e:
        raise _fail(f"Error sweeping: {e}", EXIT_INVALID)

    table = Table(title=f"Sweep over {param} ({len(seed_list)} seed(s))")
    for column in [param, "overall", *GROUP_NAMES]:
        table.add_column(column, style="cyan")
    for s in summaries:
        table.add_row(f"{s.value:g}", _fmt(s.overall_acc), _fmt(s.rare_acc), _fmt(s.common_acc), _fmt(s.frequent_acc))
    console.print(table)
    console.print(f"Wrote {path}")


@app.command()
def gradcheck(
    trials: int = typer.Option(200, help="Random trials per suite"),  # type: ignore
    tol: float = typer.Option(DEFAULT_TOLERANCE, help="Maximum allowed relative error"),  # type: ignore
    seed: int = typer.Option(0, help="Random seed"),  # type: ignore
) -> None:
    """
    Compare analytic gradients against central finite differences.

    Exits with status 3 if any suite exceeds the tolerance.
    """
    if trials < 1:
        raise _fail("--trials must be at least 1", EXIT_INVALID)
    results = run_gradcheck(trials=trials, tol=tol, seed=seed)

    table = Table(title=f"Gradient check ({trials} trials, tol {tol:g})")
    table.add_column("Suite", style="blue")
    table.add_column("Max relative error", style="cyan")
    table.add_column("Status")
    for r in results:
        table.add_row(r.name, f"{r.max_rel_error:.3e}", "[green]ok[/green]" if r.passed else "[red]FAIL[/red]")
    console.print(table)

    worst = max(r.max_rel_error for r in results)
    console.print(f"max relative error: {worst:.3e}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise _fail("Gradient check failed", EXIT_GRADCHECK_FAILED, failed)


@app.command()
def compare(
    seeds: int = typer.Option(5, help="Number of paired runs, counting up from the base seed"),  # type: ignore
    config: Optional[Path] = path_option(None, "Flat key = value experiment file"),  # type: ignore
    preset: Optional[str] = str_option(None, "Hyper-parameter preset (lvis, imagenet_lt)"),  # type: ignore
    epochs: Optional[int] = int_option(None, "Training epochs"),  # type: ignore
    classes: Optional[int] = int_option(None, "Number of classes"),  # type: ignore
    ratio: Optional[float] = float_option(None, "Imbalance ratio"),  # type: ignore
    seed: Optional[int] = int_option(None, "Base random seed"),  # type: ignore
    output_dir: Optional[Path] = path_option(None, "Directory for compare.csv"),  # type: ignore
) -> None:
    """
    Train CE and Seesaw on the same data and print grouped-accuracy deltas.
    """
    if seeds < 1:
        raise _fail("--seeds must be at least 1", EXIT_INVALID)
    settings = _settings(config, {
        "preset": preset, "epochs": epochs, "num_classes": classes,
        "imbalance_ratio": ratio, "seed": seed, "output_dir": output_dir,
    })
    seed_list = [settings.train.seed + k for k in range(seeds)]

    try:
        with _spinner("Running CE / Seesaw pairs...") as progress:
            progress.add_task("compare", total=None)
            rows, path = run_compare(settings, seed_list)
    except DivergenceError as e:
        raise _fail(f"Comparison run diverged: {e}", EXIT_DIVERGED)
    except (DataError, LossError, NumericsError, ConfigurationError) as e:
        raise _fail(f"Error comparing: {e}", EXIT_INVALID)

    table = Table(title="CE vs Seesaw")
    table.add_column("seed", style="blue")
    for key in COMPARE_KEYS:
        table.add_column(f"ce {key}")
        table.add_column(f"seesaw {key}")
        table.add_column(f"Δ {key}", style="cyan")
    for row in rows:
        cells = ["mean" if row.seed < 0 else str(row.seed)]
        for key in COMPARE_KEYS:
            cells += [_fmt(row.ce[key]), _fmt(row.seesaw[key]), _fmt(row.delta[key])]
        table.add_row(*cells)
    console.print(table)
    console.print(f"Wrote {path}")


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI on argv and return its exit code instead of exiting."""
    try:
        result = app(args=argv, standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        return EXIT_INVALID
    except click.exceptions.ClickException as e:
        e.show()
        return EXIT_INVALID
    return result if isinstance(result, int) else 0


def main() -> None:
    """Entry point for the CLI."""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
