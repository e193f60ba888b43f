"""
Experiment orchestration for seesaw_lt.

This module turns validated settings into runs: it loads or generates the
dataset, trains, and writes result files. Files are only written once the
run they describe has finished, so a failed run leaves no partial output.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from seesaw_lt.config import ExperimentConfig
from seesaw_lt.data import Dataset, frequency_groups, generate, generate_balanced
from seesaw_lt.heads import save_checkpoint
from seesaw_lt.models import CompareRow, SweepRow, SweepSummary, write_compare_csv, write_sweep_csv
from seesaw_lt.telemetry import GradRatioRow, grad_ratio_report, group_mean_ratios, write_report_csv
from seesaw_lt.trainer import TrainResult, classifier_class_counts, compare, mean_compare_row, summarize_sweep, sweep, train

logger = logging.getLogger(__name__)

TRAIN_CSV = "train.csv"
TEST_CSV = "test.csv"
METRICS_CSV = "metrics.csv"
TELEMETRY_CSV = "telemetry.csv"
COUNTS_FILE = "counts.txt"
CHECKPOINT_FILE = "checkpoint.txt"
COMPARE_CSV = "compare.csv"


@dataclass
class TrainOutcome:
    """A finished training run and the files written for it."""
    result: TrainResult
    report: List[GradRatioRow]
    files: List[Path]


def _output_dir(settings: ExperimentConfig) -> Path:
    out = settings.output.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_dataset(settings: ExperimentConfig) -> Tuple[Dataset, Optional[Dataset]]:
    """
    Training split and, for synthetic data, the balanced evaluation split.

    An external dataset_csv takes precedence over the generator; it has no
    held-out split, so evaluation falls back to the training data.
    """
    if settings.output.dataset_csv is not None:
        logger.info(f"Loading dataset from {settings.output.dataset_csv}")
        return Dataset.from_csv(settings.output.dataset_csv), None
    return generate(settings.data), generate_balanced(settings.data)


def run_gen(settings: ExperimentConfig) -> List[Path]:
    """Generate the synthetic training and evaluation splits and export them as CSV."""
    train_ds = generate(settings.data)
    test_ds = generate_balanced(settings.data)
    out = _output_dir(settings)
    paths = [out / TRAIN_CSV, out / TEST_CSV]
    train_ds.to_csv(paths[0])
    test_ds.to_csv(paths[1])
    return paths


def run_train(settings: ExperimentConfig) -> TrainOutcome:
    """
    Run one training job and write its metrics, telemetry, counts and checkpoint.

    Raises:
        DivergenceError: If training diverges (nothing is written)
    """
    train_ds, test_ds = load_dataset(settings)
    cfg = settings.train
    result = train(train_ds, cfg, test_ds=test_ds)

    report = grad_ratio_report(result.telemetry, classifier_class_counts(train_ds, cfg.use_objectness))
    groups = frequency_groups(train_ds.class_counts_static, cfg.rare_max, cfg.common_max)
    for name, ratio in group_mean_ratios(report, groups).items():
        logger.info(f"mean pos/neg gradient ratio, {name}: {ratio:.4f}")

    out = _output_dir(settings)
    files = [out / METRICS_CSV, out / TELEMETRY_CSV, out / CHECKPOINT_FILE]
    result.metrics.save_csv(files[0])
    write_report_csv(files[1], report)
    heads = [result.head] + ([result.objectness.linear] if result.objectness is not None else [])
    save_checkpoint(files[2], heads)
    if result.counts is not None:
        files.append(out / COUNTS_FILE)
        result.counts.save(files[-1])
    logger.info(f"Wrote {', '.join(str(f) for f in files)}")
    return TrainOutcome(result, report, files)


def run_sweep(
    settings: ExperimentConfig,
    param: str,
    values: Sequence[float],
    seeds: Optional[Sequence[int]] = None,
    workers: int = 1,
) -> Tuple[List[SweepRow], List[SweepSummary], Path]:
    """Sweep one Seesaw hyper-parameter and write sweep_<param>.csv."""
    train_ds, test_ds = load_dataset(settings)
    rows = sweep(train_ds, settings.train, param, values, seeds=seeds, workers=workers, test_ds=test_ds)
    summaries = summarize_sweep(rows)
    path = _output_dir(settings) / f"sweep_{param}.csv"
    write_sweep_csv(path, rows, summaries)
    return rows, summaries, path


def run_compare(settings: ExperimentConfig, seeds: Sequence[int]) -> Tuple[List[CompareRow], Path]:
    """
    Paired CE and Seesaw runs on one dataset per seed, written to compare.csv.

    The dataset seed follows each run seed so that every pair sees a fresh
    draw of the same long-tailed profile.
    """
    rows: List[CompareRow] = []
    for seed in seeds:
        data = settings.data.model_copy(update={"seed": seed})
        train_ds = generate(data) if settings.output.dataset_csv is None else load_dataset(settings)[0]
        test_ds = generate_balanced(data) if settings.output.dataset_csv is None else None
        rows.extend(compare(train_ds, settings.train, [seed], test_ds=test_ds)[:1])

    if rows:
        rows.append(mean_compare_row(rows))
    path = _output_dir(settings) / COMPARE_CSV
    write_compare_csv(path, rows)
    return rows, path

