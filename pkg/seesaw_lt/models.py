"""
Result records for the seesaw_lt project.

This module defines the data structures produced by training runs, sweeps
and paired comparisons, together with their CSV formats. Floats are written
with repr() so that reading a file back reproduces the in-memory values
exactly.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from .data import GROUP_NAMES


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _parse(value: str) -> Optional[float]:
    return None if value == "" else float(value)


@dataclass
class Metrics:
    """
    Evaluation metrics of one trained head.

    group_acc holds the mean per-class accuracy of each frequency group, or
    None for an empty group. background_acc is only set when the evaluation
    set contains background samples.
    """
    overall_acc: float
    per_class_acc: List[float]
    group_acc: Dict[str, Optional[float]]
    loss_curve: List[float] = field(default_factory=list)
    background_acc: Optional[float] = None

    def group(self, name: str) -> float:
        """Accuracy of a group, NaN when the group is empty."""
        value = self.group_acc.get(name)
        return math.nan if value is None else value

    def header(self) -> List[str]:
        return (
            ["kind", "epoch", "mean_loss", "overall_acc"]
            + [f"{name}_acc" for name in GROUP_NAMES]
            + ["background_acc"]
            + [f"acc_{c}" for c in range(len(self.per_class_acc))]
        )

    def save_csv(self, file_path: Union[str, Path]) -> None:
        """
        Save metrics as CSV: one `epoch` row per loss-curve entry, then one `summary` row.

        Args:
            file_path: Destination file
        """
        blank_tail = [""] * (len(GROUP_NAMES) + 2 + len(self.per_class_acc))
        with open(file_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.header())
            for epoch, loss in enumerate(self.loss_curve):
                writer.writerow(["epoch", epoch, _fmt(loss)] + blank_tail)
            writer.writerow(
                ["summary", "", "", _fmt(self.overall_acc)]
                + [_fmt(self.group_acc.get(name)) for name in GROUP_NAMES]
                + [_fmt(self.background_acc)]
                + [_fmt(acc) for acc in self.per_class_acc]
            )

    @classmethod
    def load_csv(cls, file_path: Union[str, Path]) -> "Metrics":
        """
        Load metrics written by save_csv.

        Raises:
            ValueError: If the file has no summary row
        """
        with open(file_path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
        header, body = rows[0], rows[1:]
        first_class = header.index("background_acc") + 1

        loss_curve: List[float] = []
        summary: Optional[List[str]] = None
        for row in body:
            if row[0] == "epoch":
                loss_curve.append(float(row[2]))
            elif row[0] == "summary":
                summary = row
        if summary is None:
            raise ValueError(f"{file_path}: no summary row")

        group_acc = {name: _parse(summary[4 + k]) for k, name in enumerate(GROUP_NAMES)}
        return cls(
            overall_acc=float(summary[3]),
            per_class_acc=[float(v) for v in summary[first_class:]],
            group_acc=group_acc,
            loss_curve=loss_curve,
            background_acc=_parse(summary[first_class - 1]),
        )


@dataclass
class SweepRow:
    """One training run of a hyper-parameter sweep."""
    param: str
    value: float
    seed: int
    metrics: Metrics


@dataclass(frozen=True)
class SweepSummary:
    """Seed-averaged results for one swept value."""
    param: str
    value: float
    runs: int
    overall_acc: float
    rare_acc: float
    common_acc: float
    frequent_acc: float


SWEEP_HEADER = ["param", "value", "seed", "overall_acc", "rare_acc", "common_acc", "frequent_acc"]


def write_sweep_csv(file_path: Union[str, Path], rows: Sequence[SweepRow], summaries: Sequence[SweepSummary]) -> None:
    """Write per-run rows followed by seed-averaged rows (seed column `mean`)."""
    with open(file_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            m = row.metrics
            writer.writerow(
                [row.param, repr(row.value), row.seed, _fmt(m.overall_acc)]
                + [_fmt(m.group_acc.get(name)) for name in GROUP_NAMES]
            )
        for s in summaries:
            writer.writerow(
                [s.param, repr(s.value), "mean", repr(s.overall_acc), repr(s.rare_acc), repr(s.common_acc), repr(s.frequent_acc)]
            )


@dataclass(frozen=True)
class CompareRow:
    """Paired CE and Seesaw results on one seed; `seed` is -1 for the mean row."""
    seed: int
    ce: Dict[str, float]
    seesaw: Dict[str, float]

    @property
    def delta(self) -> Dict[str, float]:
        return {key: self.seesaw[key] - self.ce[key] for key in self.ce}


COMPARE_KEYS = ["overall"] + list(GROUP_NAMES)


def write_compare_csv(file_path: Union[str, Path], rows: Sequence[CompareRow]) -> None:
    """Write CE, Seesaw and delta columns for each seed and the mean row."""
    header = (
        ["seed"]
        + [f"ce_{k}" for k in COMPARE_KEYS]
        + [f"seesaw_{k}" for k in COMPARE_KEYS]
        + [f"delta_{k}" for k in COMPARE_KEYS]
    )
    with open(file_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            seed = "mean" if row.seed < 0 else row.seed
            delta = row.delta
            writer.writerow(
                [seed]
                + [repr(row.ce[k]) for k in COMPARE_KEYS]
                + [repr(row.seesaw[k]) for k in COMPARE_KEYS]
                + [repr(delta[k]) for k in COMPARE_KEYS]
            )
