"""
Gradient-balance telemetry.

Accumulates, per class, the magnitude of the logit gradients a class receives
as the positive label and as a negative label. The ratio of the two shows how
strongly negative gradients from other classes overwhelm a class; tail classes
trained with plain cross-entropy get ratios far below those of head classes.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Final, List, Mapping, Union

import numpy as np
import numpy.typing as npt

from .exceptions import DimensionMismatchError
from .numerics import Matrix

logger = logging.getLogger(__name__)

# Below this negative sum a ratio is reported as infinite.
RATIO_EPS: Final[float] = 1e-12

TELEMETRY_HEADER: Final[List[str]] = ["class_index", "count", "pos_grad_sum", "neg_grad_sum", "ratio"]


@dataclass(eq=False)
class TelemetryLog:
    """Cumulative positive and negative gradient magnitudes per class."""
    pos_grad_sum: npt.NDArray[np.float64]
    neg_grad_sum: npt.NDArray[np.float64]

    @classmethod
    def empty(cls, num_classes: int) -> "TelemetryLog":
        return cls(np.zeros(num_classes), np.zeros(num_classes))

    @property
    def num_classes(self) -> int:
        return int(self.pos_grad_sum.shape[0])

    def record(self, labels: npt.ArrayLike, grad_logits: Matrix) -> None:
        """
        Add the per-sample logit gradients of one batch.

        Args:
            labels: Positive class of each row
            grad_logits: Per-sample gradients dL/dz, shape (batch, classes)
        """
        labels = np.asarray(labels, dtype=np.int64)
        G = np.abs(np.asarray(grad_logits, dtype=np.float64))
        if G.ndim != 2 or G.shape != (labels.shape[0], self.num_classes):
            raise DimensionMismatchError("TelemetryLog.record", (labels.shape[0], self.num_classes), G.shape)
        if labels.size == 0:
            return
        rows = np.arange(labels.shape[0])
        self.pos_grad_sum += np.bincount(labels, weights=G[rows, labels], minlength=self.num_classes)
        G[rows, labels] = 0.0
        self.neg_grad_sum += G.sum(axis=0)


@dataclass(frozen=True)
class GradRatioRow:
    """One class of the gradient-ratio report."""
    class_index: int
    count: int
    pos_grad_sum: float
    neg_grad_sum: float
    ratio: float = field(default=math.inf)


def grad_ratio_report(log: TelemetryLog, counts_static: npt.ArrayLike) -> List[GradRatioRow]:
    """
    Per-class pos/neg gradient ratios, classes sorted by descending count.

    Classes whose negative sum is below RATIO_EPS get ratio math.inf.
    """
    counts = np.asarray(counts_static)
    if counts.shape[0] != log.num_classes:
        raise DimensionMismatchError("grad_ratio_report", (log.num_classes,), counts.shape)
    rows = []
    for c in np.argsort(-counts, kind="stable"):
        pos = float(log.pos_grad_sum[c])
        neg = float(log.neg_grad_sum[c])
        ratio = pos / neg if neg >= RATIO_EPS else math.inf
        rows.append(GradRatioRow(int(c), int(counts[c]), pos, neg, ratio))
    return rows


def group_mean_ratios(
    rows: List[GradRatioRow],
    groups: Mapping[str, npt.NDArray[np.int64]],
) -> Dict[str, float]:
    """Mean finite ratio of each frequency group (NaN if the group has none)."""
    by_class = {row.class_index: row.ratio for row in rows}
    means = {}
    for name, members in groups.items():
        finite = [by_class[int(c)] for c in members if int(c) in by_class and math.isfinite(by_class[int(c)])]
        means[name] = float(np.mean(finite)) if finite else math.nan
    return means


def write_report_csv(file_path: Union[str, Path], rows: List[GradRatioRow]) -> None:
    """Write the report as CSV; infinite ratios are written as `inf`."""
    with open(file_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TELEMETRY_HEADER)
        for row in rows:
            writer.writerow([row.class_index, row.count, repr(row.pos_grad_sum), repr(row.neg_grad_sum), repr(row.ratio)])


def read_report_csv(file_path: Union[str, Path]) -> List[GradRatioRow]:
    """Read a report written by write_report_csv."""
    with open(file_path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        return [
            GradRatioRow(
                int(r["class_index"]), int(r["count"]),
                float(r["pos_grad_sum"]), float(r["neg_grad_sum"]), float(r["ratio"]),
            )
            for r in reader
        ]
