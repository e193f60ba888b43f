"""
Synthetic long-tailed datasets.

Class k receives round(max_count * ratio ** (-k / (C - 1))) samples drawn from
a Gaussian blob around its class mean. Optional background samples (label -1)
come from one more blob; they stand in for the background proposals of a
detector. Class means depend only on the spec's seed, so the training split
and the balanced evaluation split share them.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Final, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt

from .config import SyntheticSpec
from .exceptions import DatasetFormatError, InvalidSpecError
from .numerics import Matrix, as_matrix

logger = logging.getLogger(__name__)

BACKGROUND_LABEL: Final[int] = -1
GROUP_NAMES: Final[Tuple[str, str, str]] = ("rare", "common", "frequent")

# Sub-streams of a spec's seed.
_MEANS_STREAM: Final[int] = 0
_TRAIN_STREAM: Final[int] = 1
_TEST_STREAM: Final[int] = 2


@dataclass(eq=False)
class Dataset:
    """
    Feature matrix with integer labels.

    Labels are foreground class indices in [0, num_classes) or -1 for background.
    """
    features: Matrix
    labels: npt.NDArray[np.int64]
    num_classes: int
    spec: Optional[SyntheticSpec] = None

    def __post_init__(self) -> None:
        self.features = as_matrix(self.features)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1 or self.labels.shape[0] != self.features.shape[0]:
            raise DatasetFormatError(
                f"Expected {self.features.shape[0]} labels, got shape {self.labels.shape}"
            )
        if self.num_classes < 1:
            raise DatasetFormatError(f"num_classes must be positive, got {self.num_classes}")
        if self.labels.size and (self.labels.min() < BACKGROUND_LABEL or self.labels.max() >= self.num_classes):
            raise DatasetFormatError(f"Labels must lie in [-1, {self.num_classes})")
        if not np.all(np.isfinite(self.features)):
            raise DatasetFormatError("Features contain non-finite values")

    @property
    def num_samples(self) -> int:
        return int(self.labels.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def has_background(self) -> bool:
        return bool(np.any(self.labels == BACKGROUND_LABEL))

    @property
    def foreground_mask(self) -> npt.NDArray[np.bool_]:
        return self.labels != BACKGROUND_LABEL

    @property
    def class_counts_static(self) -> npt.NDArray[np.int64]:
        """Per-class totals over foreground samples."""
        return np.bincount(self.labels[self.foreground_mask], minlength=self.num_classes)

    def subset(self, indices: npt.ArrayLike) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.num_classes, self.spec)

    def to_csv(self, file_path: Union[str, Path]) -> None:
        """Write `label,f0,f1,...` with one sample per row; background is label -1."""
        with open(file_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["label"] + [f"f{k}" for k in range(self.feature_dim)])
            for label, row in zip(self.labels, self.features):
                writer.writerow([int(label)] + [repr(float(v)) for v in row])
        logger.info(f"Wrote {self.num_samples} samples to {file_path}")

    @classmethod
    def from_csv(cls, file_path: Union[str, Path], num_classes: Optional[int] = None) -> "Dataset":
        """
        Read a dataset written by to_csv or produced by an external tool.

        Args:
            file_path: CSV file with header `label,f0,f1,...`
            num_classes: Number of foreground classes (default: largest label + 1)

        Raises:
            DatasetFormatError: If the file is missing or malformed
        """
        try:
            with open(file_path, "r", encoding="utf-8", newline="") as f:
                rows = list(csv.reader(f))
        except OSError as e:
            raise DatasetFormatError(f"Cannot read dataset {file_path}: {e}")

        if not rows or not rows[0] or rows[0][0] != "label":
            raise DatasetFormatError(f"{file_path}: missing 'label,f0,...' header")
        dim = len(rows[0]) - 1
        if dim < 1:
            raise DatasetFormatError(f"{file_path}: no feature columns")

        labels = []
        features = []
        for lineno, row in enumerate(rows[1:], 2):
            if not row:
                continue
            if len(row) != dim + 1:
                raise DatasetFormatError(f"{file_path}:{lineno}: expected {dim + 1} fields, got {len(row)}")
            try:
                labels.append(int(row[0]))
                features.append([float(v) for v in row[1:]])
            except ValueError:
                raise DatasetFormatError(f"{file_path}:{lineno}: cannot parse row")

        label_array = np.array(labels, dtype=np.int64)
        if num_classes is None:
            num_classes = int(label_array.max()) + 1 if label_array.size else 1
        feature_matrix = np.array(features, dtype=np.float64).reshape(len(features), dim)
        return cls(feature_matrix, label_array, num_classes)


def class_profile(spec: SyntheticSpec) -> npt.NDArray[np.int64]:
    """
    Exponentially decaying per-class sample counts, rounded half up.

    Raises:
        InvalidSpecError: If the tail class would get no samples
    """
    k = np.arange(spec.num_classes, dtype=np.float64)
    raw = spec.max_count * spec.imbalance_ratio ** (-k / (spec.num_classes - 1))
    counts = np.floor(raw + 0.5).astype(np.int64)
    if counts[-1] < 1:
        raise InvalidSpecError(
            f"max_count {spec.max_count} with imbalance_ratio {spec.imbalance_ratio:g} leaves the tail class empty; "
            f"need max_count >= imbalance_ratio / 2"
        )
    return counts


def _class_means(spec: SyntheticSpec) -> Matrix:
    """One mean per foreground class plus one for background (last row)."""
    rng = np.random.default_rng([spec.seed, _MEANS_STREAM])
    return spec.class_separation * rng.standard_normal((spec.num_classes + 1, spec.feature_dim))


def _background_count(spec: SyntheticSpec, foreground_total: int) -> int:
    if spec.background_fraction <= 0.0:
        return 0
    return int(np.floor(spec.background_fraction / (1.0 - spec.background_fraction) * foreground_total + 0.5))


def _sample(spec: SyntheticSpec, per_class: npt.NDArray[np.int64], stream: int) -> Dataset:
    means = _class_means(spec)
    n_background = _background_count(spec, int(per_class.sum()))
    labels = np.concatenate([
        np.repeat(np.arange(spec.num_classes, dtype=np.int64), per_class),
        np.full(n_background, BACKGROUND_LABEL, dtype=np.int64),
    ])
    rng = np.random.default_rng([spec.seed, stream])
    noise = spec.noise_std * rng.standard_normal((labels.shape[0], spec.feature_dim))
    # Background uses the last mean row, which index -1 selects.
    features = means[labels] + noise
    return Dataset(features, labels, spec.num_classes, spec)


def _validate(spec: SyntheticSpec) -> None:
    if spec.num_classes < 2:
        raise InvalidSpecError(f"num_classes must be >= 2, got {spec.num_classes}")
    if spec.imbalance_ratio <= 1.0:
        raise InvalidSpecError(f"imbalance_ratio must be > 1, got {spec.imbalance_ratio}")


def generate(spec: SyntheticSpec) -> Dataset:
    """
    Generate the long-tailed training split of a spec.

    Deterministic given spec.seed.

    Raises:
        InvalidSpecError: If the spec cannot be realised
    """
    _validate(spec)
    per_class = class_profile(spec)
    ds = _sample(spec, per_class, _TRAIN_STREAM)
    logger.info(
        f"Generated {ds.num_samples} samples over {spec.num_classes} classes "
        f"(head {per_class[0]}, tail {per_class[-1]})"
    )
    return ds


def generate_balanced(spec: SyntheticSpec, per_class: Optional[int] = None) -> Dataset:
    """Balanced evaluation split sharing the class means of generate(spec)."""
    _validate(spec)
    n = spec.test_per_class if per_class is None else per_class
    if n < 1:
        raise InvalidSpecError(f"per_class must be >= 1, got {n}")
    return _sample(spec, np.full(spec.num_classes, n, dtype=np.int64), _TEST_STREAM)


def frequency_groups(
    class_counts: npt.ArrayLike,
    rare_max: Optional[int] = None,
    common_max: Optional[int] = None,
) -> Dict[str, npt.NDArray[np.int64]]:
    """
    Partition classes into rare, common and frequent groups.

    With thresholds, a class is rare if its count is <= rare_max, common if
    <= common_max and frequent otherwise. Without them, classes sorted by
    descending count are split into tertiles (frequent first).

    Returns:
        Mapping from group name to sorted class indices
    """
    counts = np.asarray(class_counts)
    if rare_max is not None and common_max is not None:
        rare = np.flatnonzero(counts <= rare_max)
        common = np.flatnonzero((counts > rare_max) & (counts <= common_max))
        frequent = np.flatnonzero(counts > common_max)
        return {"rare": rare, "common": common, "frequent": frequent}

    order = np.argsort(-counts, kind="stable")
    frequent, common, rare = np.array_split(order, 3)
    return {
        "rare": np.sort(rare).astype(np.int64),
        "common": np.sort(common).astype(np.int64),
        "frequent": np.sort(frequent).astype(np.int64),
    }
