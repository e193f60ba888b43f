"""
Cumulative per-class instance counts.

The mitigation factor compares how many instances of each class have been
seen. Counts are accumulated online during training, loaded from a file
recorded by an earlier run, or taken from the static label frequencies of
the training split.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Final, Union

import numpy as np
import numpy.typing as npt

from .exceptions import CountsFormatError, LabelOutOfRangeError

logger = logging.getLogger(__name__)

DEFAULT_INIT_VALUE: Final[float] = 1.0


def _validate_labels(labels: npt.NDArray[np.int64], num_classes: int) -> None:
    if labels.size == 0:
        return
    lo, hi = int(labels.min()), int(labels.max())
    if lo < 0:
        raise LabelOutOfRangeError(lo, num_classes)
    if hi >= num_classes:
        raise LabelOutOfRangeError(hi, num_classes)


@dataclass(frozen=True, eq=False)
class ClassCounts:
    """
    Per-class cumulative instance counts N_i.

    Instances are values: every update returns a new ClassCounts, so a
    snapshot taken by a reader never changes underneath it.
    """
    counts: npt.NDArray[np.float64]
    init_value: float = DEFAULT_INIT_VALUE

    def __post_init__(self) -> None:
        counts = np.array(self.counts, dtype=np.float64)
        if counts.ndim != 1 or counts.size == 0:
            raise CountsFormatError(f"Counts must be a non-empty vector, got shape {counts.shape}")
        if self.init_value <= 0:
            raise CountsFormatError(f"init_value must be positive, got {self.init_value}")
        if not np.all(np.isfinite(counts)) or counts.min() < self.init_value:
            raise CountsFormatError(f"All counts must be finite and >= init_value={self.init_value}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def num_classes(self) -> int:
        return int(self.counts.shape[0])

    @classmethod
    def uniform(cls, num_classes: int, init_value: float = DEFAULT_INIT_VALUE) -> "ClassCounts":
        """Uniformly initialized counts, every class at init_value."""
        return cls(np.full(num_classes, init_value, dtype=np.float64), init_value)

    def updated(self, labels: npt.ArrayLike) -> "ClassCounts":
        """Return counts with each label occurrence added once."""
        labels = np.asarray(labels, dtype=np.int64).ravel()
        _validate_labels(labels, self.num_classes)
        if labels.size == 0:
            return self
        added = np.bincount(labels, minlength=self.num_classes).astype(np.float64)
        return ClassCounts(self.counts + added, self.init_value)

    def save(self, file_path: Union[str, Path]) -> None:
        """
        Save counts as text, one `<class_index>,<count>` line per class.

        Args:
            file_path: Destination file
        """
        with open(file_path, "w", encoding="utf-8", newline="\n") as f:
            for i, n in enumerate(self.counts):
                f.write(f"{i},{float(n)!r}\n")

    @classmethod
    def load(cls, file_path: Union[str, Path], init_value: float = DEFAULT_INIT_VALUE) -> "ClassCounts":
        """
        Load counts written by save().

        Raises:
            CountsFormatError: If the file is missing, malformed or has gaps in the class indices
        """
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                lines = [line.strip() for line in f if line.strip()]
        except OSError as e:
            raise CountsFormatError(f"Cannot read counts file {file_path}: {e}")

        values = {}
        for lineno, line in enumerate(lines, 1):
            parts = line.split(",")
            if len(parts) != 2:
                raise CountsFormatError(f"{file_path}:{lineno}: expected '<class_index>,<count>'")
            try:
                values[int(parts[0])] = float(parts[1])
            except ValueError:
                raise CountsFormatError(f"{file_path}:{lineno}: cannot parse '{line}'")

        if sorted(values) != list(range(len(values))):
            raise CountsFormatError(f"{file_path}: class indices must be 0..C-1 without gaps")
        logger.debug(f"Loaded counts for {len(values)} classes from {file_path}")
        return cls(np.array([values[i] for i in range(len(values))]), init_value)


def counts_update(counts: ClassCounts, labels: npt.ArrayLike) -> ClassCounts:
    """Accumulate one batch of labels into counts."""
    return counts.updated(labels)


def counts_from_dataset(
    labels: npt.ArrayLike,
    num_classes: int,
    init_value: float = DEFAULT_INIT_VALUE,
) -> ClassCounts:
    """Static label frequencies of a whole training split, offset by init_value."""
    return ClassCounts.uniform(num_classes, init_value).updated(labels)
