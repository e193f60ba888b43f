"""
Epoch samplers: random permutation, repeat factor sampling and class-balanced sampling.

Every epoch draws from its own generator keyed by (seed, epoch), so any epoch
can be reproduced on its own.
"""

import logging

import numpy as np
import numpy.typing as npt

from .config import SamplerKind
from .data import BACKGROUND_LABEL, Dataset
from .exceptions import DatasetFormatError

logger = logging.getLogger(__name__)

Indices = npt.NDArray[np.int64]


def _categories(ds: Dataset) -> npt.NDArray[np.int64]:
    """Labels with background mapped to its own category index num_classes."""
    return np.where(ds.labels == BACKGROUND_LABEL, ds.num_classes, ds.labels)


def repeat_factors(ds: Dataset, threshold: float) -> npt.NDArray[np.float64]:
    """
    Per-category repeat factor r(c) = max(1, sqrt(t / f_c)).

    f_c is the fraction of samples in category c. Background, if present, is
    the last entry. Categories without samples get factor 1.
    """
    cats = _categories(ds)
    freq = np.bincount(cats, minlength=ds.num_classes + 1) / max(1, ds.num_samples)
    with np.errstate(divide="ignore"):
        factors = np.sqrt(threshold / freq)
    return np.where(freq > 0, np.maximum(1.0, factors), 1.0)


def _repeat_factor_indices(ds: Dataset, threshold: float, rng: np.random.Generator) -> Indices:
    r = repeat_factors(ds, threshold)[_categories(ds)]
    whole = np.floor(r)
    # Stochastic rounding of the fractional part, per sample.
    reps = (whole + (rng.random(r.shape[0]) < r - whole)).astype(np.int64)
    indices = np.repeat(np.arange(ds.num_samples, dtype=np.int64), reps)
    return rng.permutation(indices)


def _class_balanced_indices(ds: Dataset, rng: np.random.Generator) -> Indices:
    cats = _categories(ds)
    order = np.argsort(cats, kind="stable")
    sizes = np.bincount(cats, minlength=ds.num_classes + 1)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    present = np.flatnonzero(sizes)
    chosen = rng.choice(present, size=ds.num_samples)
    offsets = rng.integers(0, sizes[chosen])
    return order[starts[chosen] + offsets].astype(np.int64)


def epoch_indices(ds: Dataset, kind: SamplerKind, seed: int, epoch: int = 0) -> Indices:
    """
    Sample indices for one epoch.

    random: a permutation of all indices.
    repeat_factor: sample i appears floor(r) or ceil(r) times with expectation
    r = r(class of i), then the order is shuffled.
    class_balanced: num_samples draws, each picking a class uniformly and then
    a sample of that class uniformly.

    Raises:
        DatasetFormatError: If the dataset is empty
    """
    if ds.num_samples == 0:
        raise DatasetFormatError("Cannot sample from an empty dataset")
    rng = np.random.default_rng([seed, epoch])

    if kind.kind == "random":
        return rng.permutation(ds.num_samples).astype(np.int64)
    if kind.kind == "repeat_factor":
        return _repeat_factor_indices(ds, kind.threshold, rng)
    if kind.kind == "class_balanced":
        return _class_balanced_indices(ds, rng)
    raise ValueError(f"Unknown sampler kind: {kind.kind}")
