"""
API contracts for the seesaw_lt project.

This module defines the interfaces the training loop depends on using
Protocol classes, so losses and heads can be swapped without touching it.
"""

from typing import Protocol, runtime_checkable

import numpy as np
import numpy.typing as npt

from .losses import BatchLoss
from .numerics import Matrix


@runtime_checkable
class ClassificationLoss(Protocol):
    """Protocol for a batch classification loss with optional label statistics."""

    @property
    def name(self) -> str:
        """Short loss name used in logs and tables."""
        ...

    def __call__(self, Z: Matrix, labels: npt.NDArray[np.int64]) -> BatchLoss:
        """
        Evaluate the loss of a batch.

        Args:
            Z: Logits, shape (batch, classes)
            labels: Positive class of each row

        Returns:
            Per-sample losses and logit gradients

        Raises:
            LabelOutOfRangeError: If a label does not index into Z
            NonFiniteLogitsError: If Z contains NaN or Inf
        """
        ...

    def observe(self, labels: npt.NDArray[np.int64]) -> None:
        """Record the labels of a batch after its gradients were taken."""
        ...


@runtime_checkable
class Scorer(Protocol):
    """Protocol for anything that maps a feature batch to logits."""

    def forward_batch(self, X: npt.ArrayLike) -> Matrix:
        """Logits for every row of X."""
        ...
