"""
Cross-entropy and Seesaw losses with analytic gradients.

Both losses share one kernel: a softmax cross-entropy whose negative-class
exponentials are scaled by a factor row S (S of the positive class is 1).
Cross-entropy is the kernel with S = 1 everywhere, Seesaw computes S from the
mitigation and compensation factors. The factors are constants during
differentiation, so the gradient on a negative class j is
S_j * exp(z_j) / (sum_k S_k exp(z_k)) and on the positive class sigma_hat - 1.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt

from .config import SeesawConfig
from .counts import ClassCounts
from .exceptions import DimensionMismatchError, LabelOutOfRangeError, NonFiniteLogitsError
from .numerics import Matrix, Vector, as_matrix, as_vector, softmax_rows

logger = logging.getLogger(__name__)

Labels = npt.NDArray[np.int64]


@dataclass(frozen=True, eq=False)
class LossResult:
    """Loss (nats) and its gradient with respect to the logits of one sample."""
    loss: float
    grad_logits: Vector


@dataclass(frozen=True, eq=False)
class BatchLoss:
    """Per-sample losses and per-sample logit gradients of a batch."""
    losses: Vector
    grad_logits: Matrix

    @property
    def mean_loss(self) -> float:
        return float(self.losses.mean()) if self.losses.size else 0.0

    @property
    def mean_grad(self) -> Matrix:
        """Gradient of the batch-mean loss with respect to the logits."""
        return self.grad_logits / max(1, self.losses.shape[0])

    def row(self, i: int) -> LossResult:
        return LossResult(float(self.losses[i]), self.grad_logits[i])


@dataclass(frozen=True, eq=False)
class SeesawFactors:
    """
    Seesaw factors for the given positive label(s).

    S = M * C. The entry of the positive class is 1 by convention. Arrays are
    vectors for a single sample and (batch, classes) matrices for a batch.
    """
    S: npt.NDArray[np.float64]
    M: npt.NDArray[np.float64]
    C: npt.NDArray[np.float64]


def _check_inputs(Z: Matrix, labels: Labels) -> None:
    if labels.ndim != 1 or labels.shape[0] != Z.shape[0]:
        raise DimensionMismatchError("loss labels", (Z.shape[0],), labels.shape)
    num_classes = Z.shape[1]
    if labels.size:
        for bad in (int(labels.min()), int(labels.max())):
            if bad < 0 or bad >= num_classes:
                raise LabelOutOfRangeError(bad, num_classes)
    if not np.all(np.isfinite(Z)):
        raise NonFiniteLogitsError()


def weighted_softmax_loss_batch(Z: npt.ArrayLike, labels: npt.ArrayLike, S: npt.ArrayLike) -> BatchLoss:
    """
    Softmax cross-entropy with negative classes weighted by S.

    Args:
        Z: Logits, shape (batch, classes)
        labels: Positive class per row
        S: Non-negative factors, shape (batch, classes); the positive entry is ignored

    Returns:
        BatchLoss with per-sample losses and gradients, S held constant
    """
    Z = as_matrix(Z)
    labels = np.asarray(labels, dtype=np.int64)
    _check_inputs(Z, labels)
    S = np.array(S, dtype=np.float64)
    if S.shape != Z.shape:
        raise DimensionMismatchError("weighted_softmax_loss", Z.shape, S.shape)

    rows = np.arange(Z.shape[0])
    S[rows, labels] = 1.0
    shifted = Z - Z.max(axis=1, keepdims=True)
    weighted = S * np.exp(shifted)
    denom = weighted.sum(axis=1)
    grad = weighted / denom[:, None]
    losses = np.maximum(np.log(denom) - shifted[rows, labels], 0.0)
    grad[rows, labels] -= 1.0
    return BatchLoss(losses, grad)


def weighted_softmax_loss(z: npt.ArrayLike, label: int, S: npt.ArrayLike) -> LossResult:
    """Single-sample form of weighted_softmax_loss_batch."""
    z = as_vector(z)
    return weighted_softmax_loss_batch(z[None, :], [label], as_vector(S)[None, :]).row(0)


def ce_loss_batch(Z: npt.ArrayLike, labels: npt.ArrayLike) -> BatchLoss:
    """Softmax cross-entropy for a batch."""
    Z = as_matrix(Z)
    return weighted_softmax_loss_batch(Z, labels, np.ones_like(Z))


def ce_loss(z: npt.ArrayLike, label: int) -> LossResult:
    """
    Softmax cross-entropy of one sample.

    Returns:
        loss = -log(sigma_label); gradient sigma - onehot(label)

    Raises:
        LabelOutOfRangeError: If label does not index into z
    """
    return ce_loss_batch(as_vector(z)[None, :], [label]).row(0)


def mitigation_factor(counts: ClassCounts, i: int, j: int, p: float) -> float:
    """
    Mitigation factor M_ij for positive class i and negative class j.

    1 when N_i <= N_j, otherwise (N_j / N_i) ** p.
    """
    n_i = float(counts.counts[i])
    n_j = float(counts.counts[j])
    if n_i <= n_j:
        return 1.0
    return (n_j / n_i) ** p


def compensation_factor(sigma: npt.ArrayLike, i: int, j: int, q: float) -> float:
    """
    Compensation factor C_ij for positive class i and negative class j.

    1 when sigma_j <= sigma_i, otherwise (sigma_j / sigma_i) ** q.
    """
    sigma = as_vector(sigma)
    s_i = float(sigma[i])
    s_j = float(sigma[j])
    if s_j <= s_i:
        return 1.0
    return (s_j / s_i) ** q


def seesaw_factors_batch(
    Z: npt.ArrayLike,
    labels: npt.ArrayLike,
    counts: ClassCounts,
    cfg: SeesawConfig,
) -> SeesawFactors:
    """
    Seesaw factors for every row of a batch.

    The compensation factor compares plain softmax probabilities of Z. The
    ratio sigma_j / sigma_i is taken in log space so that a vanishing positive
    probability doesn't divide by zero.
    """
    Z = as_matrix(Z)
    labels = np.asarray(labels, dtype=np.int64)
    _check_inputs(Z, labels)
    if counts.num_classes != Z.shape[1]:
        raise DimensionMismatchError("seesaw_factors counts", (Z.shape[1],), (counts.num_classes,))

    rows = np.arange(Z.shape[0])
    M = np.ones_like(Z)
    C = np.ones_like(Z)

    if cfg.use_mitigation:
        n = counts.counts
        ratio = n[None, :] / n[labels][:, None]
        M = np.where(ratio < 1.0, ratio ** cfg.p, 1.0)

    if cfg.use_compensation:
        shifted = Z - Z.max(axis=1, keepdims=True)
        log_sigma = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_ratio = log_sigma - log_sigma[rows, labels][:, None]
        C = np.where(log_ratio > 0.0, np.exp(cfg.q * np.maximum(log_ratio, 0.0)), 1.0)

    M[rows, labels] = 1.0
    C[rows, labels] = 1.0
    return SeesawFactors(S=M * C, M=M, C=C)


def seesaw_factors(z: npt.ArrayLike, label: int, counts: ClassCounts, cfg: SeesawConfig) -> SeesawFactors:
    """Seesaw factors S = M * C for one sample with positive class label."""
    f = seesaw_factors_batch(as_vector(z)[None, :], [label], counts, cfg)
    return SeesawFactors(S=f.S[0], M=f.M[0], C=f.C[0])


def seesaw_loss_batch(
    Z: npt.ArrayLike,
    labels: npt.ArrayLike,
    counts: ClassCounts,
    cfg: SeesawConfig,
) -> BatchLoss:
    """Seesaw loss of a batch with factors computed from counts and Z."""
    factors = seesaw_factors_batch(Z, labels, counts, cfg)
    return weighted_softmax_loss_batch(Z, labels, factors.S)


def seesaw_loss(z: npt.ArrayLike, label: int, counts: ClassCounts, cfg: SeesawConfig) -> LossResult:
    """
    Seesaw loss of one sample.

    Raises:
        LabelOutOfRangeError: If label does not index into z
        NonFiniteLogitsError: If z contains NaN or Inf
    """
    return seesaw_loss_batch(as_vector(z)[None, :], [label], counts, cfg).row(0)


class CrossEntropyLoss:
    """Plain softmax cross-entropy; keeps no state."""

    name = "ce"

    def __call__(self, Z: Matrix, labels: Labels) -> BatchLoss:
        return ce_loss_batch(Z, labels)

    def observe(self, labels: Labels) -> None:
        pass


class SeesawLoss:
    """
    Seesaw loss bound to a ClassCounts source.

    With count_source=online the counts start uniform and are accumulated by
    observe() after the batch's gradients have been computed. Other sources
    keep the counts they were constructed with.
    """

    name = "seesaw"

    def __init__(self, cfg: SeesawConfig, num_classes: int, counts: Optional[ClassCounts] = None):
        self.cfg = cfg
        self.online = cfg.count_source == "online"
        if counts is None:
            if not self.online:
                raise ValueError(f"count_source={cfg.count_source} needs explicit counts")
            counts = ClassCounts.uniform(num_classes, cfg.init_value)
        if counts.num_classes != num_classes:
            raise DimensionMismatchError("SeesawLoss counts", (num_classes,), (counts.num_classes,))
        self.counts = counts

    def __call__(self, Z: Matrix, labels: Labels) -> BatchLoss:
        return seesaw_loss_batch(Z, labels, self.counts, self.cfg)

    def observe(self, labels: Labels) -> None:
        if self.online:
            self.counts = self.counts.updated(labels)
