"""
Prediction heads: linear classifier with optional normalized linear
activation, the objectness branch and the spatial (1x1) normalized prediction.

A normalized head computes z = tau * <W_k/|W_k|, x/|x|> + b_k, so every
logit stays within tau of its bias. Weights are stored raw and normalized
on evaluation.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, NamedTuple, Sequence, Union

import numpy as np
import numpy.typing as npt

from .exceptions import CheckpointError, DimensionMismatchError
from .numerics import (
    Matrix,
    Vector,
    as_matrix,
    as_vector,
    l2_normalize_rows,
    l2_normalize_rows_backward,
    softmax_rows,
)

logger = logging.getLogger(__name__)

FOREGROUND = 0
BACKGROUND = 1


class HeadGradients(NamedTuple):
    """Gradients of a linear head with respect to its parameters and input."""
    grad_W: Matrix
    grad_b: Vector
    grad_x: npt.NDArray[np.float64]


@dataclass(eq=False)
class LinearHead:
    """
    Linear classifier head.

    W has shape (num_classes, feature_dim). When normalized is set, rows of W
    and the input features are L2-normalized and the cosine scores are
    scaled by tau.
    """
    W: Matrix
    b: Vector
    tau: float = 20.0
    normalized: bool = False
    name: str = "classifier"

    def __post_init__(self) -> None:
        self.W = as_matrix(self.W)
        self.b = as_vector(self.b)
        if self.b.shape[0] != self.W.shape[0]:
            raise DimensionMismatchError("LinearHead bias", (self.W.shape[0],), self.b.shape)
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")

    @classmethod
    def init(
        cls,
        num_classes: int,
        feature_dim: int,
        rng: np.random.Generator,
        tau: float = 20.0,
        normalized: bool = False,
        std: float = 0.01,
        name: str = "classifier",
    ) -> "LinearHead":
        """Zero-mean Gaussian weights with the given std, zero bias."""
        W = rng.normal(0.0, std, size=(num_classes, feature_dim))
        return cls(W, np.zeros(num_classes), tau=tau, normalized=normalized, name=name)

    @property
    def num_classes(self) -> int:
        return int(self.W.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.W.shape[1])

    def copy(self) -> "LinearHead":
        return LinearHead(self.W.copy(), self.b.copy(), self.tau, self.normalized, self.name)

    def _check_features(self, X: Matrix) -> None:
        if X.shape[1] != self.feature_dim:
            raise DimensionMismatchError(f"{self.name} features", (self.feature_dim,), (X.shape[1],))

    def forward_batch(self, X: npt.ArrayLike) -> Matrix:
        """Logits for every row of X."""
        X = as_matrix(X)
        self._check_features(X)
        if not self.normalized:
            return X @ self.W.T + self.b
        W_unit, _ = l2_normalize_rows(self.W)
        X_unit, _ = l2_normalize_rows(X)
        return self.tau * (X_unit @ W_unit.T) + self.b

    def backward_batch(self, X: npt.ArrayLike, grad_Z: npt.ArrayLike) -> HeadGradients:
        """
        Gradients given dL/dZ for a batch.

        Raises:
            DimensionMismatchError: If shapes are inconsistent
            DegenerateNormError: If normalized and a weight row or feature has zero norm
        """
        X = as_matrix(X)
        G = as_matrix(grad_Z)
        self._check_features(X)
        if G.shape != (X.shape[0], self.num_classes):
            raise DimensionMismatchError(f"{self.name} grad_z", (X.shape[0], self.num_classes), G.shape)

        grad_b = G.sum(axis=0)
        if not self.normalized:
            return HeadGradients(G.T @ X, grad_b, G @ self.W)

        W_unit, _ = l2_normalize_rows(self.W)
        X_unit, _ = l2_normalize_rows(X)
        grad_W = l2_normalize_rows_backward(self.W, self.tau * (G.T @ X_unit))
        grad_X = l2_normalize_rows_backward(X, self.tau * (G @ W_unit))
        return HeadGradients(grad_W, grad_b, grad_X)


def linear_forward(head: LinearHead, x: npt.ArrayLike) -> Vector:
    """Logits of one feature vector."""
    return head.forward_batch(as_vector(x)[None, :])[0]


def linear_backward(head: LinearHead, x: npt.ArrayLike, grad_z: npt.ArrayLike) -> HeadGradients:
    """Gradients of one sample; grad_x is a vector."""
    g = head.backward_batch(as_vector(x)[None, :], as_vector(grad_z)[None, :])
    return HeadGradients(g.grad_W, g.grad_b, g.grad_x[0])


@dataclass(eq=False)
class ObjectnessHead:
    """Two-class (foreground, background) normalized head trained with cross-entropy."""
    linear: LinearHead

    def __post_init__(self) -> None:
        if self.linear.num_classes != 2 or not self.linear.normalized:
            raise ValueError("ObjectnessHead needs a normalized LinearHead with exactly 2 outputs")

    @classmethod
    def init(cls, feature_dim: int, rng: np.random.Generator, tau: float = 20.0, std: float = 0.01) -> "ObjectnessHead":
        return cls(LinearHead.init(2, feature_dim, rng, tau=tau, normalized=True, std=std, name="objectness"))

    def forward_batch(self, X: npt.ArrayLike) -> Matrix:
        return self.linear.forward_batch(X)

    def foreground_probability(self, X: npt.ArrayLike) -> Vector:
        return softmax_rows(self.forward_batch(X))[:, FOREGROUND]


def detection_score_batch(sigma_class: npt.ArrayLike, sigma_obj_fg: npt.ArrayLike) -> Matrix:
    """Row-wise detection probabilities sigma_class * sigma_obj_fg."""
    P = as_matrix(sigma_class)
    fg = as_vector(sigma_obj_fg)
    if fg.shape[0] != P.shape[0]:
        raise DimensionMismatchError("detection_score", (P.shape[0],), fg.shape)
    return P * fg[:, None]


def detection_score(sigma_class: npt.ArrayLike, sigma_obj_fg: float) -> Vector:
    """Detection probability of each class: class probability times foreground probability."""
    return detection_score_batch(as_vector(sigma_class)[None, :], [sigma_obj_fg])[0]


@dataclass(eq=False)
class SpatialMap:
    """Feature map of shape (height, width, channels)."""
    data: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise DimensionMismatchError("SpatialMap", (-1, -1, -1), self.data.shape)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    def locations(self) -> Matrix:
        """Features flattened to (height * width, channels), row-major over (y, x)."""
        return self.data.reshape(-1, self.channels)


def spatial_normalized_forward(W: npt.ArrayLike, b: npt.ArrayLike, tau: float, X: SpatialMap) -> npt.NDArray[np.float64]:
    """
    Normalized 1x1 prediction at every location of a feature map.

    Returns:
        Logits of shape (height, width, num_classes)
    """
    head = LinearHead(W, b, tau=tau, normalized=True, name="spatial")
    Z = head.forward_batch(X.locations())
    return Z.reshape(X.height, X.width, head.num_classes)


def spatial_normalized_backward(
    W: npt.ArrayLike,
    b: npt.ArrayLike,
    tau: float,
    X: SpatialMap,
    grad_Z: npt.ArrayLike,
) -> HeadGradients:
    """Gradients of the 1x1 normalized prediction; grad_x has the map's shape."""
    head = LinearHead(W, b, tau=tau, normalized=True, name="spatial")
    G = np.asarray(grad_Z, dtype=np.float64)
    if G.shape != (X.height, X.width, head.num_classes):
        raise DimensionMismatchError("spatial grad_z", (X.height, X.width, head.num_classes), G.shape)
    g = head.backward_batch(X.locations(), G.reshape(-1, head.num_classes))
    return HeadGradients(g.grad_W, g.grad_b, g.grad_x.reshape(X.data.shape))


def _format_row(values: npt.NDArray[np.float64]) -> str:
    return " ".join(repr(float(v)) for v in values)


def save_checkpoint(file_path: Union[str, Path], heads: Sequence[LinearHead]) -> None:
    """
    Save heads as text.

    Each head is a header line `head <name> <num_classes> <feature_dim> <tau> <normalized>`,
    one line per row of W, then one line with b.
    """
    with open(file_path, "w", encoding="utf-8", newline="\n") as f:
        for head in heads:
            normalized = "true" if head.normalized else "false"
            f.write(f"head {head.name} {head.num_classes} {head.feature_dim} {head.tau!r} {normalized}\n")
            for row in head.W:
                f.write(_format_row(row) + "\n")
            f.write(_format_row(head.b) + "\n")
    logger.debug(f"Checkpoint saved: {file_path}")


def load_checkpoint(file_path: Union[str, Path]) -> Dict[str, LinearHead]:
    """
    Load heads written by save_checkpoint, keyed by name in file order.

    Raises:
        CheckpointError: If the file is missing or malformed
    """
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            lines: List[str] = [line.strip() for line in f if line.strip()]
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {file_path}: {e}")

    heads: Dict[str, LinearHead] = {}
    pos = 0
    try:
        while pos < len(lines):
            parts = lines[pos].split()
            if len(parts) != 6 or parts[0] != "head":
                raise CheckpointError(f"Expected a head header at line {pos + 1}: '{lines[pos]}'")
            _, name, rows, cols, tau, normalized = parts
            num_classes, feature_dim = int(rows), int(cols)
            if normalized not in ("true", "false"):
                raise CheckpointError(f"Bad normalized flag '{normalized}' for head {name}")
            block = lines[pos + 1:pos + 2 + num_classes]
            if len(block) != num_classes + 1:
                raise CheckpointError(f"Truncated parameters for head {name}")
            W = np.array([[float(v) for v in line.split()] for line in block[:-1]])
            b = np.array([float(v) for v in block[-1].split()])
            if W.shape != (num_classes, feature_dim) or b.shape != (num_classes,):
                raise CheckpointError(f"Parameter shapes of head {name} don't match its header")
            heads[name] = LinearHead(W, b, tau=float(tau), normalized=normalized == "true", name=name)
            pos += num_classes + 2
    except ValueError as e:
        raise CheckpointError(f"Cannot parse checkpoint {file_path}: {e}")
    return heads
