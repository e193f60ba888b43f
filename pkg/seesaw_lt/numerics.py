"""
Dense numerics shared by the loss, head and trainer modules.

Vectors and matrices are plain 64-bit numpy arrays. The functions here add
shape validation and the few differentiable primitives the rest of the
package needs: softmax and L2 normalization with its backward pass. Each
per-vector operation is the batched (row-wise) operation applied to a
one-row batch, so both forms agree bit-for-bit.
"""

import logging
from typing import Final, Tuple

import numpy as np
import numpy.typing as npt

from .exceptions import DegenerateNormError, DimensionMismatchError

logger = logging.getLogger(__name__)

Vector = npt.NDArray[np.float64]
Matrix = npt.NDArray[np.float64]

# Norms at or below this are treated as zero.
NORM_EPS: Final[float] = 1e-12


def as_vector(values: npt.ArrayLike) -> Vector:
    """Coerce to a 1-D float64 array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError("as_vector", (-1,), v.shape)
    return v


def as_matrix(values: npt.ArrayLike) -> Matrix:
    """Coerce to a 2-D float64 array."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatchError("as_matrix", (-1, -1), m.shape)
    return m


def matvec(W: npt.ArrayLike, x: npt.ArrayLike) -> Vector:
    """
    Matrix-vector product.

    Args:
        W: Matrix of shape (rows, cols)
        x: Vector of length cols

    Returns:
        Vector of length rows

    Raises:
        DimensionMismatchError: If W.cols != len(x)
    """
    W = as_matrix(W)
    x = as_vector(x)
    if W.shape[1] != x.shape[0]:
        raise DimensionMismatchError("matvec", (W.shape[1],), x.shape)
    return W @ x


def l2_normalize_rows(X: npt.ArrayLike) -> Tuple[Matrix, Vector]:
    """
    Normalize each row of X to unit L2 norm.

    Rows with norm at or below NORM_EPS map to zero rows with reported norm 0,
    so a transiently vanishing feature never aborts a forward pass.

    Returns:
        (unit rows, per-row norms)
    """
    X = as_matrix(X)
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    degenerate = norms <= NORM_EPS
    safe = np.where(degenerate, 1.0, norms)
    unit = X / safe[:, None]
    if degenerate.any():
        unit[degenerate] = 0.0
        norms = np.where(degenerate, 0.0, norms)
    return unit, norms


def l2_normalize(v: npt.ArrayLike) -> Tuple[Vector, float]:
    """
    L2-normalize a vector.

    Returns:
        (unit vector, norm); the zero vector and 0.0 when the norm is degenerate
    """
    unit, norms = l2_normalize_rows(as_vector(v)[None, :])
    return unit[0], float(norms[0])


def l2_normalize_rows_backward(X: npt.ArrayLike, grad_unit: npt.ArrayLike) -> Matrix:
    """
    Backward pass of row-wise L2 normalization.

    For each row x with unit u = x/|x|, returns (I - u u^T) g / |x|.

    Raises:
        DimensionMismatchError: If shapes differ
        DegenerateNormError: If any row has norm at or below NORM_EPS
    """
    X = as_matrix(X)
    G = as_matrix(grad_unit)
    if X.shape != G.shape:
        raise DimensionMismatchError("l2_normalize_backward", X.shape, G.shape)
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    if X.shape[0] and norms.min() <= NORM_EPS:
        raise DegenerateNormError(norm=float(norms.min()))
    unit = X / norms[:, None]
    radial = np.einsum("ij,ij->i", unit, G)
    return (G - unit * radial[:, None]) / norms[:, None]


def l2_normalize_backward(v: npt.ArrayLike, grad_unit: npt.ArrayLike) -> Vector:
    """Gradient with respect to v given the gradient with respect to v/|v|."""
    v = as_vector(v)
    g = as_vector(grad_unit)
    if v.shape != g.shape:
        raise DimensionMismatchError("l2_normalize_backward", v.shape, g.shape)
    return l2_normalize_rows_backward(v[None, :], g[None, :])[0]


def softmax_rows(Z: npt.ArrayLike) -> Matrix:
    """Row-wise softmax with max-subtraction."""
    Z = as_matrix(Z)
    shifted = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax(z: npt.ArrayLike) -> Vector:
    """Numerically stable softmax of a logit vector."""
    return softmax_rows(as_vector(z)[None, :])[0]
