"""
Unit tests for the seesaw_lt.numerics module.
"""

import numpy as np
import pytest

from seesaw_lt.exceptions import DegenerateNormError, DimensionMismatchError
from seesaw_lt.numerics import (
    as_matrix,
    as_vector,
    l2_normalize,
    l2_normalize_backward,
    l2_normalize_rows,
    l2_normalize_rows_backward,
    matvec,
    softmax,
    softmax_rows,
)


class TestShapes:
    """Tests for shape coercion and matvec."""

    def test_as_vector_rejects_matrix(self) -> None:
        with pytest.raises(DimensionMismatchError):
            as_vector([[1.0, 2.0]])

    def test_as_matrix_rejects_vector(self) -> None:
        with pytest.raises(DimensionMismatchError):
            as_matrix([1.0, 2.0])

    def test_matvec(self) -> None:
        """Test a small product against hand-computed values."""
        W = [[1.0, 2.0], [0.0, -1.0], [3.0, 0.5]]
        assert np.array_equal(matvec(W, [2.0, 1.0]), [4.0, -1.0, 6.5])

    def test_matvec_dimension_mismatch(self) -> None:
        with pytest.raises(DimensionMismatchError) as excinfo:
            matvec(np.ones((3, 2)), np.ones(3))
        assert excinfo.value.expected == (2,)
        assert excinfo.value.actual == (3,)


class TestL2Normalize:
    """Tests for L2 normalization and its backward pass."""

    def test_unit_norm(self, rng: np.random.Generator) -> None:
        unit, norms = l2_normalize_rows(rng.normal(size=(50, 7)))
        assert np.allclose(np.linalg.norm(unit, axis=1), 1.0, atol=1e-12)
        assert np.all(norms > 0)

    def test_three_four_five(self) -> None:
        unit, norm = l2_normalize([3.0, 4.0])
        assert norm == 5.0
        assert np.allclose(unit, [0.6, 0.8], atol=1e-15)

    def test_zero_vector_forward(self) -> None:
        """The zero vector normalizes to zero with norm 0 instead of failing."""
        unit, norm = l2_normalize(np.zeros(4))
        assert norm == 0.0
        assert np.array_equal(unit, np.zeros(4))

    def test_zero_vector_backward_raises(self) -> None:
        with pytest.raises(DegenerateNormError):
            l2_normalize_backward(np.zeros(3), np.ones(3))

    def test_backward_is_orthogonal_to_input(self, rng: np.random.Generator) -> None:
        """Scaling v doesn't change v/|v|, so the gradient has no radial component."""
        X = rng.normal(size=(20, 5))
        G = rng.normal(size=(20, 5))
        grad = l2_normalize_rows_backward(X, G)
        assert np.allclose(np.einsum("ij,ij->i", grad, X), 0.0, atol=1e-12)

    def test_backward_matches_projection_formula(self, rng: np.random.Generator) -> None:
        v = rng.normal(size=6)
        g = rng.normal(size=6)
        u = v / np.linalg.norm(v)
        expected = (np.eye(6) - np.outer(u, u)) @ g / np.linalg.norm(v)
        assert np.allclose(l2_normalize_backward(v, g), expected, atol=1e-13)

    def test_vector_and_batch_forms_agree(self, rng: np.random.Generator) -> None:
        X = rng.normal(size=(4, 3))
        G = rng.normal(size=(4, 3))
        batch = l2_normalize_rows_backward(X, G)
        for k in range(4):
            assert np.array_equal(l2_normalize_backward(X[k], G[k]), batch[k])

    def test_backward_shape_mismatch(self) -> None:
        with pytest.raises(DimensionMismatchError):
            l2_normalize_rows_backward(np.ones((2, 3)), np.ones((2, 4)))


class TestSoftmax:
    """Tests for softmax."""

    def test_sums_to_one(self, rng: np.random.Generator) -> None:
        P = softmax_rows(rng.normal(scale=10.0, size=(30, 9)))
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)

    def test_large_logits_are_stable(self) -> None:
        p = softmax([1000.0, 1000.0, -1000.0])
        assert np.all(np.isfinite(p))
        assert np.allclose(p, [0.5, 0.5, 0.0])

    def test_shift_invariance(self, rng: np.random.Generator) -> None:
        z = rng.normal(size=5)
        assert np.allclose(softmax(z), softmax(z + 123.0), atol=1e-12)
