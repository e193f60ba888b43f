"""
Unit tests for the seesaw_lt.gradcheck module.
"""

import numpy as np
import pytest

from seesaw_lt.gradcheck import SUITES, SuiteResult, numeric_gradient, relative_error, run_gradcheck, run_suite


class TestHelpers:
    """Tests for the finite-difference helpers."""

    def test_numeric_gradient_of_quadratic(self) -> None:
        x = np.array([[1.0, -2.0], [0.5, 3.0]])
        grad = numeric_gradient(lambda v: float(np.sum(v ** 2)), x)
        assert np.allclose(grad, 2.0 * x, atol=1e-8)
        assert np.array_equal(x, [[1.0, -2.0], [0.5, 3.0]])

    def test_relative_error(self) -> None:
        assert relative_error([1.0, 0.0], [1.0, 0.0]) == 0.0
        assert relative_error([2.0, 0.0], [1.0, 0.0]) == pytest.approx(0.5)
        assert relative_error([0.0], [1e-12]) == pytest.approx(1e-4)

    def test_suite_result_threshold(self) -> None:
        assert SuiteResult("x", 1, 1e-7, 1e-6).passed
        assert not SuiteResult("x", 1, 1e-6, 1e-6).passed


class TestSuites:
    """The analytic gradients of every suite match finite differences."""

    @pytest.mark.parametrize("name", list(SUITES))
    def test_suite_passes(self, name: str) -> None:
        result = run_suite(name, trials=200, tol=1e-6)
        assert result.passed, f"{name}: max relative error {result.max_rel_error:.3e}"

    def test_run_gradcheck_covers_all_suites(self) -> None:
        results = run_gradcheck(trials=2)
        assert [r.name for r in results] == list(SUITES)

    def test_deterministic(self) -> None:
        assert run_suite("ce_loss", 5, seed=3) == run_suite("ce_loss", 5, seed=3)

    def test_unknown_suite(self) -> None:
        with pytest.raises(ValueError):
            run_suite("focal_loss", 1)

    def test_zero_trials(self) -> None:
        with pytest.raises(ValueError):
            run_suite("ce_loss", 0)
