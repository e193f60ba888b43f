"""
Unit tests for the seesaw_lt.telemetry module.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from seesaw_lt.exceptions import DimensionMismatchError
from seesaw_lt.losses import ce_loss_batch
from seesaw_lt.telemetry import (
    GradRatioRow,
    TelemetryLog,
    grad_ratio_report,
    group_mean_ratios,
    read_report_csv,
    write_report_csv,
)


class TestTelemetryLog:
    """Tests for gradient accumulation."""

    def test_record_splits_positive_and_negative(self) -> None:
        log = TelemetryLog.empty(3)
        G = np.array([[-0.6, 0.4, 0.2], [0.1, -0.3, 0.2]])
        log.record(np.array([0, 1]), G)
        assert np.allclose(log.pos_grad_sum, [0.6, 0.3, 0.0])
        assert np.allclose(log.neg_grad_sum, [0.1, 0.4, 0.4])

    def test_sums_never_decrease(self, rng: np.random.Generator) -> None:
        log = TelemetryLog.empty(4)
        previous = (log.pos_grad_sum.copy(), log.neg_grad_sum.copy())
        for _ in range(20):
            labels = rng.integers(0, 4, size=8)
            log.record(labels, ce_loss_batch(rng.normal(size=(8, 4)), labels).grad_logits)
            assert np.all(log.pos_grad_sum >= previous[0])
            assert np.all(log.neg_grad_sum >= previous[1])
            previous = (log.pos_grad_sum.copy(), log.neg_grad_sum.copy())

    def test_does_not_modify_gradients(self) -> None:
        G = np.array([[-0.5, 0.5]])
        TelemetryLog.empty(2).record(np.array([0]), G)
        assert np.array_equal(G, [[-0.5, 0.5]])

    def test_shape_mismatch(self) -> None:
        with pytest.raises(DimensionMismatchError):
            TelemetryLog.empty(3).record(np.array([0]), np.zeros((1, 2)))


class TestGradRatioReport:
    """Tests for the per-class ratio report."""

    def test_sorted_by_descending_count(self) -> None:
        log = TelemetryLog(np.array([1.0, 2.0, 3.0]), np.array([2.0, 1.0, 4.0]))
        rows = grad_ratio_report(log, np.array([5, 50, 20]))
        assert [row.class_index for row in rows] == [1, 2, 0]
        assert rows[0].ratio == pytest.approx(2.0)
        assert rows[2].ratio == pytest.approx(0.5)

    def test_empty_log_reports_infinity(self) -> None:
        rows = grad_ratio_report(TelemetryLog.empty(3), np.array([3, 2, 1]))
        assert all(math.isinf(row.ratio) for row in rows)

    def test_group_means_skip_infinite_ratios(self) -> None:
        rows = [
            GradRatioRow(0, 10, 2.0, 1.0, 2.0),
            GradRatioRow(1, 5, 1.0, 1.0, 1.0),
            GradRatioRow(2, 1, 0.0, 0.0, math.inf),
        ]
        groups = {"frequent": np.array([0]), "common": np.array([1, 2]), "rare": np.array([2])}
        means = group_mean_ratios(rows, groups)
        assert means["frequent"] == 2.0
        assert means["common"] == 1.0
        assert math.isnan(means["rare"])

    def test_csv_round_trip(self, tmp_path: Path) -> None:
        log = TelemetryLog(np.array([0.1, 2.0 / 3.0, 0.0]), np.array([0.3, 1.0, 0.0]))
        rows = grad_ratio_report(log, np.array([9, 4, 1]))
        path = tmp_path / "telemetry.csv"
        write_report_csv(path, rows)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "class_index,count,pos_grad_sum,neg_grad_sum,ratio"
        assert read_report_csv(path) == rows
