"""
Integration tests for training on a 20-class long-tailed dataset.

These tests run complete CE and Seesaw trainings and check the qualitative
behaviour on the tail: better rare-class accuracy, the shape of the p and q
sweeps, and a positive/negative gradient balance that no longer collapses
toward the rare classes.
"""

from typing import Dict, List

import numpy as np
import pytest

from seesaw_lt.config import SeesawConfig, SyntheticSpec, TrainConfig
from seesaw_lt.data import Dataset, frequency_groups, generate, generate_balanced
from seesaw_lt.models import SweepSummary
from seesaw_lt.telemetry import grad_ratio_report, group_mean_ratios
from seesaw_lt.trainer import TrainResult, classifier_class_counts, compare, summarize_sweep, sweep, train

SEEDS = [0, 1, 2]
COMPARE_SEEDS = [0, 1, 2, 3, 4]
P_VALUES = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2]
Q_VALUES = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]


def long_tail_spec(seed: int) -> SyntheticSpec:
    return SyntheticSpec(num_classes=20, feature_dim=8, imbalance_ratio=100.0, max_count=200, test_per_class=50, seed=seed)


@pytest.fixture(scope="module")
def long_tail_dataset() -> Dataset:
    """Return the seed-0 training split (head class 200 samples, tail class 2)."""
    return generate(long_tail_spec(0))


@pytest.fixture(scope="module")
def long_tail_config() -> TrainConfig:
    """Return the training settings shared by the runs below."""
    return TrainConfig(epochs=15, batch_size=16, lr=0.05, momentum=0.9, seed=0)


def group_ratios(ds: Dataset, result: TrainResult) -> Dict[str, float]:
    report = grad_ratio_report(result.telemetry, classifier_class_counts(ds))
    return group_mean_ratios(report, frequency_groups(ds.class_counts_static))


def spread(values: List[float]) -> float:
    return max(values) - min(values)


@pytest.mark.integration
@pytest.mark.slow
class TestTailAccuracy:
    """Seesaw against cross-entropy on the same data."""

    def test_seesaw_improves_rare_accuracy_on_every_seed(self, long_tail_config: TrainConfig) -> None:
        for seed in COMPARE_SEEDS:
            spec = long_tail_spec(seed)
            row = compare(generate(spec), long_tail_config, [seed], test_ds=generate_balanced(spec))[0]
            assert row.delta["rare"] > 0.0, f"seed {seed}: {row.delta}"
            assert row.delta["overall"] >= -0.01, f"seed {seed}: {row.delta}"

    def test_zero_exponents_match_cross_entropy(self, long_tail_dataset: Dataset, long_tail_config: TrainConfig) -> None:
        ce = train(long_tail_dataset, long_tail_config.with_loss("ce"))
        flat = train(long_tail_dataset, long_tail_config.model_copy(update={"seesaw": SeesawConfig(p=0.0, q=0.0)}))
        assert np.array_equal(ce.head.W, flat.head.W)
        assert ce.metrics == flat.metrics


@pytest.mark.integration
@pytest.mark.slow
class TestHyperParameterTrends:
    """Shape of the p and q sweeps averaged over three seeds."""

    @pytest.fixture(scope="class")
    def p_sweep(self, long_tail_dataset: Dataset, long_tail_config: TrainConfig) -> List[SweepSummary]:
        return summarize_sweep(sweep(long_tail_dataset, long_tail_config, "p", P_VALUES, seeds=SEEDS))

    @pytest.fixture(scope="class")
    def q_sweep(self, long_tail_dataset: Dataset, long_tail_config: TrainConfig) -> List[SweepSummary]:
        return summarize_sweep(sweep(long_tail_dataset, long_tail_config, "q", Q_VALUES, seeds=SEEDS))

    def test_rare_accuracy_rises_past_smallest_p(self, p_sweep: List[SweepSummary]) -> None:
        rare = {s.value: s.rare_acc for s in p_sweep}
        best = max(rare, key=lambda value: rare[value])
        assert best != P_VALUES[0], rare
        assert rare[0.8] > rare[0.2], rare

    def test_q_is_less_sensitive_than_p(self, p_sweep: List[SweepSummary], q_sweep: List[SweepSummary]) -> None:
        p_spread = spread([s.overall_acc for s in p_sweep])
        q_spread = spread([s.overall_acc for s in q_sweep])
        assert q_spread < p_spread, (p_spread, q_spread)


@pytest.mark.integration
@pytest.mark.slow
class TestGradientBalance:
    """Accumulated positive/negative gradient ratios per frequency group."""

    def test_cross_entropy_ratio_falls_toward_tail(self, long_tail_dataset: Dataset, long_tail_config: TrainConfig) -> None:
        ratios = group_ratios(long_tail_dataset, train(long_tail_dataset, long_tail_config.with_loss("ce")))
        assert ratios["frequent"] > ratios["common"] > ratios["rare"], ratios

    def test_seesaw_narrows_ratio_spread(self, long_tail_dataset: Dataset, long_tail_config: TrainConfig) -> None:
        ce = group_ratios(long_tail_dataset, train(long_tail_dataset, long_tail_config.with_loss("ce")))
        seesaw = group_ratios(long_tail_dataset, train(long_tail_dataset, long_tail_config))
        assert seesaw["rare"] > ce["rare"]
        assert max(seesaw.values()) / min(seesaw.values()) < max(ce.values()) / min(ce.values())


@pytest.mark.integration
@pytest.mark.slow
class TestCountSources:
    """Online, dataset-derived and recorded counts lead to similar models."""

    def test_recorded_counts_match_online_on_every_seed(self, long_tail_config: TrainConfig) -> None:
        recorded_seesaw = SeesawConfig(count_source="pre_recorded")
        for seed in SEEDS:
            spec = long_tail_spec(seed)
            ds, test_ds = generate(spec), generate_balanced(spec)
            cfg = long_tail_config.model_copy(update={"seed": seed})
            online = train(ds, cfg, test_ds=test_ds)
            assert online.counts is not None
            recorded_cfg = cfg.model_copy(update={"seesaw": recorded_seesaw})
            recorded = train(ds, recorded_cfg, test_ds=test_ds, recorded_counts=online.counts)
            gap = abs(recorded.metrics.overall_acc - online.metrics.overall_acc)
            assert gap <= 0.01, f"seed {seed}: online {online.metrics.overall_acc}, recorded {recorded.metrics.overall_acc}"

    def test_dataset_counts_close_to_recorded(self, long_tail_dataset: Dataset, long_tail_config: TrainConfig) -> None:
        online = train(long_tail_dataset, long_tail_config)
        recorded_cfg = long_tail_config.model_copy(update={"seesaw": SeesawConfig(count_source="pre_recorded")})
        recorded = train(long_tail_dataset, recorded_cfg, recorded_counts=online.counts)
        static_cfg = long_tail_config.model_copy(update={"seesaw": SeesawConfig(count_source="from_dataset")})
        static = train(long_tail_dataset, static_cfg)
        assert abs(static.metrics.overall_acc - recorded.metrics.overall_acc) < 0.05
