"""
Test fixtures for the seesaw_lt project.

This module provides fixtures that can be used across all test files
to reduce duplication and provide standardized test data.
"""

from pathlib import Path
from typing import Any, Protocol

import numpy as np
import pytest

from seesaw_lt.config import SamplerKind, SeesawConfig, SyntheticSpec, TrainConfig
from seesaw_lt.counts import ClassCounts
from seesaw_lt.data import Dataset, generate, generate_balanced


class MockFixture(Protocol):
    """Protocol for pytest-mock's MockerFixture."""
    def patch(self, target: str, **kwargs: Any) -> Any: ...
    def spy(self, obj: Any, name: str) -> Any: ...
    def MagicMock(self, **kwargs: Any) -> Any: ...


# --------- Test Environment Setup --------- #

@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep a developer's SEESAW_SEED from leaking into tests."""
    monkeypatch.delenv("SEESAW_SEED", raising=False)


# --------- Sample Data Fixtures --------- #


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a fixed-seed generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def small_spec() -> SyntheticSpec:
    """Return a small, well separated long-tailed spec (6 classes, ratio 20)."""
    return SyntheticSpec(
        num_classes=6,
        feature_dim=4,
        imbalance_ratio=20.0,
        max_count=60,
        class_separation=3.0,
        noise_std=0.5,
        test_per_class=20,
        seed=7,
    )


@pytest.fixture
def small_dataset(small_spec: SyntheticSpec) -> Dataset:
    """Return the training split of small_spec."""
    return generate(small_spec)


@pytest.fixture
def small_test_dataset(small_spec: SyntheticSpec) -> Dataset:
    """Return the balanced evaluation split of small_spec."""
    return generate_balanced(small_spec)


@pytest.fixture
def background_spec(small_spec: SyntheticSpec) -> SyntheticSpec:
    """Return small_spec with a quarter of the samples drawn as background."""
    return small_spec.model_copy(update={"background_fraction": 0.25})


@pytest.fixture
def fast_train_config() -> TrainConfig:
    """Return a short training configuration suitable for unit tests."""
    return TrainConfig(epochs=3, batch_size=16, lr=0.05, momentum=0.9, seed=3)


@pytest.fixture
def seesaw_config() -> SeesawConfig:
    """Return the default Seesaw hyper-parameters (p=0.8, q=2)."""
    return SeesawConfig()


@pytest.fixture
def rfs_sampler() -> SamplerKind:
    """Return a repeat factor sampler with the default threshold."""
    return SamplerKind(kind="repeat_factor", threshold=0.001)


@pytest.fixture
def head_tail_counts() -> ClassCounts:
    """Return counts for a head class (100), a tail class (10) and a middle class (50)."""
    return ClassCounts(np.array([100.0, 10.0, 50.0]))


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    """Write a small flat experiment file and return its path."""
    path = tmp_path / "experiment.cfg"
    path.write_text(
        "# small experiment\n"
        "num_classes = 6\n"
        "feature_dim = 4\n"
        "imbalance_ratio = 20\n"
        "max_count = 60\n"
        "class_separation = 3.0\n"
        "noise_std = 0.5\n"
        "test_per_class = 10\n"
        "epochs = 2\n"
        "lr = 0.05\n"
        "seed = 5\n"
        f"output_dir = {tmp_path / 'out'}\n",
        encoding="utf-8",
    )
    return path
