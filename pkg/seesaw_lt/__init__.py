"""
Seesaw loss for long-tailed classification.

This package provides the Seesaw and cross-entropy losses with analytic
gradients, normalized prediction heads, long-tailed samplers, a synthetic
dataset generator and a small trainer for running experiments at desk scale.
"""

from .config import ExperimentConfig, SamplerKind, SeesawConfig, SyntheticSpec, TrainConfig, load_settings
from .counts import ClassCounts, counts_from_dataset, counts_update
from .data import Dataset, frequency_groups, generate, generate_balanced
from .heads import LinearHead, ObjectnessHead, detection_score, linear_backward, linear_forward
from .losses import CrossEntropyLoss, SeesawLoss, ce_loss, compensation_factor, mitigation_factor, seesaw_factors, seesaw_loss
from .models import Metrics
from .samplers import epoch_indices
from .telemetry import TelemetryLog, grad_ratio_report
from .trainer import TrainResult, compare, evaluate, sweep, train

__version__ = "0.1.0"
__all__ = [
    "ExperimentConfig",
    "SamplerKind",
    "SeesawConfig",
    "SyntheticSpec",
    "TrainConfig",
    "load_settings",
    "ClassCounts",
    "counts_from_dataset",
    "counts_update",
    "Dataset",
    "frequency_groups",
    "generate",
    "generate_balanced",
    "LinearHead",
    "ObjectnessHead",
    "detection_score",
    "linear_backward",
    "linear_forward",
    "CrossEntropyLoss",
    "SeesawLoss",
    "ce_loss",
    "compensation_factor",
    "mitigation_factor",
    "seesaw_factors",
    "seesaw_loss",
    "Metrics",
    "epoch_indices",
    "TelemetryLog",
    "grad_ratio_report",
    "TrainResult",
    "compare",
    "evaluate",
    "sweep",
    "train",
]
