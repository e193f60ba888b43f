"""
Centralized configuration system for seesaw_lt.

This module provides a Pydantic-based configuration layer for dataset
generation, training and the Seesaw hyper-parameters. Experiment files are
flat `key = value` text files; flat keys are mapped onto the nested models,
then environment defaults and command-line overrides are applied.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Final, List, Literal, Mapping, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

SEED_ENV_VAR: Final[str] = "SEESAW_SEED"

# Default weight std at initialization. A normalized head only sees the
# direction of its rows, and its input gradient scales with tau / |w|, so it
# starts from unit-scale rows.
PLAIN_INIT_STD: Final[float] = 0.01
NORMALIZED_INIT_STD: Final[float] = 1.0

CountSource = Literal["online", "pre_recorded", "from_dataset"]
LossName = Literal["ce", "seesaw"]
PipelineName = Literal["end_to_end", "decoupled"]


class SyntheticSpec(BaseModel):
    """Settings for the synthetic long-tailed dataset generator."""
    num_classes: int = Field(default=20, ge=2)
    feature_dim: int = Field(default=8, ge=1)
    imbalance_ratio: float = Field(default=100.0, gt=1.0)
    max_count: int = Field(default=200, ge=1)
    class_separation: float = Field(default=1.0, gt=0.0)
    noise_std: float = Field(default=1.0, ge=0.0)
    background_fraction: float = Field(default=0.0, ge=0.0, lt=1.0)
    test_per_class: int = Field(default=50, ge=1)
    seed: int = Field(default=0, ge=0)

    model_config: Any = ConfigDict(frozen=True)


class SamplerKind(BaseModel):
    """Epoch sampler selection; threshold only matters for repeat_factor."""
    kind: Literal["random", "repeat_factor", "class_balanced"] = "random"
    threshold: float = Field(default=0.001, gt=0.0, lt=1.0)

    model_config: Any = ConfigDict(frozen=True)


class SeesawConfig(BaseModel):
    """Seesaw hyper-parameters and feature switches."""
    p: float = Field(default=0.8, ge=0.0)
    q: float = Field(default=2.0, ge=0.0)
    tau: float = Field(default=20.0, gt=0.0)
    use_mitigation: bool = True
    use_compensation: bool = True
    count_source: CountSource = "online"
    counts_file: Optional[Path] = None
    init_value: float = Field(default=1.0, gt=0.0)

    model_config: Any = ConfigDict(frozen=True)


class TrainConfig(BaseModel):
    """Settings for the mini training loop."""
    epochs: int = Field(default=20, ge=0)
    batch_size: int = Field(default=16, ge=1)
    lr: float = Field(default=0.1, ge=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=0.0, ge=0.0)
    lr_decay_epochs: Tuple[int, ...] = ()
    lr_decay: float = Field(default=0.1, gt=0.0, le=1.0)
    sampler: SamplerKind = Field(default_factory=SamplerKind)
    loss: LossName = "seesaw"
    seesaw: SeesawConfig = Field(default_factory=SeesawConfig)
    normalized: bool = False
    use_objectness: bool = False
    pipeline: PipelineName = "end_to_end"
    pretrain_loss: LossName = "ce"
    finetune_sampler: SamplerKind = Field(default_factory=lambda: SamplerKind(kind="repeat_factor"))
    finetune_epochs: Optional[int] = Field(default=None, ge=1)
    rare_max: Optional[int] = Field(default=None, ge=0)
    common_max: Optional[int] = Field(default=None, ge=0)
    init_std: Optional[float] = Field(default=None, gt=0.0)
    divergence_threshold: float = Field(default=1e6, gt=0.0)
    seed: int = Field(default=0, ge=0)

    model_config: Any = ConfigDict(frozen=True)

    @field_validator("lr_decay_epochs", mode="before")
    @classmethod
    def parse_decay_epochs(cls, v: Any) -> Any:
        """Accept a comma-separated string as written in experiment files."""
        if isinstance(v, str):
            return tuple(int(part) for part in v.split(",") if part.strip())
        return v

    @model_validator(mode="after")
    def check_group_thresholds(self) -> "TrainConfig":
        if (self.rare_max is None) != (self.common_max is None):
            raise ValueError("rare_max and common_max must be given together")
        if self.rare_max is not None and self.common_max is not None and self.rare_max >= self.common_max:
            raise ValueError("rare_max must be smaller than common_max")
        return self

    @property
    def head_tau(self) -> float:
        """Temperature used to build normalized heads."""
        return self.seesaw.tau

    @property
    def head_init_std(self) -> float:
        """Weight std of a fresh classifier; `init_std` when set, else by head type."""
        if self.init_std is not None:
            return self.init_std
        return NORMALIZED_INIT_STD if self.normalized else PLAIN_INIT_STD

    @property
    def objectness_init_std(self) -> float:
        return self.init_std if self.init_std is not None else NORMALIZED_INIT_STD

    @property
    def resolved_finetune_epochs(self) -> int:
        if self.finetune_epochs is not None:
            return self.finetune_epochs
        return max(1, self.epochs // 2)

    def with_loss(self, loss: LossName) -> "TrainConfig":
        return self.model_copy(update={"loss": loss})


class OutputSettings(BaseModel):
    """Where a run reads external data and writes its results."""
    output_dir: Path = Field(default=Path("runs"))
    dataset_csv: Optional[Path] = None

    model_config: Any = ConfigDict(frozen=True)


class ExperimentConfig(BaseModel):
    """Main experiment settings."""
    data: SyntheticSpec = Field(default_factory=SyntheticSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    output: OutputSettings = Field(default_factory=OutputSettings)

    model_config: Any = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_recorded_counts(self) -> "ExperimentConfig":
        seesaw = self.train.seesaw
        if seesaw.count_source == "pre_recorded":
            if seesaw.counts_file is None:
                raise ValueError("count_source=pre_recorded requires counts_file")
            if not seesaw.counts_file.exists():
                raise ValueError(f"counts_file does not exist: {seesaw.counts_file}")
        if self.output.dataset_csv is not None and not self.output.dataset_csv.exists():
            raise ValueError(f"dataset_csv does not exist: {self.output.dataset_csv}")
        return self


# Named hyper-parameter sets: the detection setting and the classification setting.
PRESETS: Final[Dict[str, Dict[str, Any]]] = {
    "lvis": {"p": 0.8, "q": 2.0, "tau": 20.0},
    "imagenet_lt": {"p": 0.8, "q": 1.0, "tau": 20.0},
}

_SECTION_FIELDS: Final[Dict[str, Tuple[str, ...]]] = {
    "data": tuple(SyntheticSpec.model_fields),
    "train": tuple(name for name in TrainConfig.model_fields if name not in ("sampler", "seesaw", "finetune_sampler")),
    "seesaw": tuple(SeesawConfig.model_fields),
    "output": tuple(OutputSettings.model_fields),
}

# Flat keys whose names don't match a single model field.
_SPECIAL_KEYS: Final[Dict[str, List[Tuple[str, ...]]]] = {
    "seed": [("train", "seed"), ("data", "seed")],
    "data_seed": [("data", "seed")],
    "sampler": [("train", "sampler", "kind")],
    "finetune_sampler": [("train", "finetune_sampler", "kind")],
    "rfs_threshold": [("train", "sampler", "threshold"), ("train", "finetune_sampler", "threshold")],
}


def _flat_key_paths(key: str) -> List[Tuple[str, ...]]:
    if key in _SPECIAL_KEYS:
        return _SPECIAL_KEYS[key]
    if key in _SECTION_FIELDS["seesaw"]:
        return [("train", "seesaw", key)]
    for section in ("data", "train", "output"):
        if key in _SECTION_FIELDS[section]:
            return [(section, key)]
    return []


def _set_path(tree: Dict[str, Any], path: Tuple[str, ...], value: Any) -> None:
    node = tree
    for part in path[:-1]:
        node = node.setdefault(part, {})
    node[path[-1]] = value


def flat_to_nested(flat: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Map flat experiment keys onto the nested ExperimentConfig structure.

    Raises:
        ConfigurationError: For unknown keys or unknown presets
    """
    flat = dict(flat)
    unknown: List[str] = []
    tree: Dict[str, Any] = {}

    preset = flat.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigurationError(f"Unknown preset '{preset}'", [f"choose one of: {', '.join(PRESETS)}"])
        for key, value in PRESETS[preset].items():
            _set_path(tree, ("train", "seesaw", key), value)

    # data_seed is applied after seed so it wins for the dataset.
    for key in sorted(flat, key=lambda k: k == "data_seed"):
        value = flat[key]
        if value is None:
            continue
        paths = _flat_key_paths(key)
        if not paths:
            unknown.append(key)
            continue
        for path in paths:
            _set_path(tree, path, value)

    if unknown:
        raise ConfigurationError("Unknown configuration keys", [f"'{key}'" for key in sorted(unknown)])
    finetune = tree.get("train", {}).get("finetune_sampler")
    if finetune is not None:
        finetune.setdefault("kind", "repeat_factor")
    return tree


def load_settings(
    config_file: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """
    Load experiment settings from a flat config file, the environment and overrides.

    Precedence (lowest to highest): model defaults, config file, SEESAW_SEED,
    overrides. Override values of None are ignored so callers can pass every
    command-line option unconditionally.

    Args:
        config_file: Path to a `key = value` file (optional)
        overrides: Flat key/value overrides, typically from command-line flags
        environ: Environment mapping (defaults to os.environ)

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigurationError: If the file is missing, has unknown keys, or validation fails
    """
    flat: Dict[str, Any] = {}

    if config_file is not None:
        if not config_file.is_file():
            raise ConfigurationError(f"Config file not found: {config_file}")
        file_values = dotenv_values(config_file)
        flat.update({key: value for key, value in file_values.items() if value is not None})
        logger.debug(f"Loaded {len(file_values)} keys from {config_file}")

    env = os.environ if environ is None else environ
    if SEED_ENV_VAR in env:
        flat["seed"] = env[SEED_ENV_VAR]

    for key, value in (overrides or {}).items():
        if value is not None:
            flat[key] = value

    tree = flat_to_nested(flat)
    try:
        return ExperimentConfig(**tree)
    except ValidationError as e:
        messages = [f"{'.'.join(str(loc) for loc in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigurationError("Invalid configuration", messages)
