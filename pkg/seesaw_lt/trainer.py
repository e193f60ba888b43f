"""
Mini training loop for linear heads.

Trains a LinearHead (and optionally an objectness head) with SGD and momentum
under cross-entropy or Seesaw loss, in an end-to-end or decoupled pipeline,
then evaluates it on a balanced split. Sweeps and paired CE/Seesaw
comparisons are built on top of train().
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import numpy.typing as npt

from .api import ClassificationLoss
from .config import LossName, SamplerKind, SeesawConfig, TrainConfig
from .counts import ClassCounts, counts_from_dataset
from .data import BACKGROUND_LABEL, GROUP_NAMES, Dataset, frequency_groups, generate_balanced
from .exceptions import ConfigurationError, DimensionMismatchError, DivergenceError
from .heads import BACKGROUND, FOREGROUND, LinearHead, ObjectnessHead, detection_score_batch
from .losses import CrossEntropyLoss, SeesawLoss, ce_loss_batch
from .models import CompareRow, Metrics, SweepRow, SweepSummary
from .numerics import softmax_rows
from .samplers import epoch_indices
from .telemetry import TelemetryLog

logger = logging.getLogger(__name__)

SWEEPABLE_PARAMS = ("p", "q", "tau")


@dataclass(eq=False)
class TrainResult:
    """Everything a training run produces."""
    head: LinearHead
    metrics: Metrics
    telemetry: TelemetryLog
    counts: Optional[ClassCounts] = None
    objectness: Optional[ObjectnessHead] = None
    pretrain_head: Optional[LinearHead] = None


@dataclass
class SGD:
    """SGD with momentum: v = mu * v + g, param -= lr * v."""
    lr: float
    momentum: float = 0.9
    weight_decay: float = 0.0
    _velocity: Dict[str, npt.NDArray[np.float64]] = field(default_factory=dict)

    def step(self, key: str, param: npt.NDArray[np.float64], grad: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        if self.weight_decay:
            grad = grad + self.weight_decay * param
        v = self._velocity.get(key)
        v = grad if v is None else self.momentum * v + grad
        self._velocity[key] = v
        return param - self.lr * v


def _classifier_labels(ds: Dataset, use_objectness: bool) -> npt.NDArray[np.int64]:
    """Classifier targets: background is class num_classes, or -1 (skipped) with an objectness head."""
    if use_objectness:
        return ds.labels.copy()
    return np.where(ds.labels == BACKGROUND_LABEL, ds.num_classes, ds.labels)


def _num_outputs(ds: Dataset, use_objectness: bool) -> int:
    return ds.num_classes + (1 if ds.has_background and not use_objectness else 0)


def _build_loss(
    name: LossName,
    seesaw: SeesawConfig,
    num_outputs: int,
    train_labels: npt.NDArray[np.int64],
    recorded_counts: Optional[ClassCounts],
) -> ClassificationLoss:
    if name == "ce":
        return CrossEntropyLoss()
    if seesaw.count_source == "online":
        return SeesawLoss(seesaw, num_outputs)
    if seesaw.count_source == "from_dataset":
        counts = counts_from_dataset(train_labels[train_labels >= 0], num_outputs, seesaw.init_value)
        return SeesawLoss(seesaw, num_outputs, counts)
    if recorded_counts is None:
        if seesaw.counts_file is None:
            raise ConfigurationError("count_source=pre_recorded requires counts_file or recorded counts")
        recorded_counts = ClassCounts.load(seesaw.counts_file, seesaw.init_value)
    return SeesawLoss(seesaw, num_outputs, recorded_counts)


def _check_divergence(loss: float, cfg: TrainConfig, epoch: int, batch: int) -> None:
    if not math.isfinite(loss) or loss > cfg.divergence_threshold:
        logger.error(f"Loss {loss} at epoch {epoch}, batch {batch} exceeds divergence threshold")
        raise DivergenceError(epoch, batch, loss)


def _run_phase(
    ds: Dataset,
    cfg: TrainConfig,
    head: LinearHead,
    loss: ClassificationLoss,
    sampler: SamplerKind,
    epochs: int,
    epoch_offset: int,
    telemetry: TelemetryLog,
    objectness: Optional[ObjectnessHead],
) -> List[float]:
    """Train head in place for a number of epochs; returns the per-epoch mean loss."""
    targets = _classifier_labels(ds, objectness is not None)
    is_background = ds.labels == BACKGROUND_LABEL
    opt = SGD(cfg.lr, cfg.momentum, cfg.weight_decay)
    curve: List[float] = []

    for epoch in range(epoch_offset, epoch_offset + epochs):
        decays = sum(1 for e in cfg.lr_decay_epochs if e <= epoch)
        opt.lr = cfg.lr * cfg.lr_decay ** decays
        order = epoch_indices(ds, sampler, cfg.seed, epoch)
        batch_losses: List[float] = []

        for batch, start in enumerate(range(0, order.shape[0], cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            X = ds.features[idx]
            y = targets[idx]

            if objectness is not None:
                obj_y = np.where(is_background[idx], BACKGROUND, FOREGROUND)
                obj_result = ce_loss_batch(objectness.forward_batch(X), obj_y)
                _check_divergence(obj_result.mean_loss, cfg, epoch, batch)
                g = objectness.linear.backward_batch(X, obj_result.mean_grad)
                objectness.linear.W = opt.step("obj_W", objectness.linear.W, g.grad_W)
                objectness.linear.b = opt.step("obj_b", objectness.linear.b, g.grad_b)
                keep = y >= 0
                X, y = X[keep], y[keep]
                if y.size == 0:
                    continue

            result = loss(head.forward_batch(X), y)
            _check_divergence(result.mean_loss, cfg, epoch, batch)
            telemetry.record(y, result.grad_logits)
            g = head.backward_batch(X, result.mean_grad)
            head.W = opt.step("W", head.W, g.grad_W)
            head.b = opt.step("b", head.b, g.grad_b)
            # Counts advance only after this batch's gradients were taken.
            loss.observe(y)
            batch_losses.append(result.mean_loss)

        curve.append(float(np.mean(batch_losses)) if batch_losses else 0.0)
        logger.debug(f"epoch {epoch}: {loss.name} loss {curve[-1]:.6f} (lr {opt.lr:g})")

    return curve


def train(
    ds: Dataset,
    cfg: TrainConfig,
    test_ds: Optional[Dataset] = None,
    recorded_counts: Optional[ClassCounts] = None,
) -> TrainResult:
    """
    Train a classifier head on ds and evaluate it.

    Args:
        ds: Training split
        cfg: Training configuration (seeded, so runs are reproducible)
        test_ds: Evaluation split; defaults to the balanced split of ds.spec, or ds itself
        recorded_counts: Counts for count_source=pre_recorded (otherwise read from counts_file)

    Returns:
        TrainResult with the trained head(s), metrics, telemetry and final counts

    Raises:
        DivergenceError: If a batch loss is non-finite or exceeds the divergence threshold
        ConfigurationError: If pre-recorded counts are requested but unavailable
    """
    if test_ds is None:
        test_ds = generate_balanced(ds.spec) if ds.spec is not None else ds
    if cfg.use_objectness and not ds.has_background:
        logger.warning("Objectness branch enabled but the dataset has no background samples")

    num_outputs = _num_outputs(ds, cfg.use_objectness)
    groups = frequency_groups(ds.class_counts_static, cfg.rare_max, cfg.common_max)
    targets = _classifier_labels(ds, cfg.use_objectness)
    rng = np.random.default_rng(cfg.seed)
    telemetry = TelemetryLog.empty(num_outputs)

    def new_head() -> LinearHead:
        return LinearHead.init(
            num_outputs, ds.feature_dim, rng, tau=cfg.head_tau, normalized=cfg.normalized, std=cfg.head_init_std
        )

    head = new_head()
    objectness = (
        ObjectnessHead.init(ds.feature_dim, rng, tau=cfg.head_tau, std=cfg.objectness_init_std) if cfg.use_objectness else None
    )
    pretrain_head: Optional[LinearHead] = None

    logger.info(
        f"Training {cfg.loss} ({cfg.pipeline}) on {ds.num_samples} samples, "
        f"{num_outputs} outputs, {cfg.epochs} epochs, seed {cfg.seed}"
    )

    if cfg.pipeline == "end_to_end":
        loss = _build_loss(cfg.loss, cfg.seesaw, num_outputs, targets, recorded_counts)
        curve = _run_phase(ds, cfg, head, loss, cfg.sampler, cfg.epochs, 0, telemetry, objectness)
    else:
        pre_loss = _build_loss(cfg.pretrain_loss, cfg.seesaw, num_outputs, targets, recorded_counts)
        curve = _run_phase(ds, cfg, head, pre_loss, cfg.sampler, cfg.epochs, 0, telemetry, objectness)
        pretrain_head = head.copy()
        # Features are the fixed inputs, so finetuning retrains a fresh classifier
        # with the objectness branch frozen.
        head = new_head()
        loss = _build_loss(cfg.loss, cfg.seesaw, num_outputs, targets, recorded_counts)
        finetune_epochs = cfg.resolved_finetune_epochs
        logger.info(f"Finetuning classifier for {finetune_epochs} epochs with {cfg.finetune_sampler.kind} sampler")
        curve += _run_phase_frozen_objectness(
            ds, cfg, head, loss, cfg.finetune_sampler, finetune_epochs, cfg.epochs, telemetry, objectness
        )

    metrics = evaluate(head, test_ds, groups=groups, objectness=objectness)
    metrics.loss_curve = curve
    counts = loss.counts if isinstance(loss, SeesawLoss) else None
    logger.info(
        f"Finished {cfg.loss}: overall {metrics.overall_acc:.4f}, "
        + ", ".join(f"{name} {metrics.group(name):.4f}" for name in GROUP_NAMES)
    )
    return TrainResult(head, metrics, telemetry, counts, objectness, pretrain_head)


def _run_phase_frozen_objectness(
    ds: Dataset,
    cfg: TrainConfig,
    head: LinearHead,
    loss: ClassificationLoss,
    sampler: SamplerKind,
    epochs: int,
    epoch_offset: int,
    telemetry: TelemetryLog,
    objectness: Optional[ObjectnessHead],
) -> List[float]:
    """Classifier-only phase: background samples are skipped when an objectness head exists."""
    if objectness is None:
        return _run_phase(ds, cfg, head, loss, sampler, epochs, epoch_offset, telemetry, None)
    foreground = ds.subset(np.flatnonzero(ds.foreground_mask))
    return _run_phase(foreground, cfg, head, loss, sampler, epochs, epoch_offset, telemetry, None)


def predict(head: LinearHead, X: npt.ArrayLike, num_classes: int, objectness: Optional[ObjectnessHead] = None) -> npt.NDArray[np.int64]:
    """
    Predicted labels, -1 for background.

    With an objectness head, detection scores sigma_class * sigma_fg compete
    with the background probability 1 - sigma_fg.
    """
    X = np.asarray(X, dtype=np.float64)
    if objectness is not None:
        fg = objectness.foreground_probability(X)
        det = detection_score_batch(softmax_rows(head.forward_batch(X)), fg)
        scores = np.hstack([det, (1.0 - fg)[:, None]])
    else:
        scores = head.forward_batch(X)
    pred = np.argmax(scores, axis=1).astype(np.int64)
    return np.where(pred == num_classes, BACKGROUND_LABEL, pred)


def evaluate(
    head: LinearHead,
    ds: Dataset,
    groups: Optional[Mapping[str, npt.NDArray[np.int64]]] = None,
    objectness: Optional[ObjectnessHead] = None,
) -> Metrics:
    """
    Argmax accuracy of head on ds, per class and per frequency group.

    Args:
        head: Trained classifier (num_classes outputs, or num_classes + 1 with a background class)
        ds: Evaluation split, normally class-balanced
        groups: Frequency groups of the training split (default: tertiles of ds's counts)
        objectness: Objectness head used to score background

    Raises:
        DimensionMismatchError: If the head doesn't fit the dataset
    """
    if head.feature_dim != ds.feature_dim:
        raise DimensionMismatchError("evaluate features", (head.feature_dim,), (ds.feature_dim,))
    expected = (ds.num_classes,) if objectness is not None else (ds.num_classes, ds.num_classes + 1)
    if head.num_classes not in expected:
        raise DimensionMismatchError("evaluate outputs", expected, (head.num_classes,))
    if groups is None:
        groups = frequency_groups(ds.class_counts_static)

    pred = predict(head, ds.features, ds.num_classes, objectness)
    correct = pred == ds.labels

    per_class: List[float] = []
    for c in range(ds.num_classes):
        mask = ds.labels == c
        if not mask.any():
            logger.warning(f"Class {c} has no evaluation samples; reporting accuracy 0")
            per_class.append(0.0)
        else:
            per_class.append(float(correct[mask].mean()))

    fg = ds.foreground_mask
    overall = float(correct[fg].mean()) if fg.any() else 0.0
    group_acc: Dict[str, Optional[float]] = {
        name: (float(np.mean([per_class[int(c)] for c in members])) if len(members) else None)
        for name, members in groups.items()
    }
    background_acc = float(correct[~fg].mean()) if (~fg).any() else None
    return Metrics(overall, per_class, group_acc, [], background_acc)


def _with_param(base: TrainConfig, param: str, value: float) -> TrainConfig:
    if param not in SWEEPABLE_PARAMS:
        raise ValueError(f"Cannot sweep '{param}'; choose one of {', '.join(SWEEPABLE_PARAMS)}")
    if param == "tau" and not base.normalized:
        raise ConfigurationError("Sweeping tau needs the normalized classifier (normalized = true); plain heads ignore it")
    seesaw = SeesawConfig(**{**base.seesaw.model_dump(), param: value})
    return base.model_copy(update={"seesaw": seesaw})


def sweep(
    ds: Dataset,
    base: TrainConfig,
    param: str,
    values: Sequence[float],
    seeds: Optional[Sequence[int]] = None,
    workers: int = 1,
    test_ds: Optional[Dataset] = None,
) -> List[SweepRow]:
    """
    One training run per (value, seed) with param of the Seesaw config set to value.

    Runs are independent and may execute in a thread pool; rows come back in
    (value, seed) order regardless.

    Raises:
        ValueError: If param is not sweepable or values is empty
        ConfigurationError: If tau is swept on a plain (unnormalized) head
    """
    if not values:
        raise ValueError("sweep needs at least one value")
    seeds = [base.seed] if seeds is None else list(seeds)
    jobs = [(float(v), s, _with_param(base, param, v).model_copy(update={"seed": s})) for v in values for s in seeds]
    logger.info(f"Sweeping {param} over {list(values)} with seeds {seeds} ({len(jobs)} runs)")

    def run(job: tuple) -> SweepRow:
        value, seed, cfg = job
        return SweepRow(param, value, seed, train(ds, cfg, test_ds=test_ds).metrics)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def summarize_sweep(rows: Sequence[SweepRow]) -> List[SweepSummary]:
    """Average sweep rows over seeds, one summary per value in first-seen order."""
    by_value: Dict[float, List[SweepRow]] = {}
    for row in rows:
        by_value.setdefault(row.value, []).append(row)

    def mean(values: List[float]) -> float:
        finite = [v for v in values if not math.isnan(v)]
        return float(np.mean(finite)) if finite else math.nan

    summaries = []
    for value, group in by_value.items():
        summaries.append(SweepSummary(
            param=group[0].param,
            value=value,
            runs=len(group),
            overall_acc=mean([r.metrics.overall_acc for r in group]),
            rare_acc=mean([r.metrics.group("rare") for r in group]),
            common_acc=mean([r.metrics.group("common") for r in group]),
            frequent_acc=mean([r.metrics.group("frequent") for r in group]),
        ))
    return summaries


def _scores(metrics: Metrics) -> Dict[str, float]:
    return {"overall": metrics.overall_acc, **{name: metrics.group(name) for name in GROUP_NAMES}}


def compare(
    ds: Dataset,
    base: TrainConfig,
    seeds: Sequence[int],
    test_ds: Optional[Dataset] = None,
) -> List[CompareRow]:
    """
    Paired CE and Seesaw runs sharing every other setting, one pair per seed.

    Returns:
        One row per seed followed by the mean row (seed -1)
    """
    rows = []
    for seed in seeds:
        cfg = base.model_copy(update={"seed": seed})
        ce = train(ds, cfg.with_loss("ce"), test_ds=test_ds)
        seesaw = train(ds, cfg.with_loss("seesaw"), test_ds=test_ds)
        rows.append(CompareRow(seed, _scores(ce.metrics), _scores(seesaw.metrics)))

    if rows:
        rows.append(mean_compare_row(rows))
    return rows


def mean_compare_row(rows: Sequence[CompareRow]) -> CompareRow:
    """Seed-averaged row (seed -1); empty groups stay NaN."""
    keys = list(rows[0].ce)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return CompareRow(
            -1,
            {k: float(np.nanmean([r.ce[k] for r in rows])) for k in keys},
            {k: float(np.nanmean([r.seesaw[k] for r in rows])) for k in keys},
        )


def classifier_class_counts(ds: Dataset, use_objectness: bool = False) -> npt.NDArray[np.int64]:
    """Per-output sample totals of the classifier (background last when it is a class)."""
    targets = _classifier_labels(ds, use_objectness)
    return np.bincount(targets[targets >= 0], minlength=_num_outputs(ds, use_objectness))
