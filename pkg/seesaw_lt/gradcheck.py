"""
Finite-difference gradient checks.

Each suite draws random inputs, reduces the operation to a scalar with a
random upstream gradient and compares the analytic gradient against central
differences. Seesaw is checked with its factor row frozen at the evaluation
point, since the factors are constants during differentiation.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Final, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from .config import SeesawConfig
from .counts import ClassCounts
from .heads import LinearHead, SpatialMap, spatial_normalized_backward, spatial_normalized_forward
from .losses import ce_loss, seesaw_factors, seesaw_loss, weighted_softmax_loss
from .numerics import l2_normalize, l2_normalize_backward

logger = logging.getLogger(__name__)

STEP: Final[float] = 1e-5
DEFAULT_TOLERANCE: Final[float] = 1e-6

Array = npt.NDArray[np.float64]
# A trial returns (analytic, numeric) gradients, flattened.
Trial = Callable[[np.random.Generator], Tuple[Array, Array]]


@dataclass(frozen=True)
class SuiteResult:
    """Outcome of one gradient-check suite."""
    name: str
    trials: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_error(analytic: npt.ArrayLike, numeric: npt.ArrayLike) -> float:
    """|a - n| / max(|a|, |n|, 1e-8) over the flattened gradients."""
    a = np.ravel(analytic)
    n = np.ravel(numeric)
    scale = max(float(np.linalg.norm(a)), float(np.linalg.norm(n)), 1e-8)
    return float(np.linalg.norm(a - n)) / scale


def numeric_gradient(f: Callable[[Array], float], x: npt.ArrayLike, h: float = STEP) -> Array:
    """Central differences of a scalar function at x (any shape)."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for k in range(flat.shape[0]):
        saved = flat[k]
        flat[k] = saved + h
        plus = f(x)
        flat[k] = saved - h
        minus = f(x)
        flat[k] = saved
        out[k] = (plus - minus) / (2.0 * h)
    return grad


def _dims(rng: np.random.Generator) -> Tuple[int, int]:
    return int(rng.integers(2, 8)), int(rng.integers(2, 8))


def _l2_normalize_trial(rng: np.random.Generator) -> Tuple[Array, Array]:
    v = rng.normal(size=int(rng.integers(2, 10)))
    g = rng.normal(size=v.shape)
    analytic = l2_normalize_backward(v, g)
    numeric = numeric_gradient(lambda u: float(g @ l2_normalize(u)[0]), v)
    return analytic, numeric


def _ce_trial(rng: np.random.Generator) -> Tuple[Array, Array]:
    num_classes = int(rng.integers(2, 12))
    z = rng.normal(scale=2.0, size=num_classes)
    label = int(rng.integers(num_classes))
    analytic = ce_loss(z, label).grad_logits
    numeric = numeric_gradient(lambda u: ce_loss(u, label).loss, z)
    return analytic, numeric


def _seesaw_trial(rng: np.random.Generator) -> Tuple[Array, Array]:
    num_classes = int(rng.integers(2, 12))
    z = rng.normal(scale=2.0, size=num_classes)
    label = int(rng.integers(num_classes))
    counts = ClassCounts(rng.integers(1, 500, size=num_classes).astype(np.float64))
    cfg = SeesawConfig(p=float(rng.uniform(0.0, 1.5)), q=float(rng.uniform(0.0, 3.0)))
    S = seesaw_factors(z, label, counts, cfg).S
    analytic = seesaw_loss(z, label, counts, cfg).grad_logits
    numeric = numeric_gradient(lambda u: weighted_softmax_loss(u, label, S).loss, z)
    return analytic, numeric


def _linear_trial(normalized: bool) -> Trial:
    def trial(rng: np.random.Generator) -> Tuple[Array, Array]:
        num_classes, dim = _dims(rng)
        tau = float(rng.uniform(1.0, 20.0)) if normalized else 1.0
        head = LinearHead(rng.normal(size=(num_classes, dim)), rng.normal(size=num_classes), tau=tau, normalized=normalized)
        X = rng.normal(size=(int(rng.integers(1, 4)), dim))
        G = rng.normal(size=(X.shape[0], num_classes))
        grads = head.backward_batch(X, G)

        def with_W(W: Array) -> float:
            return float(np.sum(G * LinearHead(W, head.b, tau, normalized).forward_batch(X)))

        def with_b(b: Array) -> float:
            return float(np.sum(G * LinearHead(head.W, b, tau, normalized).forward_batch(X)))

        def with_X(Xp: Array) -> float:
            return float(np.sum(G * head.forward_batch(Xp)))

        analytic = np.concatenate([grads.grad_W.ravel(), grads.grad_b, grads.grad_x.ravel()])
        numeric = np.concatenate([
            numeric_gradient(with_W, head.W).ravel(),
            numeric_gradient(with_b, head.b),
            numeric_gradient(with_X, X).ravel(),
        ])
        return analytic, numeric
    return trial


def _spatial_trial(rng: np.random.Generator) -> Tuple[Array, Array]:
    num_classes, channels = _dims(rng)
    height, width = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    tau = float(rng.uniform(1.0, 20.0))
    W = rng.normal(size=(num_classes, channels))
    b = rng.normal(size=num_classes)
    data = rng.normal(size=(height, width, channels))
    G = rng.normal(size=(height, width, num_classes))
    grads = spatial_normalized_backward(W, b, tau, SpatialMap(data), G)

    analytic = np.concatenate([grads.grad_W.ravel(), grads.grad_x.ravel()])
    numeric = np.concatenate([
        numeric_gradient(lambda Wp: float(np.sum(G * spatial_normalized_forward(Wp, b, tau, SpatialMap(data)))), W).ravel(),
        numeric_gradient(lambda Xp: float(np.sum(G * spatial_normalized_forward(W, b, tau, SpatialMap(Xp)))), data).ravel(),
    ])
    return analytic, numeric


SUITES: Final[Dict[str, Trial]] = {
    "l2_normalize_backward": _l2_normalize_trial,
    "ce_loss": _ce_trial,
    "seesaw_loss": _seesaw_trial,
    "linear_backward[normalized]": _linear_trial(True),
    "linear_backward[plain]": _linear_trial(False),
    "spatial_backward": _spatial_trial,
}


def run_suite(name: str, trials: int, tol: float = DEFAULT_TOLERANCE, seed: int = 0) -> SuiteResult:
    """Run one named suite; each trial gets its own generator keyed by (seed, trial)."""
    if name not in SUITES:
        raise ValueError(f"Unknown gradcheck suite '{name}'")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    trial = SUITES[name]
    worst = 0.0
    for k in range(trials):
        analytic, numeric = trial(np.random.default_rng([seed, k]))
        worst = max(worst, relative_error(analytic, numeric))
    logger.debug(f"gradcheck {name}: {trials} trials, max relative error {worst:.3e}")
    return SuiteResult(name, trials, worst, tol)


def run_gradcheck(
    trials: int = 200,
    tol: float = DEFAULT_TOLERANCE,
    seed: int = 0,
    suites: Optional[List[str]] = None,
) -> List[SuiteResult]:
    """Run the named suites (all by default) in a fixed order."""
    names = list(SUITES) if suites is None else suites
    return [run_suite(name, trials, tol, seed) for name in names]
