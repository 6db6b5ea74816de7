"""Iterative unsupervised adaptation of a classifier to one drifted batch.

Each iteration plays two posterior estimates against each other: the
*drift-based* table, obtained by exponentially updating the previous time
step's posterior with the accumulated drift estimates, and the *label-based*
table, the posterior of a model refit on the batch with the current
pseudo-labels. A gradient step on the drift entries descends the weighted
KL divergence between the two until it falls below tolerance or the
iteration budget runs out. The step at iteration k scales as c/sqrt(k+1).

The gradient of the KL cost with respect to one drift entry, holding the
label-based table and the point weights fixed within the iteration, is

    dKL/d_delta[i][y] = w[i] * (-p_hat[i][y] / p_t[i][y])
                             * (1 + ln(p_hat[i][y] / p_bar[i][y])),

obtained by differentiating the weighted KL through the exponential
posterior update. It is defined pre-normalization; the loop re-normalizes
rows after every update and keeps the raw accumulated drifts alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import classifier
from .core import (
    EPS,
    Batch,
    LabeledBatch,
    ShapeMismatch,
    map_labels,
    normalize_rows,
    point_weights,
    uniform_weights,
)
from .divergence import apply_drift, conditional_kl


class DimensionMismatch(ValueError):
    """Batch feature dimension does not match the model."""


class BatchTooSmall(ValueError):
    """Batch has fewer points than a pseudo-label refit could ever use."""


class AdaptationStepError(RuntimeError):
    """An error occurred while adapting one step of a batch sequence."""

    def __init__(self, step: int, cause: Exception):
        self.step = step
        super().__init__(f"adaptation failed at step {step}: {cause}")


@dataclass(frozen=True)
class AdaptationConfig:
    """Tuning constants for the adaptation loop.

    Defaults follow the empirically chosen operating point: step constant
    50, convergence threshold 1e-10, 10 iterations. ``weight_mode`` selects
    how batch points are weighted inside the KL cost: ``density`` uses the
    previous model's feature density over the batch (sample importance),
    ``uniform`` weighs every point equally (ablation).
    """

    step_constant: float = 50.0
    max_iterations: int = 10
    tolerance: float = 1e-10
    eps: float = EPS
    weight_mode: str = "density"
    variance_floor: float = classifier.DEFAULT_VARIANCE_FLOOR

    def __post_init__(self):
        if self.step_constant <= 0.0:
            raise ValueError("step_constant must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.weight_mode not in ("density", "uniform"):
            raise ValueError(f"unknown weight_mode: {self.weight_mode!r}")
        if self.variance_floor <= 0.0:
            raise ValueError("variance_floor must be positive")


@dataclass(frozen=True)
class IterationRecord:
    """One adaptation iteration: its KL value, step size, and label churn."""

    k: int
    kl: float
    step_size: float
    label_changes: int
    refit_fallback: bool = False


@dataclass(frozen=True)
class AdaptationTrace:
    """Observable convergence history of one adapt_batch call."""

    records: tuple[IterationRecord, ...]
    termination: str  # "converged" | "max_iterations"
    final_refit_fallback: bool = False

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_kl(self) -> float:
        return self.records[-1].kl


@dataclass(frozen=True)
class AdaptationResult:
    """Adapted posteriors and everything needed for the next time step."""

    posteriors: np.ndarray
    drifts: np.ndarray
    labels: np.ndarray
    trace: AdaptationTrace
    updated_model: classifier.GnbModel


def step_size(k: int, c: float) -> float:
    """Monotonically decreasing step size c / sqrt(k+1) for iteration k."""
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    return c / math.sqrt(k + 1)


def kl_gradient(
    p_hat: np.ndarray, p_bar: np.ndarray, p_t: np.ndarray, w: np.ndarray
) -> np.ndarray:
    """Gradient of the weighted KL cost with respect to the drift entries.

    ``p_hat`` is the current drift-based table, ``p_bar`` the label-based
    table (held fixed), ``p_t`` the time-t posterior the exponential update
    starts from. The descent direction is the negative of the returned
    matrix.
    """
    p_hat = np.asarray(p_hat, dtype=np.float64)
    p_bar = np.asarray(p_bar, dtype=np.float64)
    p_t = np.asarray(p_t, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if p_hat.ndim != 2 or p_hat.shape != p_bar.shape or p_hat.shape != p_t.shape:
        raise ShapeMismatch(
            f"posterior tables must share an (N, C) shape, got "
            f"{p_hat.shape}, {p_bar.shape}, {p_t.shape}"
        )
    if w.shape != (p_hat.shape[0],):
        raise ShapeMismatch(f"weights must have shape ({p_hat.shape[0]},), got {w.shape}")
    if np.any(p_hat <= 0.0) or np.any(p_bar <= 0.0) or np.any(p_t <= 0.0):
        raise ValueError("posterior entries must be positive")
    return w[:, None] * (-(p_hat / p_t)) * (1.0 + np.log(p_hat / p_bar))


def refit_label_based(
    batch: Batch,
    labels: np.ndarray,
    variance_floor: float = classifier.DEFAULT_VARIANCE_FLOOR,
    n_classes: int | None = None,
    eps: float = EPS,
):
    """Fit a model on the pseudo-labeled batch and evaluate its posterior.

    Returns ``(posterior_table, model)``, or ``(None, None)`` when some class
    has fewer than 2 pseudo-labeled points, which makes the refit infeasible;
    the adaptation loop then substitutes its current drift-based table (a
    no-op iteration) and flags the event in the trace.
    """
    try:
        model = classifier.fit(
            LabeledBatch(batch, labels), variance_floor, n_classes=n_classes
        )
    except classifier.ClassUnderpopulated:
        return None, None
    return classifier.posterior(model, batch, eps), model


def _batch_weights(model: classifier.GnbModel, batch: Batch, config: AdaptationConfig) -> np.ndarray:
    if config.weight_mode == "uniform":
        return uniform_weights(batch.n)
    log_f = classifier.log_feature_density(model, batch.x)
    # shifting by the max leaves the normalized weights unchanged and
    # guarantees at least one density of exactly 1 before normalization
    return point_weights(np.exp(log_f - log_f.max()))


def adapt_batch(model: classifier.GnbModel, batch: Batch, config: AdaptationConfig | None = None) -> AdaptationResult:
    """Adapt ``model`` to one unlabeled batch; the model itself is not mutated.

    The loop is deterministic: identical model, batch, and config produce an
    identical result. The returned ``updated_model`` is a fresh fit on the
    final pseudo-labels (falling back to the input model when those labels
    underpopulate a class), so subsequent steps can discard the batch.
    """
    config = config or AdaptationConfig()
    if not isinstance(batch, Batch):
        # labeled data must not reach adaptation; callers strip labels first
        raise TypeError(f"adapt_batch takes a Batch, got {type(batch).__name__}")
    if batch.dim != model.dim:
        raise DimensionMismatch(
            f"batch dimension {batch.dim} != model dimension {model.dim}"
        )
    if batch.n < 2 * model.n_classes:
        raise BatchTooSmall(
            f"need at least {2 * model.n_classes} points to refit {model.n_classes} "
            f"classes, got {batch.n}"
        )

    p0 = classifier.posterior(model, batch, config.eps)
    w = _batch_weights(model, batch, config)
    delta = np.zeros_like(p0)
    p_hat = p0
    records: list[IterationRecord] = []
    prev_labels: np.ndarray | None = None
    termination = "max_iterations"

    for k in range(config.max_iterations):
        labels_k = map_labels(p_hat)
        changes = 0 if prev_labels is None else int(np.count_nonzero(labels_k != prev_labels))
        prev_labels = labels_k
        p_bar, _ = refit_label_based(
            batch, labels_k, config.variance_floor, model.n_classes, config.eps
        )
        fallback = p_bar is None
        if fallback:
            p_bar = p_hat
        kl_k = conditional_kl(p_hat, p_bar, w)
        gamma_k = step_size(k, config.step_constant)
        records.append(IterationRecord(k, kl_k, gamma_k, changes, fallback))
        if kl_k <= config.tolerance:
            termination = "converged"
            break
        gradient = kl_gradient(p_hat, p_bar, p0, w)
        delta = delta - gamma_k * gradient
        p_hat = normalize_rows(apply_drift(p0, delta), config.eps)

    final_labels = map_labels(p_hat)
    try:
        updated = classifier.fit(
            LabeledBatch(batch, final_labels), config.variance_floor,
            n_classes=model.n_classes, class_names=model.class_names,
        )
        final_fallback = False
    except classifier.ClassUnderpopulated:
        updated = model  # carry the old model forward rather than crash
        final_fallback = True

    return AdaptationResult(
        posteriors=p_hat,
        drifts=delta,
        labels=final_labels,
        trace=AdaptationTrace(tuple(records), termination, final_fallback),
        updated_model=updated,
    )


def sequential_adapt(
    model0: classifier.GnbModel,
    batches,
    config: AdaptationConfig | None = None,
) -> list[AdaptationResult]:
    """Fold adapt_batch over a batch sequence, carrying the model forward.

    Only the refit model survives between steps; no batch data is retained.
    Errors propagate wrapped in ``AdaptationStepError`` carrying the index of
    the failing step.
    """
    config = config or AdaptationConfig()
    results: list[AdaptationResult] = []
    model = model0
    for step, batch in enumerate(batches):
        try:
            result = adapt_batch(model, batch, config)
        except Exception as e:
            raise AdaptationStepError(step, e) from e
        results.append(result)
        model = result.updated_model
    return results
