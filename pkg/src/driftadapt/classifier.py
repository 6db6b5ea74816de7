"""Gaussian Naive Bayes: the adapted model family.

The adaptation loop touches the model only through three things — ``fit``,
the class posterior, and the marginal feature density — so this module is
the single place that knows the model is a diagonal-covariance Gaussian
mixture. Densities and posteriors are evaluated in log space throughout:
at a few dozen features, products of univariate normal densities underflow
in linear space long before the posterior itself degenerates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import EPS, Batch, LabeledBatch, ShapeMismatch, logsumexp, map_labels, normalize_rows

#: Default lower bound for fitted variances; degenerate single-valued
#: features would otherwise yield infinite densities.
DEFAULT_VARIANCE_FLOOR = 1e-6

_LOG_2PI = float(np.log(2.0 * np.pi))


class ClassUnderpopulated(ValueError):
    """A class has too few points for its variance to be estimable."""

    def __init__(self, label: int, count: int):
        self.label = int(label)
        self.count = int(count)
        super().__init__(f"class {label} has {count} point(s); need at least 2")


class ModelFormatError(ValueError):
    """A persisted model document is malformed or has an unsupported version."""


@dataclass(frozen=True)
class GnbModel:
    """Fitted Gaussian Naive Bayes parameters; immutable after fit.

    Stands in for both the class posterior P(y|x) (via Bayes' rule) and the
    feature density f(x) (via the prior-weighted mixture) between time steps,
    after the data itself has been discarded.
    """

    n_classes: int
    dim: int
    priors: np.ndarray      # (C,), each > 0, sums to 1
    means: np.ndarray       # (C, d)
    variances: np.ndarray   # (C, d), each > 0
    class_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=np.float64)
        means = np.asarray(self.means, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        c, d = self.n_classes, self.dim
        if c < 1 or d < 1:
            raise ValueError("model needs at least one class and one feature")
        if priors.shape != (c,) or means.shape != (c, d) or variances.shape != (c, d):
            raise ShapeMismatch("priors/means/variances shapes inconsistent with n_classes, dim")
        if not (np.all(np.isfinite(priors)) and np.all(np.isfinite(means)) and np.all(np.isfinite(variances))):
            raise ValueError("model parameters must be finite")
        if np.any(priors <= 0.0) or abs(float(priors.sum()) - 1.0) > 1e-9:
            raise ValueError("priors must be positive and sum to 1")
        if np.any(variances <= 0.0):
            raise ValueError("variances must be positive")
        names = tuple(str(s) for s in self.class_names) or tuple(str(i) for i in range(c))
        if len(names) != c:
            raise ValueError("class_names length must equal n_classes")
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "class_names", names)


def fit(
    data: LabeledBatch,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
    n_classes: int | None = None,
    class_names: tuple[str, ...] | None = None,
) -> GnbModel:
    """Fit priors, per-class feature means and (1/n) variances.

    Every class ``0..C-1`` must be present with at least 2 points, or
    ``ClassUnderpopulated`` is raised. Variances are clamped up to
    ``variance_floor``. ``n_classes`` can declare more classes than the
    labels cover (which then fails the population check) — the pseudo-label
    refit inside adaptation relies on that to detect vanished classes.
    """
    if variance_floor <= 0.0:
        raise ValueError("variance_floor must be positive")
    x, labels = data.batch.x, data.labels
    c = int(n_classes) if n_classes is not None else int(labels.max()) + 1
    if labels.max() >= c:
        raise ValueError(f"label {int(labels.max())} out of range for {c} classes")
    counts = np.bincount(labels, minlength=c)
    for cls in range(c):
        if counts[cls] < 2:
            raise ClassUnderpopulated(cls, int(counts[cls]))
    d = data.dim
    means = np.empty((c, d))
    variances = np.empty((c, d))
    for cls in range(c):
        xc = x[labels == cls]
        means[cls] = xc.mean(axis=0)
        variances[cls] = xc.var(axis=0)  # population (1/n) variance
    return GnbModel(
        n_classes=c,
        dim=d,
        priors=counts / counts.sum(),
        means=means,
        variances=np.maximum(variances, variance_floor),
        class_names=tuple(class_names) if class_names is not None else (),
    )


def _check_dim(model: GnbModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.dim:
        raise ShapeMismatch(f"points have dimension {x.shape[1]}, model expects {model.dim}")
    return x


def log_class_conditional(model: GnbModel, x: np.ndarray) -> np.ndarray:
    """(N, C) matrix of log f(x_i | y), the diagonal-Gaussian log densities."""
    x = _check_dim(model, x)
    # (N, C, d) squared z-scores, summed over features
    z2 = (x[:, None, :] - model.means[None, :, :]) ** 2 / model.variances[None, :, :]
    log_norm = -0.5 * (np.log(model.variances) + _LOG_2PI).sum(axis=1)  # (C,)
    return log_norm[None, :] - 0.5 * z2.sum(axis=2)


def class_conditional_density(model: GnbModel, x: np.ndarray, y: int) -> float:
    """f(x | y): product of univariate normal densities (may underflow to 0)."""
    if not 0 <= y < model.n_classes:
        raise IndexError(f"class {y} out of range")
    return float(np.exp(log_class_conditional(model, x)[0, y]))


def log_feature_density(model: GnbModel, x: np.ndarray) -> np.ndarray:
    """Length-N vector of log f(x_i) = log sum_y P(y) f(x_i | y)."""
    scores = log_class_conditional(model, x) + np.log(model.priors)[None, :]
    return logsumexp(scores, axis=1)


def feature_density(model: GnbModel, x: np.ndarray) -> float:
    """Marginal feature density f(x) of a single point."""
    return float(np.exp(log_feature_density(model, x)[0]))


def posterior_from_log_scores(scores: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Turn (N, C) unnormalized log scores into a clamped posterior table.

    Invariant under adding a per-row constant to the scores (equivalently,
    scaling all class densities of a point by a common positive factor).
    """
    log_post = scores - logsumexp(scores, axis=1, keepdims=True)
    return normalize_rows(np.exp(log_post), eps)


def posterior(model: GnbModel, batch: Batch, eps: float = EPS) -> np.ndarray:
    """(N, C) posterior table P(y | x_i) by Bayes' rule, evaluated stably."""
    if batch.dim != model.dim:
        raise ShapeMismatch(f"batch dimension {batch.dim} != model dimension {model.dim}")
    scores = log_class_conditional(model, batch.x) + np.log(model.priors)[None, :]
    return posterior_from_log_scores(scores, eps)


def predict(model: GnbModel, batch: Batch) -> np.ndarray:
    """MAP class per point; ties break to the lowest class index."""
    return map_labels(posterior(model, batch))


# --- persistence -----------------------------------------------------------

MODEL_FORMAT_VERSION = 1


def save_model(model: GnbModel, path) -> None:
    """Write the model as a JSON document with full round-trip precision."""
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "n_classes": model.n_classes,
        "dim": model.dim,
        "priors": [float(v) for v in model.priors],
        "means": [[float(v) for v in row] for row in model.means],
        "variances": [[float(v) for v in row] for row in model.variances],
        "class_names": list(model.class_names),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path) -> GnbModel:
    """Load a persisted model; rejects unknown format versions."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"not a valid model document: {e}") from e
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a key-value tree")
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version: {version!r}")
    try:
        return GnbModel(
            n_classes=int(doc["n_classes"]),
            dim=int(doc["dim"]),
            priors=np.asarray(doc["priors"], dtype=np.float64),
            means=np.asarray(doc["means"], dtype=np.float64),
            variances=np.asarray(doc["variances"], dtype=np.float64),
            class_names=tuple(doc["class_names"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"malformed model document: {e}") from e
