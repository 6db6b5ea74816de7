"""Shared numeric primitives: batches, probability-table algebra, point weights.

Conventions used across the package:

* a *posterior table* is an ``(N, C)`` float64 array; each row is a class
  distribution over ``C`` classes for one of ``N`` points (rows sum to 1,
  entries clamped to a small floor ``eps`` so logarithms stay finite),
* a *drift table* is an ``(N, C)`` float64 array of signed per-point,
  per-class divergence contributions (never clamped),
* a *weight vector* is a length-``N`` nonnegative float64 array summing to 1,
* all logarithms are natural logs (the exponential posterior update only
  inverts the drift definition when the bases match).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Default clamp floor for posterior entries. Keeps |log p| <= ~27.6.
EPS = 1e-12


class ShapeMismatch(ValueError):
    """Operands do not share the shape the operation requires."""


class RowDegenerate(ValueError):
    """A probability-table row has zero mass even after clamping."""


class AllZeroDensity(ValueError):
    """Every point density is zero; the batch lies outside the model support."""


@dataclass(frozen=True)
class Batch:
    """An unlabeled set of feature vectors, stored as an (N, d) float array.

    The unit of arrival at each time step: all points share dimension ``d``
    and every entry must be finite.
    """

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 2:
            raise ShapeMismatch(f"batch must be 2-d (N, d), got shape {x.shape}")
        if x.shape[0] == 0 or x.shape[1] == 0:
            raise ValueError("batch must contain at least one point and one feature")
        if not np.all(np.isfinite(x)):
            raise ValueError("batch features must be finite")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class LabeledBatch:
    """A batch paired with dense 0-based integer class labels."""

    batch: Batch
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] != self.batch.n:
            raise ShapeMismatch(
                f"labels must be 1-d of length {self.batch.n}, got shape {labels.shape}"
            )
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be nonnegative class indices")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.batch.n

    @property
    def dim(self) -> int:
        return self.batch.dim


def logsumexp(a: np.ndarray, axis=None, keepdims: bool = False) -> np.ndarray:
    """log(sum(exp(a))) evaluated without overflow by factoring out the max."""
    a = np.asarray(a, dtype=np.float64)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)  # all -inf rows reduce to log(0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if keepdims:
        return out
    return np.squeeze(out, axis=axis) if axis is not None else out.item()


def normalize_rows(table: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Restore the probability-simplex invariant of a nonnegative matrix.

    Entries (including infinities produced by saturated exponential updates)
    are clamped to ``[eps, 1]`` and every row is divided by its sum. With
    ``eps > 0`` an all-zero row therefore normalizes to the uniform row;
    ``RowDegenerate`` can only occur when ``eps = 0`` leaves a row without
    mass, which signals a numerically destroyed posterior.
    """
    t = np.asarray(table, dtype=np.float64)
    if t.ndim != 2:
        raise ShapeMismatch(f"expected 2-d table, got shape {t.shape}")
    if np.any(np.isnan(t)) or np.any(t < 0):
        raise ValueError("table entries must be nonnegative and not NaN")
    clamped = np.clip(t, eps, 1.0)
    sums = clamped.sum(axis=1, keepdims=True)
    if np.any(sums <= 0.0):
        bad = int(np.argmax(sums.ravel() <= 0.0))
        raise RowDegenerate(f"row {bad} has zero mass after clamping to eps={eps}")
    out = clamped / sums
    # renormalizing can push an eps-floored entry a hair below the floor
    return np.clip(out, eps, 1.0) if eps > 0.0 else out


def argmax_row(table: np.ndarray, i: int) -> int:
    """MAP class of point ``i``: smallest class index attaining the row max."""
    return int(np.argmax(table[i]))


def map_labels(table: np.ndarray) -> np.ndarray:
    """Row-wise MAP classes, ties broken to the lowest index."""
    return np.argmax(table, axis=1)


def point_weights(densities: np.ndarray) -> np.ndarray:
    """Normalize per-point densities into a weight vector summing to 1.

    The weights play the role of a discrete feature distribution over the
    batch: ``w[i] = f(x_i) / sum_j f(x_j)``.
    """
    d = np.asarray(densities, dtype=np.float64)
    if d.ndim != 1:
        raise ShapeMismatch(f"densities must be 1-d, got shape {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValueError("densities must be finite and nonnegative")
    total = d.sum()
    if total <= 0.0:
        raise AllZeroDensity("every density is zero")
    return d / total


def uniform_weights(n: int) -> np.ndarray:
    """Weight vector giving every point equal mass 1/n."""
    if n < 1:
        raise ValueError("need at least one point")
    return np.full(n, 1.0 / n)


def validate_posterior_table(table: np.ndarray, eps: float = EPS, tol: float = 1e-9) -> None:
    """Assert the posterior-table invariants (row sums, clamp floor)."""
    t = np.asarray(table)
    if t.ndim != 2:
        raise ShapeMismatch(f"expected 2-d table, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError("posterior entries must be finite")
    # allow the O(C*eps) slack that clamp-then-normalize introduces
    if np.any(t < eps * 0.5):
        raise ValueError("posterior entries fell below the clamp floor")
    if np.any(np.abs(t.sum(axis=1) - 1.0) > tol):
        raise ValueError("posterior rows must sum to 1")


def validate_weights(w: np.ndarray, tol: float = 1e-9) -> None:
    """Assert the weight-vector invariants (nonnegative, sums to 1)."""
    w = np.asarray(w)
    if w.ndim != 1:
        raise ShapeMismatch(f"expected 1-d weights, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    if abs(float(w.sum()) - 1.0) > tol:
        raise ValueError("weights must sum to 1")
