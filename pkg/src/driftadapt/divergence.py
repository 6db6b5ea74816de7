"""Point-wise drift and the KL divergences it composes into.

The per-point, per-class drift

    delta[i][y] = p_old[i][y] * ln(p_old[i][y] / p_new[i][y])

is the building block: weighting it by a discrete feature distribution over
the batch and summing gives the conditional KL divergence of the new
posterior from the old one, and the definition inverts exactly,

    p_new[i][y] = p_old[i][y] * exp(-delta[i][y] / p_old[i][y]),

which is how estimated drifts are turned back into posteriors. Drift
entries are signed and never clamped; only the weighted totals are
nonnegative.
"""

from __future__ import annotations

import numpy as np

from .core import EPS, ShapeMismatch


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise ShapeMismatch(f"tables must share an (N, C) shape, got {a.shape} and {b.shape}")
    return a, b


def _check_weights(w: np.ndarray, n: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (n,):
        raise ShapeMismatch(f"weights must have shape ({n},), got {w.shape}")
    return w


def pointwise_drift(p_old: np.ndarray, p_new: np.ndarray) -> np.ndarray:
    """Per-entry drift of the new posterior table away from the old one."""
    p_old, p_new = _check_pair(p_old, p_new)
    return p_old * np.log(p_old / p_new)


def apply_drift(p_old: np.ndarray, drift: np.ndarray) -> np.ndarray:
    """Invert accumulated drifts into (pre-normalization) posteriors.

    Output entries can leave [0, 1] — a strongly negative drift entry grows
    its posterior without bound (saturating to inf) — so callers restore the
    simplex invariant with ``normalize_rows`` afterwards.
    """
    p_old, drift = _check_pair(p_old, drift)
    with np.errstate(over="ignore"):
        return p_old * np.exp(-drift / p_old)


def conditional_kl(p_old: np.ndarray, p_new: np.ndarray, w: np.ndarray) -> float:
    """Weighted KL divergence of posterior table ``p_new`` from ``p_old``.

    Rows are combined with the point weights ``w`` (the discrete feature
    distribution over the batch). Negative round-off from eps-clamped logs
    is clamped to 0.
    """
    p_old, p_new = _check_pair(p_old, p_new)
    w = _check_weights(w, p_old.shape[0])
    rows = (p_old * np.log(p_old / p_new)).sum(axis=1)
    return max(0.0, float(np.dot(w, rows)))


def reconstruct_kl(drift: np.ndarray, w: np.ndarray) -> float:
    """Weighted total of a drift table; equals conditional_kl on true drifts."""
    drift = np.asarray(drift, dtype=np.float64)
    if drift.ndim != 2:
        raise ShapeMismatch(f"drift table must be 2-d, got shape {drift.shape}")
    w = _check_weights(w, drift.shape[0])
    return float(np.dot(w, drift.sum(axis=1)))


def marginal_kl(w_old: np.ndarray, w_new: np.ndarray, eps: float = EPS) -> float:
    """KL divergence between two point-weight vectors (feature marginals)."""
    w_old = np.asarray(w_old, dtype=np.float64)
    w_new = np.asarray(w_new, dtype=np.float64)
    if w_old.ndim != 1 or w_old.shape != w_new.shape:
        raise ShapeMismatch(f"weights must share a 1-d shape, got {w_old.shape} and {w_new.shape}")
    terms = w_old * np.log(np.maximum(w_old, eps) / np.maximum(w_new, eps))
    return max(0.0, float(terms.sum()))


def joint_kl(p_old: np.ndarray, p_new: np.ndarray, w_old: np.ndarray, w_new: np.ndarray) -> float:
    """Overall drift: KL of the discretized joint distributions over the batch.

    Decomposes additively into the feature-marginal term plus the conditional
    term weighted by the old marginal.
    """
    return marginal_kl(w_old, w_new) + conditional_kl(p_old, p_new, w_old)
