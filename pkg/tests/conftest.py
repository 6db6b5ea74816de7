import numpy as np
import pytest

from driftadapt.classifier import GnbModel


@pytest.fixture
def bench_model() -> GnbModel:
    """The two-Gaussian benchmark model, constructed exactly (not fitted):
    priors (0.3, 0.7), class means (1,1) and (-1,-1), unit variances."""
    return GnbModel(
        n_classes=2,
        dim=2,
        priors=np.array([0.3, 0.7]),
        means=np.array([[1.0, 1.0], [-1.0, -1.0]]),
        variances=np.ones((2, 2)),
    )


def random_posterior_table(rng: np.random.Generator, n: int, c: int, low: float = 0.1) -> np.ndarray:
    """Rows on the simplex with entries comfortably inside (0, 1)."""
    raw = low + (1.0 - low) * rng.random((n, c))
    return raw / raw.sum(axis=1, keepdims=True)


def random_weights(rng: np.random.Generator, n: int, low: float = 0.5) -> np.ndarray:
    raw = low + (1.0 - low) * rng.random(n)
    return raw / raw.sum()
