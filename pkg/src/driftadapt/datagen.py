"""Seeded synthetic drift generators and CSV ingestion.

Reproducibility contract: every generator is a pure function of its spec and
seed. All randomness is drawn as uniform doubles from numpy's PCG64
(``default_rng`` seeded with ``[seed, step]`` per time step), Gaussians come
from the Box-Muller transform (cosine branch only),

    z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2),

and labels from inverse-CDF sampling of the class priors. Fixing the
transforms keeps generated streams bit-identical across platforms and numpy
versions, which the distribution-specific generator methods do not promise.

CSV convention: comma-separated UTF-8, features first, label last, header
row optional (auto-detected by a non-numeric first row), floats written with
full round-trip precision.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Batch, LabeledBatch


class ParseError(ValueError):
    """A CSV row could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = int(line)
        super().__init__(f"line {line}: {message}")


class DimensionError(ValueError):
    """CSV rows disagree on the number of columns."""

    def __init__(self, line: int, message: str):
        self.line = int(line)
        super().__init__(f"line {line}: {message}")


# --- portable randomness -----------------------------------------------------


def _step_rng(seed: int, step: int) -> np.random.Generator:
    """Independent PCG64 stream for one time step of one seeded process."""
    return np.random.default_rng([int(seed), int(step)])


def _normals(rng: np.random.Generator, count: int) -> np.ndarray:
    """Standard normals via Box-Muller on PCG64 uniforms (cosine branch)."""
    u1 = rng.random(count)
    u2 = rng.random(count)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def _categorical(rng: np.random.Generator, priors: np.ndarray, count: int) -> np.ndarray:
    """Class draws by inverse CDF over the prior vector."""
    edges = np.cumsum(priors)
    labels = np.searchsorted(edges, rng.random(count), side="right")
    return np.minimum(labels, len(priors) - 1)  # guard fp round-off in edges


def shuffled_indices(rng: np.random.Generator, n: int) -> np.ndarray:
    """Fisher-Yates permutation driven by PCG64 uniforms."""
    idx = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def _sample_gaussian_batch(
    rng: np.random.Generator,
    size: int,
    priors: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
) -> LabeledBatch:
    labels = _categorical(rng, priors, size)
    d = means.shape[1]
    z = _normals(rng, size * d).reshape(size, d)
    x = means[labels] + np.sqrt(variances[labels]) * z
    return LabeledBatch(Batch(x), labels)


# --- specs -------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianDriftSpec:
    """Per-time-step Gaussian mixture parameters for a short drift episode.

    ``means`` and ``covariances`` have shape (steps, classes, features);
    covariances hold the diagonal entries. ``sizes`` gives one batch size per
    step.
    """

    priors: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    sizes: tuple[int, ...]
    seed: int

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=np.float64)
        means = np.asarray(self.means, dtype=np.float64)
        covs = np.asarray(self.covariances, dtype=np.float64)
        if priors.ndim != 1 or means.ndim != 3 or covs.shape != means.shape:
            raise ValueError("expected priors (C,), means and covariances (T, C, d)")
        if means.shape[1] != priors.shape[0]:
            raise ValueError("means class axis must match priors length")
        if abs(float(priors.sum()) - 1.0) > 1e-9 or np.any(priors < 0):
            raise ValueError("priors must be nonnegative and sum to 1")
        if np.any(covs <= 0) or not np.all(np.isfinite(means)):
            raise ValueError("covariance entries must be positive, means finite")
        sizes = tuple(int(s) for s in self.sizes)
        if len(sizes) != means.shape[0] or any(s < 1 for s in sizes):
            raise ValueError("need one positive size per time step")
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)
        object.__setattr__(self, "sizes", sizes)

    def to_dict(self) -> dict:
        return {
            "priors": [float(v) for v in self.priors],
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "sizes": list(self.sizes),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianDriftSpec":
        try:
            return cls(
                priors=doc["priors"],
                means=doc["means"],
                covariances=doc["covariances"],
                sizes=tuple(doc["sizes"]),
                seed=int(doc["seed"]),
            )
        except KeyError as e:
            raise ValueError(f"spec is missing field {e.args[0]!r}") from e


@dataclass(frozen=True)
class StreamSpec:
    """A multi-step stream whose class means move on a straight line.

    Step ``s`` of ``n_steps`` interpolates each class mean between
    ``mean_start`` and ``mean_end`` at fraction ``s / (n_steps - 1)``.
    """

    n_steps: int
    batch_size: int
    priors: np.ndarray
    mean_start: np.ndarray
    mean_end: np.ndarray
    variances: np.ndarray
    seed: int

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=np.float64)
        start = np.asarray(self.mean_start, dtype=np.float64)
        end = np.asarray(self.mean_end, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        if self.n_steps < 2:
            raise ValueError("a stream needs at least 2 steps")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if start.ndim != 2 or start.shape != end.shape or variances.shape != start.shape:
            raise ValueError("mean_start, mean_end, variances must share shape (C, d)")
        if priors.shape != (start.shape[0],):
            raise ValueError("priors length must match the class axis")
        if abs(float(priors.sum()) - 1.0) > 1e-9 or np.any(priors < 0):
            raise ValueError("priors must be nonnegative and sum to 1")
        if not (np.all(np.isfinite(start)) and np.all(np.isfinite(end))):
            raise ValueError("trajectory endpoints must be finite")
        if np.any(variances <= 0):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "mean_start", start)
        object.__setattr__(self, "mean_end", end)
        object.__setattr__(self, "variances", variances)

    def to_dict(self) -> dict:
        return {
            "n_steps": int(self.n_steps),
            "batch_size": int(self.batch_size),
            "priors": [float(v) for v in self.priors],
            "mean_start": self.mean_start.tolist(),
            "mean_end": self.mean_end.tolist(),
            "variances": self.variances.tolist(),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StreamSpec":
        try:
            return cls(
                n_steps=int(doc["n_steps"]),
                batch_size=int(doc["batch_size"]),
                priors=doc["priors"],
                mean_start=doc["mean_start"],
                mean_end=doc["mean_end"],
                variances=doc["variances"],
                seed=int(doc["seed"]),
            )
        except KeyError as e:
            raise ValueError(f"spec is missing field {e.args[0]!r}") from e


def two_gaussian_benchmark_spec(seed: int, n_init: int = 10_000, n_drift: int = 1_000) -> GaussianDriftSpec:
    """The standard two-class benchmark: one class mean jumps (-1,-1) -> (-2,-2).

    Class 0 sits at (1,1) throughout; class 1 carries 70% of the mass; unit
    variances everywhere.
    """
    return GaussianDriftSpec(
        priors=[0.3, 0.7],
        means=[[[1.0, 1.0], [-1.0, -1.0]], [[1.0, 1.0], [-2.0, -2.0]]],
        covariances=np.ones((2, 2, 2)),
        sizes=(n_init, n_drift),
        seed=seed,
    )


def stream_benchmark_spec(seed: int, n_steps: int = 20, batch_size: int = 1_000) -> StreamSpec:
    """Linear-drift stream: class 1 slides (-1,-1) -> (-4,-4) over the stream."""
    return StreamSpec(
        n_steps=n_steps,
        batch_size=batch_size,
        priors=[0.3, 0.7],
        mean_start=[[1.0, 1.0], [-1.0, -1.0]],
        mean_end=[[1.0, 1.0], [-4.0, -4.0]],
        variances=np.ones((2, 2)),
        seed=seed,
    )


# --- generators ----------------------------------------------------------------


def gen_two_gaussian(spec: GaussianDriftSpec) -> tuple[LabeledBatch, LabeledBatch]:
    """Draw the initial and drifted batches of a two-step Gaussian episode."""
    if len(spec.sizes) != 2:
        raise ValueError("gen_two_gaussian expects a spec with exactly 2 time steps")
    batches = [
        _sample_gaussian_batch(
            _step_rng(spec.seed, t), spec.sizes[t], spec.priors, spec.means[t], spec.covariances[t]
        )
        for t in (0, 1)
    ]
    return batches[0], batches[1]


def gen_drifting_stream(spec: StreamSpec) -> list[LabeledBatch]:
    """Draw every step of a linearly interpolated moving-mean stream."""
    out = []
    for s in range(spec.n_steps):
        frac = s / (spec.n_steps - 1)
        means = spec.mean_start + frac * (spec.mean_end - spec.mean_start)
        out.append(
            _sample_gaussian_batch(
                _step_rng(spec.seed, s), spec.batch_size, spec.priors, means, spec.variances
            )
        )
    return out


# The labeled-1 region contracts between batches: pseudo-label refits track a
# shrinking class far better than an expanding one (self-training erodes an
# expanding minority class), and the reverse direction measurably degrades
# the adapted model.
SEA_THETA_INIT = 9.0
SEA_THETA_DRIFT = 8.0
SEA_BAND_HALFWIDTH = 0.5


def _sample_sea_batch(rng: np.random.Generator, size: int, theta: float, band: float) -> LabeledBatch:
    kept: list[np.ndarray] = []
    total = 0
    while total < size:
        block = max(64, 2 * (size - total))
        pts = rng.random((block, 3)) * 10.0
        pts = pts[np.abs(pts[:, 0] + pts[:, 1] - theta) >= band]
        kept.append(pts)
        total += len(pts)
    x = np.concatenate(kept)[:size]
    labels = (x[:, 0] + x[:, 1] <= theta).astype(np.int64)
    return LabeledBatch(Batch(x), labels)


def gen_modified_sea(
    seed: int,
    n_init: int,
    n_drift: int,
    theta_init: float = SEA_THETA_INIT,
    theta_drift: float = SEA_THETA_DRIFT,
    band_halfwidth: float = SEA_BAND_HALFWIDTH,
) -> tuple[LabeledBatch, LabeledBatch]:
    """Threshold-rule batches with a shifted rule and a carved-out margin band.

    Three features uniform on [0, 10]^3; label 1 iff f0 + f1 <= theta. Points
    with f0 + f1 within ``band_halfwidth`` of the active threshold are
    rejected, so the rule change from ``theta_init`` to ``theta_drift`` moves
    both the class boundary and the feature distribution.
    """
    if n_init < 1 or n_drift < 1:
        raise ValueError("batch sizes must be positive")
    init = _sample_sea_batch(_step_rng(seed, 0), n_init, theta_init, band_halfwidth)
    drift = _sample_sea_batch(_step_rng(seed, 1), n_drift, theta_drift, band_halfwidth)
    return init, drift


# --- CSV ingestion and export ----------------------------------------------


def format_float(v: float) -> str:
    """Shortest decimal string that round-trips the binary value."""
    return repr(float(v))


def _parse_rows(path: Path) -> tuple[list[list[float]], int]:
    """Read one CSV file into float rows, skipping an auto-detected header."""
    rows: list[list[float]] = []
    width = -1
    with open(path, newline="", encoding="utf-8") as fh:
        for line_no, cells in enumerate(csv.reader(fh), start=1):
            if not cells or (len(cells) == 1 and cells[0].strip() == ""):
                continue  # blank line
            if line_no == 1:
                try:
                    [float(c) for c in cells]
                except ValueError:
                    continue  # header row
            try:
                row = [float(c) for c in cells]
            except ValueError as e:
                raise ParseError(line_no, f"{e} in {path.name}") from e
            if not all(np.isfinite(row)):
                raise ParseError(line_no, f"non-finite value in {path.name}")
            if width == -1:
                width = len(row)
            elif len(row) != width:
                raise DimensionError(
                    line_no, f"expected {width} columns, got {len(row)} in {path.name}"
                )
            rows.append(row)
    return rows, width


def _collect_rows(path) -> np.ndarray:
    """Rows of a CSV file, or of every *.csv in a directory in sorted order."""
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.csv"))
        if not files:
            raise ParseError(0, f"no .csv files in directory {p}")
    else:
        files = [p]
    all_rows: list[list[float]] = []
    width = -1
    for f in files:
        rows, w = _parse_rows(f)
        if not rows:
            continue
        if width == -1:
            width = w
        elif w != width:
            raise DimensionError(0, f"{f.name} has {w} columns, expected {width}")
        all_rows.extend(rows)
    if not all_rows:
        raise ParseError(0, f"no data rows in {p}")
    return np.asarray(all_rows, dtype=np.float64)


def _dense_labels(raw: np.ndarray) -> tuple[np.ndarray, tuple[str, ...]]:
    """Map a raw numeric label column to dense 0-based ints plus names."""
    if not np.all(raw == np.round(raw)):
        raise ParseError(0, "label column must be integer-valued")
    values = np.unique(raw).astype(np.int64)
    lookup = {v: i for i, v in enumerate(values.tolist())}
    labels = np.asarray([lookup[int(v)] for v in raw], dtype=np.int64)
    return labels, tuple(str(v) for v in values.tolist())


def load_batch_csv(path) -> Batch:
    """All columns are features; no label column."""
    return Batch(_collect_rows(path))


def load_labeled_csv(path) -> tuple[LabeledBatch, tuple[str, ...]]:
    """Features first, integer-valued label last; returns dense labels + names."""
    data = _collect_rows(path)
    if data.shape[1] < 2:
        raise DimensionError(0, "need at least one feature column and a label column")
    labels, names = _dense_labels(data[:, -1])
    return LabeledBatch(Batch(data[:, :-1]), labels), names


def load_csv_stream(path, batch_size: int, label_column: bool = True):
    """Partition CSV rows into consecutive batches of ``batch_size``.

    A final partial batch is kept only if it has at least ``2 * C`` rows
    (C = number of distinct labels, 1 when unlabeled); otherwise it is merged
    into the previous batch. Returns LabeledBatch objects, or plain Batch
    objects when ``label_column`` is false.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    data = _collect_rows(path)
    if label_column:
        if data.shape[1] < 2:
            raise DimensionError(0, "need at least one feature column and a label column")
        labels, names = _dense_labels(data[:, -1])
        features = data[:, :-1]
        n_classes = len(names)
    else:
        labels, names = None, ()
        features = data
        n_classes = 1

    n = features.shape[0]
    bounds = list(range(0, n, batch_size)) + [n]
    tail = bounds[-1] - bounds[-2]
    if len(bounds) > 2 and tail < batch_size and tail < 2 * n_classes:
        bounds.pop(-2)  # merge the short partial tail into the previous batch

    out = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if labels is None:
            out.append(Batch(features[lo:hi]))
        else:
            out.append(LabeledBatch(Batch(features[lo:hi]), labels[lo:hi]))
    return out


def write_batch_csv(batch: Batch, path, header: bool = True) -> None:
    """Write features at full precision, columns f0..f{d-1}."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"f{j}" for j in range(batch.dim)])
        for row in batch.x:
            writer.writerow([format_float(v) for v in row])


def write_labeled_csv(
    data: LabeledBatch, path, class_names: tuple[str, ...] = (), header: bool = True
) -> None:
    """Write features plus a final label column (named classes if given)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"f{j}" for j in range(data.dim)] + ["y"])
        for row, label in zip(data.batch.x, data.labels):
            name = class_names[label] if class_names else str(int(label))
            writer.writerow([format_float(v) for v in row] + [name])


def write_labels_csv(labels: np.ndarray, path, class_names: tuple[str, ...] = ()) -> None:
    """Write one predicted label per row under a ``label`` header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"])
        for label in labels:
            writer.writerow([class_names[label] if class_names else str(int(label))])
