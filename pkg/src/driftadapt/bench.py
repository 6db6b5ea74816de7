"""Benchmark harness: three-way comparisons and error-over-time stream runs.

The comparison pits the adapted model against its two brackets: a supervised
model trained and scored on the drifted data itself by 10-fold
cross-validation (best case — labels are not actually available in
deployment) and the frozen previous-step model (worst case). True labels of
drifted batches are used for scoring and the supervised baseline only; the
adaptation call receives a bare feature batch by construction.

Timing covers each method's own work (cross-validation, the adaptation
call, the prediction call); data generation and I/O are excluded.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import classifier
from .adapt import AdaptationConfig, adapt_batch, sequential_adapt
from .core import Batch, LabeledBatch
from .datagen import format_float, shuffled_indices


def classification_error(predicted: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of points whose predicted class differs from the truth."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError("prediction and truth lengths differ")
    return float(np.mean(predicted != truth))


def cross_val_error(
    data: LabeledBatch,
    n_folds: int = 10,
    seed: int = 0,
    variance_floor: float = classifier.DEFAULT_VARIANCE_FLOOR,
) -> float:
    """Mean k-fold error of a model fit fresh on each training split.

    Folds are contiguous blocks of a seeded Fisher-Yates shuffle, so the
    estimate is reproducible for a given seed.
    """
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    perm = shuffled_indices(np.random.default_rng(int(seed)), data.n)
    folds = np.array_split(perm, n_folds)
    errors = []
    for held_out in folds:
        mask = np.ones(data.n, dtype=bool)
        mask[held_out] = False
        train = LabeledBatch(Batch(data.batch.x[mask]), data.labels[mask])
        model = classifier.fit(train, variance_floor)
        predicted = classifier.predict(model, Batch(data.batch.x[held_out]))
        errors.append(classification_error(predicted, data.labels[held_out]))
    return float(np.mean(errors))


@dataclass(frozen=True)
class ComparisonReport:
    """Three-way error comparison on one (train, drifted) pair."""

    supervised_error: float
    adapted_error: float
    unadapted_error: float
    supervised_seconds: float
    adapted_seconds: float
    unadapted_seconds: float
    dataset: str = ""
    seed: int = 0
    train_size: int = 0
    drift_size: int = 0
    config: AdaptationConfig = field(default_factory=AdaptationConfig)


@dataclass(frozen=True)
class StepRecord:
    """One evaluated stream step."""

    step: int
    adapted_error: float
    unadapted_error: float
    iterations: int
    final_kl: float


@dataclass(frozen=True)
class StreamReport:
    """Per-step errors of the carried-forward model vs the frozen one."""

    steps: tuple[StepRecord, ...]
    mean_adapted_error: float
    mean_unadapted_error: float
    total_seconds: float
    dataset: str = ""
    seed: int = 0
    config: AdaptationConfig = field(default_factory=AdaptationConfig)


def run_comparison(
    train: LabeledBatch,
    drifted: LabeledBatch,
    config: AdaptationConfig | None = None,
    seed: int = 0,
    dataset: str = "",
    n_folds: int = 10,
) -> ComparisonReport:
    """Score supervised / adapted / unadapted on one drift episode.

    The drifted batch's labels never reach the adaptation call; they score
    its output and train the supervised baseline.
    """
    config = config or AdaptationConfig()

    t0 = time.perf_counter()
    supervised = cross_val_error(drifted, n_folds, seed, config.variance_floor)
    supervised_seconds = time.perf_counter() - t0

    model_t = classifier.fit(train, config.variance_floor)

    t0 = time.perf_counter()
    unadapted_labels = classifier.predict(model_t, drifted.batch)
    unadapted_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    result = adapt_batch(model_t, drifted.batch, config)
    adapted_seconds = time.perf_counter() - t0

    return ComparisonReport(
        supervised_error=supervised,
        adapted_error=classification_error(result.labels, drifted.labels),
        unadapted_error=classification_error(unadapted_labels, drifted.labels),
        supervised_seconds=supervised_seconds,
        adapted_seconds=adapted_seconds,
        unadapted_seconds=unadapted_seconds,
        dataset=dataset,
        seed=seed,
        train_size=train.n,
        drift_size=drifted.n,
        config=config,
    )


def run_stream_eval(
    stream,
    config: AdaptationConfig | None = None,
    seed: int = 0,
    dataset: str = "",
) -> StreamReport:
    """Fit on the first batch, then track the rest of the stream.

    Later batches are scored twice: with the frozen step-0 model and with the
    sequentially adapted model (labels used for scoring only). Total seconds
    cover the adaptation calls.
    """
    stream = list(stream)
    if len(stream) < 2:
        raise ValueError("stream needs a training batch plus at least one step")
    config = config or AdaptationConfig()
    model0 = classifier.fit(stream[0], config.variance_floor)

    t0 = time.perf_counter()
    results = sequential_adapt(model0, [b.batch for b in stream[1:]], config)
    total_seconds = time.perf_counter() - t0

    records = []
    for s, (labeled, result) in enumerate(zip(stream[1:], results), start=1):
        unadapted = classifier.predict(model0, labeled.batch)
        records.append(
            StepRecord(
                step=s,
                adapted_error=classification_error(result.labels, labeled.labels),
                unadapted_error=classification_error(unadapted, labeled.labels),
                iterations=result.trace.iterations,
                final_kl=result.trace.final_kl,
            )
        )
    return StreamReport(
        steps=tuple(records),
        mean_adapted_error=float(np.mean([r.adapted_error for r in records])),
        mean_unadapted_error=float(np.mean([r.unadapted_error for r in records])),
        total_seconds=total_seconds,
        dataset=dataset,
        seed=seed,
        config=config,
    )


# --- export / import ---------------------------------------------------------

_COMPARISON_METHODS = ("supervised", "adapted", "unadapted")


def export_report(report, path, fmt: str = "csv") -> None:
    """Write a report with deterministic field order and full float precision.

    ``csv`` writes the tabular view (three method rows for a comparison; one
    row per step plus a totals row for a stream). ``keyvalue`` writes a JSON
    document that round-trips every field including metadata.
    """
    if fmt == "keyvalue":
        doc = asdict(report)  # recurses into config and step records
        doc["kind"] = "comparison" if isinstance(report, ComparisonReport) else "stream"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        return
    if fmt != "csv":
        raise ValueError(f"unknown report format: {fmt!r}")

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if isinstance(report, ComparisonReport):
            writer.writerow(["method", "error", "seconds"])
            for method in _COMPARISON_METHODS:
                writer.writerow(
                    [
                        method,
                        format_float(getattr(report, f"{method}_error")),
                        format_float(getattr(report, f"{method}_seconds")),
                    ]
                )
        elif isinstance(report, StreamReport):
            writer.writerow(
                ["step", "adapted_error", "unadapted_error", "iterations", "final_kl", "seconds"]
            )
            for r in report.steps:
                writer.writerow(
                    [
                        r.step,
                        format_float(r.adapted_error),
                        format_float(r.unadapted_error),
                        r.iterations,
                        format_float(r.final_kl),
                        "",
                    ]
                )
            writer.writerow(
                [
                    "total",
                    format_float(report.mean_adapted_error),
                    format_float(report.mean_unadapted_error),
                    sum(r.iterations for r in report.steps),
                    "",
                    format_float(report.total_seconds),
                ]
            )
        else:
            raise TypeError(f"cannot export {type(report).__name__}")


def read_report(path, fmt: str = "csv"):
    """Re-import an exported report. CSV restores the tabulated values only;
    keyvalue restores metadata and config as well."""
    if fmt == "keyvalue":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        kind = doc.pop("kind", None)
        doc["config"] = AdaptationConfig(**doc["config"])
        if kind == "comparison":
            return ComparisonReport(**doc)
        if kind == "stream":
            doc["steps"] = tuple(StepRecord(**s) for s in doc["steps"])
            return StreamReport(**doc)
        raise ValueError(f"unknown report kind: {kind!r}")
    if fmt != "csv":
        raise ValueError(f"unknown report format: {fmt!r}")

    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError("empty report file")
    header = rows[0]
    if header[:2] == ["method", "error"]:
        values = {r[0]: (float(r[1]), float(r[2])) for r in rows[1:]}
        return ComparisonReport(
            supervised_error=values["supervised"][0],
            adapted_error=values["adapted"][0],
            unadapted_error=values["unadapted"][0],
            supervised_seconds=values["supervised"][1],
            adapted_seconds=values["adapted"][1],
            unadapted_seconds=values["unadapted"][1],
        )
    if header[:2] == ["step", "adapted_error"]:
        steps = []
        totals = None
        for r in rows[1:]:
            if r[0] == "total":
                totals = r
                continue
            steps.append(
                StepRecord(
                    step=int(r[0]),
                    adapted_error=float(r[1]),
                    unadapted_error=float(r[2]),
                    iterations=int(r[3]),
                    final_kl=float(r[4]),
                )
            )
        if totals is None:
            raise ValueError("stream report is missing its totals row")
        return StreamReport(
            steps=tuple(steps),
            mean_adapted_error=float(totals[1]),
            mean_unadapted_error=float(totals[2]),
            total_seconds=float(totals[5]),
        )
    raise ValueError(f"unrecognized report header: {header}")
