"""Command-line surface.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import classifier
from .adapt import AdaptationConfig, AdaptationStepError, BatchTooSmall, DimensionMismatch, adapt_batch
from .bench import export_report, run_comparison, run_stream_eval
from .core import AllZeroDensity, RowDegenerate, ShapeMismatch
from .datagen import (
    SEA_BAND_HALFWIDTH,
    SEA_THETA_DRIFT,
    SEA_THETA_INIT,
    DimensionError,
    GaussianDriftSpec,
    ParseError,
    StreamSpec,
    format_float,
    gen_drifting_stream,
    gen_modified_sea,
    gen_two_gaussian,
    load_batch_csv,
    load_csv_stream,
    load_labeled_csv,
    stream_benchmark_spec,
    two_gaussian_benchmark_spec,
    write_labeled_csv,
    write_labels_csv,
)

_NUMERIC_ERRORS = (RowDegenerate, AllZeroDensity, FloatingPointError, ZeroDivisionError)
_DATA_ERRORS = (
    ParseError,
    DimensionError,
    classifier.ModelFormatError,
    classifier.ClassUnderpopulated,
    DimensionMismatch,
    BatchTooSmall,
    ShapeMismatch,
    json.JSONDecodeError,
    OSError,
    ValueError,
)


class _Parser(argparse.ArgumentParser):
    """argparse flavor that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"spec file {path} must hold a key-value tree")
    return doc


def _write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "kl", "step_size", "label_changes"])
        for r in trace.records:
            writer.writerow([r.k, format_float(r.kl), format_float(r.step_size), r.label_changes])


def _cmd_train(args) -> int:
    data, names = load_labeled_csv(args.input)
    model = classifier.fit(data, args.variance_floor, class_names=names)
    classifier.save_model(model, args.model)
    print(f"trained on {data.n} points ({model.n_classes} classes, dim {model.dim}) -> {args.model}")
    return 0


def _cmd_predict(args) -> int:
    model = classifier.load_model(args.model)
    batch = load_batch_csv(args.input)
    labels = classifier.predict(model, batch)
    write_labels_csv(labels, args.out, model.class_names)
    print(f"predicted {batch.n} points -> {args.out}")
    return 0


def _cmd_adapt(args) -> int:
    model = classifier.load_model(args.model)
    batch = load_batch_csv(args.input)
    config = AdaptationConfig(
        step_constant=args.c,
        max_iterations=args.max_iters,
        tolerance=args.tol,
        weight_mode=args.weights,
    )
    result = adapt_batch(model, batch, config)
    write_labels_csv(result.labels, args.out, model.class_names)
    if args.trace:
        _write_trace_csv(result.trace, args.trace)
    if args.update_model:
        classifier.save_model(result.updated_model, args.update_model)
    t = result.trace
    print(
        f"adapted {batch.n} points in {t.iterations} iteration(s) "
        f"({t.termination}, final KL {t.final_kl:.3e}) -> {args.out}"
    )
    return 0


def _aggregate_rows(reports):
    rows = []
    for run, rep in enumerate(reports):
        for method in ("supervised", "adapted", "unadapted"):
            rows.append(
                [
                    str(run),
                    str(rep.seed),
                    method,
                    format_float(getattr(rep, f"{method}_error")),
                    format_float(getattr(rep, f"{method}_seconds")),
                ]
            )
    for stat, fn in (("mean", np.mean), ("std", np.std)):
        for method in ("supervised", "adapted", "unadapted"):
            errors = [getattr(r, f"{method}_error") for r in reports]
            seconds = [getattr(r, f"{method}_seconds") for r in reports]
            rows.append([stat, "", method, format_float(fn(errors)), format_float(fn(seconds))])
    return rows


def _write_runs_csv(path, reports) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "seed", "method", "error", "seconds"])
        writer.writerows(_aggregate_rows(reports))


def _print_comparison_summary(reports) -> None:
    for method in ("supervised", "adapted", "unadapted"):
        errors = np.array([getattr(r, f"{method}_error") for r in reports])
        print(f"{method:>10}: error {errors.mean():.4f} +/- {errors.std():.4f} over {len(reports)} run(s)")


def _run_comparison_bench(args, generate, dataset: str) -> int:
    if args.runs < 1:
        raise ValueError("--runs must be at least 1")
    reports = []
    for r in range(args.runs):
        seed = args.seed + r
        train, drifted = generate(seed)
        reports.append(run_comparison(train, drifted, seed=seed, dataset=dataset))
    _print_comparison_summary(reports)
    if args.out:
        _write_runs_csv(args.out, reports)
        print(f"wrote {args.out}")
    return 0


def _cmd_bench_synthetic(args) -> int:
    def generate(seed):
        return gen_two_gaussian(two_gaussian_benchmark_spec(seed))

    return _run_comparison_bench(args, generate, "two-gaussian")


def _cmd_bench_sea(args) -> int:
    def generate(seed):
        return gen_modified_sea(seed, n_init=10_000, n_drift=1_000)

    return _run_comparison_bench(args, generate, "modified-sea")


def _cmd_bench_stream(args) -> int:
    if args.spec:
        doc = _load_json(args.spec)
        doc["seed"] = args.seed  # CLI seed wins over the spec file
        spec = StreamSpec.from_dict(doc)
        stream = gen_drifting_stream(spec)
        dataset = f"stream:{Path(args.spec).name}"
    else:
        if args.batch_size is None:
            raise ValueError("--batch-size is required with --csv")
        stream = load_csv_stream(args.csv, args.batch_size, label_column=True)
        dataset = f"csv:{Path(args.csv).name}"
    report = run_stream_eval(stream, seed=args.seed, dataset=dataset)
    for rec in report.steps:
        print(
            f"step {rec.step:>3}: adapted {rec.adapted_error:.4f}  "
            f"unadapted {rec.unadapted_error:.4f}  "
            f"({rec.iterations} iters, final KL {rec.final_kl:.3e})"
        )
    print(
        f"mean adapted {report.mean_adapted_error:.4f}, "
        f"mean unadapted {report.mean_unadapted_error:.4f}, "
        f"adaptation time {report.total_seconds:.2f}s"
    )
    if args.out:
        export_report(report, args.out, "csv")
        print(f"wrote {args.out}")
    return 0


def _cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = _load_json(args.spec)
    if args.kind == "two-gaussian":
        initial, drifted = gen_two_gaussian(GaussianDriftSpec.from_dict(doc))
    elif args.kind == "sea":
        try:
            initial, drifted = gen_modified_sea(
                seed=int(doc["seed"]),
                n_init=int(doc["n_init"]),
                n_drift=int(doc["n_drift"]),
                theta_init=float(doc.get("theta_init", SEA_THETA_INIT)),
                theta_drift=float(doc.get("theta_drift", SEA_THETA_DRIFT)),
                band_halfwidth=float(doc.get("band_halfwidth", SEA_BAND_HALFWIDTH)),
            )
        except KeyError as e:
            raise ValueError(f"spec is missing field {e.args[0]!r}") from e
    else:  # stream
        spec = StreamSpec.from_dict(doc)
        for s, batch in enumerate(gen_drifting_stream(spec)):
            write_labeled_csv(batch, out / f"step_{s:03d}.csv")
        print(f"wrote {spec.n_steps} stream steps to {out}")
        return 0
    write_labeled_csv(initial, out / "initial.csv")
    write_labeled_csv(drifted, out / "drifted.csv")
    print(f"wrote {out / 'initial.csv'} and {out / 'drifted.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="driftadapt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a labeled CSV")
    p.add_argument("--input", required=True, help="labeled CSV (features first, label last)")
    p.add_argument("--model", required=True, help="output model path (JSON)")
    p.add_argument("--variance-floor", type=float, default=classifier.DEFAULT_VARIANCE_FLOOR)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="classify an unlabeled CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="unlabeled CSV (all columns features)")
    p.add_argument("--out", required=True, help="output CSV of predicted labels")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("adapt", help="adapt a saved model to an unlabeled drifted batch")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="unlabeled CSV (all columns features)")
    p.add_argument("--out", required=True, help="output CSV of adapted labels")
    p.add_argument("--c", type=float, default=50.0, help="step-size constant")
    p.add_argument("--tol", type=float, default=1e-10, help="convergence threshold")
    p.add_argument("--max-iters", type=int, default=10)
    p.add_argument("--weights", choices=("density", "uniform"), default="density")
    p.add_argument("--trace", help="optional CSV of per-iteration convergence records")
    p.add_argument("--update-model", help="optional path for the refit carried-forward model")
    p.set_defaults(func=_cmd_adapt)

    bench = sub.add_parser("bench", help="benchmark harnesses")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)

    p = bench_sub.add_parser("synthetic", help="two-Gaussian drift comparison")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--out", help="output CSV (run,seed,method,error,seconds)")
    p.set_defaults(func=_cmd_bench_synthetic)

    p = bench_sub.add_parser("sea", help="threshold-rule drift comparison")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--out", help="output CSV (run,seed,method,error,seconds)")
    p.set_defaults(func=_cmd_bench_sea)

    p = bench_sub.add_parser("stream", help="error-over-time evaluation")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--spec", help="stream spec JSON")
    group.add_argument("--csv", help="labeled CSV file or directory of CSV steps")
    p.add_argument("--batch-size", type=int, help="rows per batch when loading --csv")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="output CSV (one row per step plus totals)")
    p.set_defaults(func=_cmd_bench_stream)

    p = sub.add_parser("gen", help="generate benchmark data to CSV")
    p.add_argument("kind", choices=("two-gaussian", "sea", "stream"))
    p.add_argument("--spec", required=True, help="generator spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except AdaptationStepError as e:
        print(f"driftadapt: {e}", file=sys.stderr)
        return 3 if isinstance(e.__cause__, _NUMERIC_ERRORS) else 2
    except _NUMERIC_ERRORS as e:
        print(f"driftadapt: numeric failure: {e}", file=sys.stderr)
        return 3
    except _DATA_ERRORS as e:
        print(f"driftadapt: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
