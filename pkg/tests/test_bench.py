import numpy as np
import pytest

from driftadapt.adapt import AdaptationConfig
from driftadapt.bench import (
    ComparisonReport,
    StepRecord,
    StreamReport,
    classification_error,
    cross_val_error,
    export_report,
    read_report,
    run_comparison,
    run_stream_eval,
)
from driftadapt.core import Batch, LabeledBatch
from driftadapt.datagen import (
    GaussianDriftSpec,
    gen_drifting_stream,
    gen_two_gaussian,
    stream_benchmark_spec,
    two_gaussian_benchmark_spec,
)


def no_drift_pair(seed, n=3000):
    spec = GaussianDriftSpec(
        priors=[0.3, 0.7],
        means=[[[1.0, 1.0], [-1.0, -1.0]]] * 2,
        covariances=np.ones((2, 2, 2)),
        sizes=(n, n // 3),
        seed=seed,
    )
    return gen_two_gaussian(spec)


class TestCrossVal:
    def test_low_error_on_separable_data(self):
        rng = np.random.default_rng(1)
        x = np.vstack([rng.normal(-5, 1, (200, 2)), rng.normal(5, 1, (200, 2))])
        data = LabeledBatch(Batch(x), np.array([0] * 200 + [1] * 200))
        assert cross_val_error(data, seed=0) < 0.02

    def test_deterministic_per_seed(self):
        _, drifted = gen_two_gaussian(two_gaussian_benchmark_spec(seed=2))
        assert cross_val_error(drifted, seed=5) == cross_val_error(drifted, seed=5)

    def test_fold_count_validation(self):
        _, drifted = no_drift_pair(3)
        with pytest.raises(ValueError):
            cross_val_error(drifted, n_folds=1)


class TestRunComparison:
    def test_no_drift_control(self):
        train, same = no_drift_pair(11)
        report = run_comparison(train, same, seed=11)
        assert abs(report.adapted_error - report.unadapted_error) < 0.005

    def test_deterministic_except_timing(self):
        train, drifted = gen_two_gaussian(two_gaussian_benchmark_spec(seed=6))
        a = run_comparison(train, drifted, seed=6)
        b = run_comparison(train, drifted, seed=6)
        assert (a.supervised_error, a.adapted_error, a.unadapted_error) == (
            b.supervised_error,
            b.adapted_error,
            b.unadapted_error,
        )

    def test_scoring_labels_cannot_influence_adaptation(self):
        train, drifted = gen_two_gaussian(two_gaussian_benchmark_spec(seed=8))
        scrambled = LabeledBatch(drifted.batch, drifted.labels[::-1].copy())
        a = run_comparison(train, drifted, seed=8)
        b = run_comparison(train, scrambled, seed=8)
        # scoring changes, but both runs adapted the identical feature batch:
        # the error must differ only through the truth labels, and the
        # unadapted/adapted errors shift together
        assert a.adapted_error != b.adapted_error or a.unadapted_error != b.unadapted_error
        assert a.train_size == b.train_size

    def test_metadata_recorded(self):
        train, drifted = gen_two_gaussian(two_gaussian_benchmark_spec(seed=3))
        report = run_comparison(train, drifted, seed=3, dataset="episode")
        assert report.dataset == "episode"
        assert report.seed == 3
        assert report.train_size == 10_000 and report.drift_size == 1_000


class TestRunStreamEval:
    def test_stationary_stream_shows_no_gap(self):
        spec = stream_benchmark_spec(seed=15, n_steps=4, batch_size=2000)
        spec = type(spec)(
            n_steps=4,
            batch_size=2000,
            priors=spec.priors,
            mean_start=spec.mean_start,
            mean_end=spec.mean_start,  # no movement
            variances=spec.variances,
            seed=15,
        )
        report = run_stream_eval(gen_drifting_stream(spec), seed=15)
        assert abs(report.mean_adapted_error - report.mean_unadapted_error) < 0.01

    def test_step_records_shape(self):
        stream = gen_drifting_stream(stream_benchmark_spec(seed=16, n_steps=5, batch_size=500))
        report = run_stream_eval(stream, seed=16)
        assert [r.step for r in report.steps] == [1, 2, 3, 4]
        assert all(0.0 <= r.adapted_error <= 1.0 for r in report.steps)
        assert all(r.iterations >= 1 for r in report.steps)

    def test_needs_at_least_two_batches(self):
        stream = gen_drifting_stream(stream_benchmark_spec(seed=17, n_steps=2, batch_size=100))
        with pytest.raises(ValueError):
            run_stream_eval(stream[:1])


class TestReportRoundTrip:
    @pytest.fixture
    def comparison(self):
        train, drifted = gen_two_gaussian(two_gaussian_benchmark_spec(seed=4, n_init=2000, n_drift=400))
        return run_comparison(train, drifted, seed=4, dataset="episode")

    @pytest.fixture
    def stream_report(self):
        stream = gen_drifting_stream(stream_benchmark_spec(seed=5, n_steps=4, batch_size=400))
        return run_stream_eval(stream, seed=5, dataset="mini")

    def test_comparison_csv_round_trip(self, tmp_path, comparison):
        path = tmp_path / "report.csv"
        export_report(comparison, path, "csv")
        loaded = read_report(path, "csv")
        for fieldname in (
            "supervised_error",
            "adapted_error",
            "unadapted_error",
            "supervised_seconds",
            "adapted_seconds",
            "unadapted_seconds",
        ):
            assert getattr(loaded, fieldname) == getattr(comparison, fieldname)

    def test_comparison_keyvalue_round_trip(self, tmp_path, comparison):
        path = tmp_path / "report.json"
        export_report(comparison, path, "keyvalue")
        assert read_report(path, "keyvalue") == comparison

    def test_stream_csv_round_trip(self, tmp_path, stream_report):
        path = tmp_path / "report.csv"
        export_report(stream_report, path, "csv")
        loaded = read_report(path, "csv")
        assert loaded.steps == stream_report.steps
        assert loaded.mean_adapted_error == stream_report.mean_adapted_error
        assert loaded.mean_unadapted_error == stream_report.mean_unadapted_error
        assert loaded.total_seconds == stream_report.total_seconds

    def test_stream_keyvalue_round_trip(self, tmp_path, stream_report):
        path = tmp_path / "report.json"
        export_report(stream_report, path, "keyvalue")
        assert read_report(path, "keyvalue") == stream_report

    def test_csv_shape_of_comparison(self, tmp_path, comparison):
        path = tmp_path / "report.csv"
        export_report(comparison, path, "csv")
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "method,error,seconds"
        assert len(lines) == 4  # header + one row per method

    def test_unknown_format_rejected(self, tmp_path, comparison):
        with pytest.raises(ValueError):
            export_report(comparison, tmp_path / "x", "yaml")
        with pytest.raises(TypeError):
            export_report(StepRecord(1, 0.0, 0.0, 1, 0.0), tmp_path / "x", "csv")
