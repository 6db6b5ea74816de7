import numpy as np
import pytest

from driftadapt.core import Batch, LabeledBatch
from driftadapt.datagen import (
    SEA_BAND_HALFWIDTH,
    SEA_THETA_DRIFT,
    SEA_THETA_INIT,
    DimensionError,
    GaussianDriftSpec,
    ParseError,
    StreamSpec,
    gen_drifting_stream,
    gen_modified_sea,
    gen_two_gaussian,
    load_batch_csv,
    load_csv_stream,
    load_labeled_csv,
    stream_benchmark_spec,
    two_gaussian_benchmark_spec,
    write_batch_csv,
    write_labeled_csv,
)


class TestTwoGaussian:
    def test_deterministic_given_seed(self):
        a = gen_two_gaussian(two_gaussian_benchmark_spec(seed=9))
        b = gen_two_gaussian(two_gaussian_benchmark_spec(seed=9))
        assert np.array_equal(a[0].batch.x, b[0].batch.x)
        assert np.array_equal(a[1].labels, b[1].labels)
        c = gen_two_gaussian(two_gaussian_benchmark_spec(seed=10))
        assert not np.array_equal(a[0].batch.x, c[0].batch.x)

    def test_class_frequency_matches_prior(self):
        train, _ = gen_two_gaussian(two_gaussian_benchmark_spec(seed=1))
        assert 0.67 <= train.labels.mean() <= 0.73

    def test_drifted_class1_mean(self):
        _, drifted = gen_two_gaussian(two_gaussian_benchmark_spec(seed=1))
        moved = drifted.batch.x[drifted.labels == 1]
        assert np.all(np.abs(moved.mean(axis=0) - [-2.0, -2.0]) < 0.1)

    def test_empirical_moments_converge(self):
        spec = two_gaussian_benchmark_spec(seed=4, n_init=10_000)
        train, _ = gen_two_gaussian(spec)
        p = spec.priors[1]
        assert abs(train.labels.mean() - p) < 3.0 * np.sqrt(p * (1 - p) / train.n)
        for cls in (0, 1):
            pts = train.batch.x[train.labels == cls]
            tol = 3.0 / np.sqrt(len(pts))
            assert np.all(np.abs(pts.mean(axis=0) - spec.means[0][cls]) < tol)

    def test_identical_means_give_no_drift_control(self):
        spec = GaussianDriftSpec(
            priors=[0.3, 0.7],
            means=[[[1.0, 1.0], [-1.0, -1.0]]] * 2,
            covariances=np.ones((2, 2, 2)),
            sizes=(5000, 5000),
            seed=8,
        )
        t0, t1 = gen_two_gaussian(spec)
        assert abs(t0.labels.mean() - t1.labels.mean()) < 0.03
        assert np.all(np.abs(t0.batch.x.mean(axis=0) - t1.batch.x.mean(axis=0)) < 0.1)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            GaussianDriftSpec([0.5, 0.6], np.zeros((2, 2, 2)), np.ones((2, 2, 2)), (5, 5), 0)
        with pytest.raises(ValueError):
            GaussianDriftSpec([0.5, 0.5], np.zeros((2, 2, 2)), np.zeros((2, 2, 2)), (5, 5), 0)
        with pytest.raises(ValueError):
            gen_two_gaussian(
                GaussianDriftSpec([1.0], np.zeros((3, 1, 1)), np.ones((3, 1, 1)), (5, 5, 5), 0)
            )


class TestDriftingStream:
    def test_two_step_stream_equals_two_gaussian_episode(self):
        # identical parameters and per-step seeding make the degenerate
        # 2-step stream bit-identical to the paired-batch generator
        stream_spec = StreamSpec(
            n_steps=2,
            batch_size=500,
            priors=[0.3, 0.7],
            mean_start=[[1.0, 1.0], [-1.0, -1.0]],
            mean_end=[[1.0, 1.0], [-2.0, -2.0]],
            variances=np.ones((2, 2)),
            seed=77,
        )
        episode_spec = GaussianDriftSpec(
            priors=[0.3, 0.7],
            means=[[[1.0, 1.0], [-1.0, -1.0]], [[1.0, 1.0], [-2.0, -2.0]]],
            covariances=np.ones((2, 2, 2)),
            sizes=(500, 500),
            seed=77,
        )
        stream = gen_drifting_stream(stream_spec)
        t0, t1 = gen_two_gaussian(episode_spec)
        assert np.array_equal(stream[0].batch.x, t0.batch.x)
        assert np.array_equal(stream[1].batch.x, t1.batch.x)
        assert np.array_equal(stream[0].labels, t0.labels)

    def test_linear_interpolation_of_means(self):
        spec = stream_benchmark_spec(seed=3, n_steps=7, batch_size=20_000)
        stream = gen_drifting_stream(spec)
        for s in (0, 3, 6):
            frac = s / 6
            expected = spec.mean_start[1] + frac * (spec.mean_end[1] - spec.mean_start[1])
            pts = stream[s].batch.x[stream[s].labels == 1]
            assert np.all(np.abs(pts.mean(axis=0) - expected) < 0.05)

    def test_stationary_trajectory_is_iid(self):
        spec = StreamSpec(
            n_steps=4,
            batch_size=5000,
            priors=[0.5, 0.5],
            mean_start=[[0.0], [4.0]],
            mean_end=[[0.0], [4.0]],
            variances=np.ones((2, 1)),
            seed=5,
        )
        stream = gen_drifting_stream(spec)
        means = [b.batch.x.mean() for b in stream]
        assert max(means) - min(means) < 0.15
        assert not np.array_equal(stream[0].batch.x, stream[1].batch.x)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            stream_benchmark_spec(seed=0, n_steps=1)


class TestModifiedSea:
    def test_rule_and_band(self):
        init, drift = gen_modified_sea(123, 2000, 2000)
        for lb, theta in ((init, SEA_THETA_INIT), (drift, SEA_THETA_DRIFT)):
            s = lb.batch.x[:, 0] + lb.batch.x[:, 1]
            assert np.array_equal(lb.labels, (s <= theta).astype(int))
            assert np.all(np.abs(s - theta) >= SEA_BAND_HALFWIDTH)
            assert lb.batch.x.shape[1] == 3
            assert lb.batch.x.min() >= 0.0 and lb.batch.x.max() <= 10.0

    def test_prevalence_shift_of_at_least_3_points(self):
        init, drift = gen_modified_sea(123, 10_000, 10_000)
        assert abs(init.labels.mean() - drift.labels.mean()) >= 0.03

    def test_equal_thetas_share_one_rule(self):
        init, drift = gen_modified_sea(9, 5000, 5000, theta_init=8.0, theta_drift=8.0)
        assert abs(init.labels.mean() - drift.labels.mean()) < 0.03

    def test_deterministic(self):
        a = gen_modified_sea(7, 500, 500)
        b = gen_modified_sea(7, 500, 500)
        assert np.array_equal(a[0].batch.x, b[0].batch.x)
        assert np.array_equal(a[1].batch.x, b[1].batch.x)

    def test_rejects_empty_sizes(self):
        with pytest.raises(ValueError):
            gen_modified_sea(1, 0, 10)


class TestCsvRoundTrip:
    def test_labeled_round_trip_is_exact(self, tmp_path):
        _, drifted = gen_two_gaussian(two_gaussian_benchmark_spec(seed=2, n_drift=50))
        path = tmp_path / "batch.csv"
        write_labeled_csv(drifted, path)
        loaded, names = load_labeled_csv(path)
        assert np.array_equal(loaded.batch.x, drifted.batch.x)
        assert np.array_equal(loaded.labels, drifted.labels)
        assert names == ("0", "1")

    def test_unlabeled_round_trip_is_exact(self, tmp_path):
        batch = Batch(np.random.default_rng(0).normal(size=(20, 3)))
        path = tmp_path / "features.csv"
        write_batch_csv(batch, path)
        assert np.array_equal(load_batch_csv(path).x, batch.x)

    def test_header_row_parsing(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("f0,f1,y\n1.0,2.0,1\n0.5,0.25,0\n-1.0,3.5,1\n0.0,0.0,0\n")
        loaded, names = load_labeled_csv(path)
        assert np.array_equal(loaded.batch.x[0], [1.0, 2.0])
        assert loaded.labels.tolist() == [1, 0, 1, 0]

    def test_sparse_label_values_become_dense(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("1.0,3\n2.0,7\n3.0,3\n4.0,7\n")
        loaded, names = load_labeled_csv(path)
        assert loaded.labels.tolist() == [0, 1, 0, 1]
        assert names == ("3", "7")


class TestCsvStream:
    def _write_rows(self, path, n, label_cycle=(0, 1)):
        rows = ["f0,f1,y"]
        for i in range(n):
            rows.append(f"{i}.0,{i + 1}.5,{label_cycle[i % len(label_cycle)]}")
        path.write_text("\n".join(rows) + "\n")

    def test_even_partition(self, tmp_path):
        path = tmp_path / "s.csv"
        self._write_rows(path, 10)
        batches = load_csv_stream(path, 5)
        assert [b.n for b in batches] == [5, 5]

    def test_short_tail_merges_into_previous_batch(self, tmp_path):
        path = tmp_path / "s.csv"
        self._write_rows(path, 11)  # 2 classes: tail of 1 < 2*C
        batches = load_csv_stream(path, 5)
        assert [b.n for b in batches] == [5, 6]

    def test_sufficient_tail_is_kept(self, tmp_path):
        path = tmp_path / "s.csv"
        self._write_rows(path, 14)  # tail of 4 >= 2*C
        batches = load_csv_stream(path, 5)
        assert [b.n for b in batches] == [5, 5, 4]

    def test_unlabeled_mode(self, tmp_path):
        path = tmp_path / "s.csv"
        write_batch_csv(Batch(np.arange(12.0).reshape(6, 2)), path)
        batches = load_csv_stream(path, 3, label_column=False)
        assert all(isinstance(b, Batch) for b in batches)
        assert [b.n for b in batches] == [3, 3]

    def test_directory_of_step_files(self, tmp_path):
        for i, n in enumerate((4, 4, 4)):
            lb = LabeledBatch(Batch(np.full((n, 2), float(i))), np.array([0, 1] * (n // 2)))
            write_labeled_csv(lb, tmp_path / f"step_{i}.csv")
        batches = load_csv_stream(tmp_path, 4)
        assert [b.n for b in batches] == [4, 4, 4]
        assert np.all(batches[2].batch.x == 2.0)  # sorted file order preserved

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,y\n1.0,0\noops,1\n")
        with pytest.raises(ParseError) as err:
            load_csv_stream(path, 2)
        assert err.value.line == 3

    def test_ragged_rows_raise_dimension_error(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1.0,0\n1.0,2.0,0\n")
        with pytest.raises(DimensionError):
            load_csv_stream(path, 2)

    def test_non_integer_labels_rejected(self, tmp_path):
        path = tmp_path / "frac.csv"
        path.write_text("1.0,0.5\n2.0,0.5\n")
        with pytest.raises(ParseError):
            load_labeled_csv(path)
