import csv

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from src.errors import DataError, ParameterError
from src.evaluation import ratio_table
from src.models.config import DatasetSpec, SweepConfig, TsneConfig
from src.utils.data_io import load_raw, write_raw
from src.utils.rng import derive_seed
from src.utils.run_store import find_baseline
from src.workflow import SweepWorkflow, run_sweep, sweep_dimensions

FAST_TSNE = TsneConfig(perplexity=10, n_iter=250, early_exaggeration_iters=100, momentum_switch_iter=100)


def blob_config(tmp_path, blobs, out="run", **kwargs):
    matrix = tmp_path / "blobs.f64"
    if not matrix.exists():
        X, y = blobs(100, 20)
        write_raw(str(matrix), X, labels=y)
    options = dict(
        dataset=DatasetSpec(format="raw_f64", matrix_path=str(matrix)),
        out_dir=str(tmp_path / out),
        tsne=FAST_TSNE,
    )
    options.update(kwargs)
    return SweepConfig(**options)


def csv_rows(path, drop_timing=True):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if drop_timing:
        rows = [row[:3] + row[4:] for row in rows]
    return rows


class TestSweepDimensions:
    def test_degenerate(self):
        assert sweep_dimensions(7) == [7]

    def test_mnist_dimension(self):
        assert sweep_dimensions(784, 7, 1.5) == [7, 11, 16, 24, 35, 53, 80, 120, 179, 269, 404, 605, 784]

    def test_overflow_after_first_step(self):
        assert sweep_dimensions(10, 7, 1.5) == [7, 10]

    def test_start_above_d(self):
        with pytest.raises(ParameterError):
            sweep_dimensions(5, 7, 1.5)

    def test_base_must_exceed_one(self):
        with pytest.raises(ParameterError):
            sweep_dimensions(100, 7, 1.0)

    @given(st.integers(1, 5000), st.integers(1, 50), st.floats(1.05, 4.0))
    def test_properties(self, d, start, base):
        assume(start <= d)
        dims = sweep_dimensions(d, start, base)
        assert dims[-1] == d
        assert dims[0] == min(start, d)
        assert all(a < b for a, b in zip(dims, dims[1:]))


class TestSweep:
    def test_two_blob_sweep(self, tmp_path, blobs):
        config = blob_config(tmp_path, blobs)

        records = run_sweep(config)

        assert [r.reducer for r in records] == ["none"] + ["random_projection"] * 4
        assert [r.d_prime for r in records] == [20, 7, 11, 16, 20]
        assert all(not r.failed for r in records)
        assert all(r.accuracy.score == 1.0 for r in records)
        assert all(row.accuracy_ratio == 1.0 for row in ratio_table(records[0], records[1:]))
        assert all(r.tsne_seconds > 0 for r in records)

    def test_csv_and_embeddings_are_written(self, tmp_path, blobs):
        config = blob_config(tmp_path, blobs, reducers=["pca"], dims=[7])
        workflow = SweepWorkflow(config)

        records = workflow.run_sweep()

        rows = csv_rows(workflow.store.results_path, drop_timing=False)
        assert rows[0] == ["reducer", "d_prime", "seed", "tsne_seconds", "accuracy", "final_kl"]
        assert [row[:2] for row in rows[1:]] == [["none", "20"], ["pca", "7"]]
        assert [int(row[2]) for row in rows[1:]] == [derive_seed(0, "none", 20, 0), derive_seed(0, "pca", 7, 0)]
        coords, labels = load_raw(workflow.store.embedding_path("pca", 7, 0))
        assert coords.shape == (200, 2)
        assert labels.tolist() == [0] * 100 + [1] * 100
        assert workflow.store.get_metadata()["status"] == "completed"

        loaded = workflow.store.read_records()
        for before, after in zip(records, loaded):
            assert (after.reducer, after.d_prime, after.seed) == (before.reducer, before.d_prime, before.seed)
            assert after.tsne_seconds == before.tsne_seconds
            assert after.accuracy.score == before.accuracy.score
            assert after.final_kl == before.final_kl

    def test_baseline_only(self, tmp_path, blobs):
        config = blob_config(tmp_path, blobs, reducers=[])

        records = run_sweep(config)

        assert len(records) == 1
        assert len(csv_rows(tmp_path / "run" / "results.csv")) == 2

    def test_same_seed_same_csv_apart_from_timing(self, tmp_path, blobs):
        first = blob_config(tmp_path, blobs, out="a", dims=[7, 20], seed=5)
        second = blob_config(tmp_path, blobs, out="b", dims=[7, 20], seed=5)

        run_sweep(first, n_threads=1)
        run_sweep(second, n_threads=4)

        assert csv_rows(tmp_path / "a" / "results.csv") == csv_rows(tmp_path / "b" / "results.csv")

    def test_repeats_get_distinct_streams(self, tmp_path, blobs):
        config = blob_config(tmp_path, blobs, dims=[7], repeats=2, save_embeddings=False)

        records = run_sweep(config)

        assert [r.repeat for r in records] == [0, 0, 1]
        assert records[1].seed != records[2].seed

    def test_failed_run_is_recorded_and_sweep_continues(self, tmp_path, blobs, monkeypatch):
        config = blob_config(tmp_path, blobs, dims=[7, 11])
        workflow = SweepWorkflow(config)
        original = workflow.embed

        def flaky(X, y, reducer, d_prime, run_seed, tsne_seed):
            if d_prime == 7:
                raise FloatingPointError("diverged")
            return original(X, y, reducer, d_prime, run_seed, tsne_seed)

        monkeypatch.setattr(workflow, "embed", flaky)
        records = workflow.run_sweep()

        assert [r.failed for r in records] == [False, True, False]
        assert csv_rows(workflow.store.results_path, drop_timing=False)[2][3] == "error"
        assert workflow.store.get_metadata()["status"] == "completed_with_errors"
        assert find_baseline(workflow.store.read_records()) is not None

    def test_unlabelled_data(self, tmp_path):
        matrix = tmp_path / "x.f64"
        write_raw(str(matrix), np.random.default_rng(0).standard_normal((30, 8)))
        config = SweepConfig(dataset=DatasetSpec(format="raw_f64", matrix_path=str(matrix)),
                             out_dir=str(tmp_path / "run"), tsne=FAST_TSNE)
        with pytest.raises(DataError):
            run_sweep(config)

    def test_perplexity_must_fit_the_subsample(self, tmp_path, blobs):
        config = blob_config(tmp_path, blobs, tsne=TsneConfig(perplexity=500))
        with pytest.raises(ParameterError):
            run_sweep(config)

    def test_explicit_dimensions_above_d(self, tmp_path, blobs):
        config = blob_config(tmp_path, blobs, dims=[7, 64])
        with pytest.raises(ParameterError):
            run_sweep(config)
