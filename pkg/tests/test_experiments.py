"""
Desk-scale reproductions of the sweep trends; run with ``pytest -m slow``
"""
import numpy as np
import pytest

from src.evaluation import measure_affinity_scaling, ratio_table
from src.models.config import DatasetSpec, SweepConfig, TsneConfig
from src.utils.data_io import load_dataset, write_raw
from src.workflow import SweepWorkflow

pytestmark = pytest.mark.slow

MNIST_DIMS = [7, 11, 16, 24, 35, 53, 80, 120, 179, 269, 404, 605, 784]


def _idx_spec(directory, size=2000):
    for suffix in ("", ".gz"):
        images = directory / f"train-images-idx3-ubyte{suffix}"
        labels = directory / f"train-labels-idx1-ubyte{suffix}"
        if images.exists() and labels.exists():
            return DatasetSpec(format="idx", images_path=str(images), labels_path=str(labels), subsample_size=size)
    pytest.skip(f"No MNIST training pair in {directory}")


@pytest.fixture(scope="module")
def mnist_sweep(mnist_dir, tmp_path_factory):
    config = SweepConfig(dataset=_idx_spec(mnist_dir), out_dir=str(tmp_path_factory.mktemp("mnist")))
    workflow = SweepWorkflow(config)
    records = workflow.run_sweep()
    X, y = load_dataset(config.dataset)
    pca = workflow.run_single(X, y, "pca", 25)
    return records[0], records[1:], pca


def test_sweep_uses_the_mnist_dimensions(mnist_sweep):
    _, runs, _ = mnist_sweep
    assert [r.d_prime for r in runs] == MNIST_DIMS
    assert not any(r.failed for r in runs)


def test_accuracy_ratio_recovers_from_moderate_dimensions(mnist_sweep):
    baseline, runs, _ = mnist_sweep
    rows = {row.d_prime: row for row in ratio_table(baseline, runs)}
    for d_prime in MNIST_DIMS[MNIST_DIMS.index(53):]:
        assert 0.90 <= rows[d_prime].accuracy_ratio <= 1.10, d_prime


def test_accuracy_ratio_rises_over_small_dimensions(mnist_sweep):
    baseline, runs, _ = mnist_sweep
    ratios = [row.accuracy_ratio for row in ratio_table(baseline, runs) if row.d_prime <= 53]
    smoothed = np.convolve(ratios, np.ones(3) / 3, mode="valid")
    # seeded t-SNE runs still jitter by a fraction of a point
    assert (np.diff(smoothed) >= -0.005).all(), smoothed


def test_reduced_runs_are_faster(mnist_sweep):
    _, runs, _ = mnist_sweep
    seconds = {r.d_prime: r.tsne_seconds for r in runs}
    assert seconds[53] < seconds[784]


def test_full_dimension_projection_matches_baseline(mnist_sweep):
    baseline, runs, _ = mnist_sweep
    full = ratio_table(baseline, runs)[-1]
    assert full.d_prime == 784
    assert 0.97 <= full.accuracy_ratio <= 1.03
    assert 0.8 <= full.time_ratio <= 1.2


def test_pca_needs_few_dimensions(mnist_sweep):
    baseline, _, pca = mnist_sweep
    assert not pca.failed
    assert ratio_table(baseline, [pca])[0].accuracy_ratio >= 0.90


def test_distance_stage_scales_with_dimension():
    X = np.random.default_rng(7).standard_normal((1000, 784))
    timings = {t.d_prime: t for t in measure_affinity_scaling(X, [50, 784], TsneConfig(), seed=3, repeats=3)}
    assert timings[50].distance_seconds / timings[784].distance_seconds <= 0.5


def test_sweep_csv_independent_of_worker_count(tmp_path, blobs):
    X, y = blobs(300, 100, separation=8.0)
    matrix = tmp_path / "blobs.f64"
    write_raw(str(matrix), X, labels=y)

    def sweep(out, threads):
        config = SweepConfig(
            dataset=DatasetSpec(format="raw_f64", matrix_path=str(matrix)),
            reducers=["random_projection", "pca"],
            out_dir=str(tmp_path / out),
            tsne=TsneConfig(theta=0.5, n_iter=300),
        )
        SweepWorkflow(config, n_threads=threads).run_sweep()
        with open(tmp_path / out / "results.csv") as f:
            return [line.split(",")[:3] + line.split(",")[4:] for line in f]

    assert sweep("one", 1) == sweep("four", 4)
