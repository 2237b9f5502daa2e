import csv
import json

import pytest

from src.errors import FormatError
from src.models.records import CSV_COLUMNS, ERROR_MARKER, AccuracyReport, RunRecord
from src.utils.run_store import RunStore, find_baseline, read_results


def completed(reducer, d_prime, seed=3):
    return RunRecord(
        reducer=reducer,
        d_prime=d_prime,
        seed=seed,
        tsne_seconds=0.123456789,
        accuracy=AccuracyReport(score=0.875),
        final_kl=1.0 / 3.0,
    )


def test_rows_are_appended_as_runs_complete(tmp_path):
    store = RunStore(out_dir=str(tmp_path / "sweep"))
    store.start({"seed": 0}, (200, 20))
    store.append(completed("none", 20))
    store.append(RunRecord(reducer="random_projection", d_prime=7, seed=5, error="diverged"))

    with open(store.results_path, newline="") as f:
        rows = list(csv.reader(f))

    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][:3] == ["none", "20", "3"]
    assert rows[2] == ["random_projection", "7", "5", ERROR_MARKER, "", ""]

    metadata = store.get_metadata()
    assert metadata["status"] == "running"
    assert metadata["dataset_shape"] == [200, 20]
    assert metadata["prng"] == "splitmix64-v1"
    assert (metadata["completed_runs"], metadata["failed_runs"]) == (1, 1)


def test_records_round_trip_exactly(tmp_path):
    store = RunStore(out_dir=str(tmp_path))
    store.start({}, (10, 3))
    original = [completed("none", 3), completed("pca", 2, seed=2**63 + 1)]
    for record in original:
        store.append(record)

    loaded = store.read_records()

    for before, after in zip(original, loaded):
        assert after.reducer == before.reducer
        assert after.d_prime == before.d_prime
        assert after.seed == before.seed
        assert after.tsne_seconds == before.tsne_seconds
        assert after.accuracy.score == before.accuracy.score
        assert after.final_kl == before.final_kl


def test_finish_updates_status(tmp_path):
    store = RunStore(out_dir=str(tmp_path))
    store.start({}, (10, 3))
    store.finish("completed")
    with open(store.metadata_path) as f:
        metadata = json.load(f)
    assert metadata["status"] == "completed"
    assert metadata["finished_at"] is not None


def test_missing_metadata_reads_as_unknown(tmp_path):
    assert RunStore(out_dir=str(tmp_path)).get_metadata() == {"status": "unknown"}


def test_embedding_paths(tmp_path):
    path = RunStore(out_dir=str(tmp_path)).embedding_path("pca", 24, 1)
    assert path.endswith("embeddings/pca_d24_r1.f64")


def test_read_results_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_results(str(tmp_path / "missing.csv"))
    bad = tmp_path / "bad.csv"
    bad.write_text("reducer,d_prime\nnone,abc\n")
    with pytest.raises(FormatError):
        read_results(str(bad))


def test_find_baseline_skips_failed_rows():
    failed = RunRecord(reducer="none", d_prime=20, seed=1, error="x")
    good = completed("none", 20)
    assert find_baseline([completed("pca", 7), failed, good]) is good
    assert find_baseline([failed]) is None
