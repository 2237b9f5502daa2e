"""
Embedding quality score, stage timing and ratio tables
"""
import logging
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, TypeVar, Union

import numpy as np

from src.errors import DegenerateLabelsError, NumericError, ParameterError
from src.models.config import TsneConfig
from src.models.records import AccuracyReport, RatioRow, RunRecord
from src.reducers.random_projection import apply_projection, gaussian_projection
from src.tsne.engine import Embedding, TsneEngine
from src.utils.data_io import validate_labels, validate_matrix
from src.utils.parallel import map_blocks

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _block_neighbors(Y: np.ndarray, k: int, block: range) -> np.ndarray:
    rows = np.arange(block.start, block.stop)
    D = np.zeros((rows.size, Y.shape[0]))
    for c in range(Y.shape[1]):
        D += (Y[rows, c][:, None] - Y[None, :, c]) ** 2
    D[np.arange(rows.size), rows] = np.inf
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def modal_label(neighbor_labels: np.ndarray) -> tuple[int, bool]:
    """Most frequent label, smallest on ties; second value tells whether a tie occurred"""
    values, counts = np.unique(neighbor_labels, return_counts=True)
    best = int(np.argmax(counts))
    return int(values[best]), bool(np.count_nonzero(counts == counts[best]) > 1)


def accuracy_score(
    Y: Union[Embedding, np.ndarray],
    labels: np.ndarray,
    k: int = 1,
    n_threads: int = 1
) -> AccuracyReport:
    """
    Fraction of points whose k nearest neighbours vote for their own label

    Neighbours are found by exact scan in Euclidean distance, never include the
    point itself, and ties in distance go to the smaller index.

    Args:
        Y: Embedding or N x m coordinates
        labels: Integer label per point
        k: Neighbours per vote
        n_threads: Worker threads for the neighbour scan

    Returns:
        AccuracyReport with overall and per-class scores
    """
    coords = validate_matrix(Y.coords if isinstance(Y, Embedding) else Y)
    n = coords.shape[0]
    y = validate_labels(labels, n)
    if not 1 <= k < n:
        raise ParameterError(f"k must satisfy 1 <= k < N={n}, got {k}")
    classes = np.unique(y)
    if classes.size < 2:
        raise DegenerateLabelsError(f"Need at least 2 distinct labels, got {classes.tolist()}")

    neighbors = np.vstack(map_blocks(lambda block: _block_neighbors(coords, k, block), n, n_threads))

    if k == 1:
        predicted = y[neighbors[:, 0]]
        ties = 0
    else:
        votes = [modal_label(y[row]) for row in neighbors]
        predicted = np.array([label for label, _ in votes], dtype=y.dtype)
        ties = sum(tie for _, tie in votes)

    correct = predicted == y
    per_class = {}
    counts = {}
    for label in classes:
        members = y == label
        counts[int(label)] = int(members.sum())
        per_class[int(label)] = float(correct[members].mean())

    report = AccuracyReport(
        k=k,
        score=float(correct.mean()),
        per_class_scores=per_class,
        class_counts=counts,
        tie_count=ties,
    )
    logger.debug(f"Accuracy (k={k}) on {n} points: {report.score:.4f}, {ties} modal ties")
    return report


def time_stage(action: Callable[[], T]) -> tuple[T, float]:
    """
    Run ``action`` and measure its monotonic wall-clock time

    Returns:
        Tuple of (action result, seconds)
    """
    start = time.perf_counter()
    result = action()
    return result, time.perf_counter() - start


def ratio_table(baseline: RunRecord, runs: Iterable[RunRecord]) -> list[RatioRow]:
    """
    Time and accuracy of each run relative to the unreduced baseline

    Failed runs have no ratios and are left out.

    Args:
        baseline: The reducer="none" run
        runs: Runs on the same dataset

    Returns:
        RatioRows sorted by d_prime (then reducer)
    """
    if baseline.reducer != "none":
        raise ParameterError(f"Baseline must be unreduced, got reducer '{baseline.reducer}'")
    if baseline.failed:
        raise ParameterError("Baseline run failed; ratios are undefined")
    if baseline.accuracy.score == 0:
        raise NumericError("Baseline accuracy is 0; accuracy ratio is undefined")

    rows = []
    for run in runs:
        if run.failed:
            logger.warning(f"Skipping failed run {run.reducer} d'={run.d_prime} seed={run.seed}")
            continue
        rows.append(RatioRow(
            d_prime=run.d_prime,
            time_ratio=run.tsne_seconds / baseline.tsne_seconds,
            accuracy_ratio=run.accuracy.score / baseline.accuracy.score,
            reducer=run.reducer,
        ))
    return sorted(rows, key=lambda r: (r.d_prime, r.reducer))


def average_repeats(table: list[RatioRow]) -> list[RatioRow]:
    """Mean time and accuracy ratio per (reducer, d_prime)"""
    groups: dict[tuple[str, int], list[RatioRow]] = {}
    for row in table:
        groups.setdefault((row.reducer, row.d_prime), []).append(row)
    averaged = [
        RatioRow(
            d_prime=d_prime,
            reducer=reducer,
            time_ratio=float(np.mean([r.time_ratio for r in rows])),
            accuracy_ratio=float(np.mean([r.accuracy_ratio for r in rows])),
        )
        for (reducer, d_prime), rows in groups.items()
    ]
    return sorted(averaged, key=lambda r: (r.d_prime, r.reducer))


@dataclass(frozen=True)
class StageTiming:
    d_prime: int
    distance_seconds: float
    calibration_seconds: float


def measure_affinity_scaling(
    X: np.ndarray,
    dims: list[int],
    config: Optional[TsneConfig] = None,
    seed: int = 0,
    repeats: int = 3
) -> list[StageTiming]:
    """
    Time the exact affinity stage on random projections of the same data

    Each dimension keeps the fastest of ``repeats`` runs; the full dimension d
    uses X itself.

    Args:
        X: N x d DataMatrix
        dims: Dimensions to measure, each <= d
        config: t-SNE settings (theta is forced to 0)
        seed: Projection seed
        repeats: Timings per dimension

    Returns:
        One StageTiming per dimension, in input order
    """
    X = validate_matrix(X)
    d = X.shape[1]
    config = (config or TsneConfig()).model_copy(update={"theta": 0.0})
    engine = TsneEngine(config)

    timings = []
    for d_prime in dims:
        if d_prime > d:
            raise ParameterError(f"d'={d_prime} exceeds d={d}")
        data = X if d_prime == d else apply_projection(X, gaussian_projection(d, d_prime, seed))
        stages = [engine.affinity_stage(data) for _ in range(max(1, repeats))]
        timing = StageTiming(
            d_prime=d_prime,
            distance_seconds=min(s.distance_seconds for s in stages),
            calibration_seconds=min(s.calibration_seconds for s in stages),
        )
        logger.info(
            f"d'={d_prime}: distances {timing.distance_seconds:.4f}s, "
            f"calibration {timing.calibration_seconds:.4f}s"
        )
        timings.append(timing)
    return timings
