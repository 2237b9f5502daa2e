"""
Sweep orchestrator: baseline plus reduced t-SNE runs over a range of dimensions
"""
import logging
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.errors import DataError, ParameterError
from src.evaluation import accuracy_score, time_stage
from src.models.config import SweepConfig
from src.models.records import AccuracyReport, RunRecord
from src.reducers.base import make_reducer
from src.tsne.engine import Embedding, OptimizerTrace, TsneEngine
from src.utils.data_io import load_dataset
from src.utils.rng import derive_seed
from src.utils.run_store import RunStore

logging.basicConfig(
    level=os.getenv("LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def _round_half_away(value: float) -> int:
    return int(math.floor(abs(value) + 0.5)) * (1 if value >= 0 else -1)


def sweep_dimensions(d: int, dim_start: int = 7, dim_base: float = 1.5) -> list[int]:
    """
    Exponentially spaced target dimensions from dim_start up to d

    Values round(dim_start * dim_base**t) for t = 0, 1, ... while below d
    (rounding half away from zero), then d itself.

    Args:
        d: Original dimension
        dim_start: First value, at most d
        dim_base: Growth factor, > 1

    Returns:
        Strictly increasing list ending in d
    """
    if dim_base <= 1:
        raise ParameterError(f"dim_base must exceed 1, got {dim_base}")
    if dim_start < 1:
        raise ParameterError(f"dim_start must be at least 1, got {dim_start}")
    if dim_start > d:
        raise ParameterError(f"dim_start {dim_start} exceeds d={d}")

    dims = set()
    t = 0
    while True:
        value = _round_half_away(dim_start * dim_base ** t)
        if value >= d:
            break
        dims.add(value)
        t += 1
    dims.add(d)
    return sorted(dims)


@dataclass
class EmbedResult:
    """One reduce -> t-SNE -> score pass"""

    embedding: Embedding
    trace: OptimizerTrace
    accuracy: Optional[AccuracyReport]
    tsne_seconds: float
    d_prime: int


class SweepWorkflow:
    """
    Orchestrates a dimension sweep:
    1. Load and subsample the dataset
    2. Run unreduced t-SNE once as the baseline
    3. For each reducer and swept d', reduce then run t-SNE (timed alone)
    4. Score each embedding and append the row to results.csv
    """

    def __init__(self, config: SweepConfig, n_threads: Optional[int] = None):
        """
        Initialize workflow

        Args:
            config: Sweep configuration
            n_threads: Overrides config.tsne.n_threads
        """
        if n_threads is not None:
            config = config.model_copy(update={"tsne": config.tsne.model_copy(update={"n_threads": n_threads})})
        self.config = config
        self.store = RunStore(out_dir=config.out_dir)

        logger.info(f"Initialized SweepWorkflow (master seed {config.seed}, output {config.out_dir})")

    def dimensions(self, d: int) -> list[int]:
        """Swept d' values: the explicit list when given, else the geometric sweep"""
        if self.config.dims is None:
            return sweep_dimensions(d, self.config.dim_start, self.config.dim_base)
        too_large = [v for v in self.config.dims if v > d]
        if too_large:
            raise ParameterError(f"Requested dimensions {too_large} exceed d={d}")
        return sorted(set(self.config.dims))

    def tsne_seed(self, repeat: int) -> int:
        """Initial-embedding seed; shared by every reducer so runs differ only by their input"""
        return derive_seed(self.config.seed, "tsne", repeat)

    def embed(
        self,
        X: np.ndarray,
        y: Optional[np.ndarray],
        reducer: str,
        d_prime: Optional[int],
        run_seed: int,
        tsne_seed: int
    ) -> EmbedResult:
        """
        Reduce X, run t-SNE on the result and score it

        Only the t-SNE stage is timed; reduction and scoring are excluded.

        Args:
            X: N x d DataMatrix
            y: Labels (scoring is skipped when None)
            reducer: "none", "random_projection" or "pca"
            d_prime: Target dimension (ignored for "none")
            run_seed: Projection seed
            tsne_seed: Initial-embedding seed

        Returns:
            EmbedResult
        """
        reduction = make_reducer(reducer, d_prime, seed=run_seed)
        X_reduced = reduction.fit_transform(X)

        engine = TsneEngine(self.config.tsne.model_copy(update={"seed": tsne_seed}))
        (embedding, trace), seconds = time_stage(lambda: engine.fit(X_reduced))

        accuracy = None
        if y is not None:
            accuracy = accuracy_score(embedding, y, k=self.config.k, n_threads=self.config.tsne.n_threads)
        return EmbedResult(
            embedding=embedding,
            trace=trace,
            accuracy=accuracy,
            tsne_seconds=seconds,
            d_prime=X_reduced.shape[1],
        )

    def run_single(self, X: np.ndarray, y: np.ndarray, reducer: str, d_prime: int, repeat: int = 0) -> RunRecord:
        """
        One sweep run, recorded even when it fails

        Args:
            X: N x d DataMatrix
            y: Labels
            reducer: Reducer kind
            d_prime: Target dimension (d for the baseline)
            repeat: Repeat index

        Returns:
            RunRecord (with ``error`` set on failure)
        """
        run_seed = derive_seed(self.config.seed, reducer, d_prime, repeat)
        logger.info(f"=== {reducer} d'={d_prime} repeat {repeat} ===")
        try:
            result = self.embed(X, y, reducer, d_prime, run_seed, self.tsne_seed(repeat))
            record = RunRecord(
                reducer=reducer,
                d_prime=result.d_prime,
                seed=run_seed,
                repeat=repeat,
                tsne_seconds=result.tsne_seconds,
                accuracy=result.accuracy,
                final_kl=result.trace.final_kl,
            )
            if self.config.save_embeddings:
                result.embedding.save(self.store.embedding_path(reducer, d_prime, repeat), labels=y)
            logger.info(
                f"{reducer} d'={d_prime}: t-SNE {result.tsne_seconds:.2f}s, "
                f"accuracy {result.accuracy.score:.4f}, KL {result.trace.final_kl:.4f}"
            )
        except Exception as e:
            logger.warning(f"Run {reducer} d'={d_prime} repeat {repeat} failed: {str(e)}")
            record = RunRecord(reducer=reducer, d_prime=d_prime, seed=run_seed, repeat=repeat, error=str(e))

        self.store.append(record)
        return record

    def run_sweep(self) -> list[RunRecord]:
        """
        Run the baseline and every (reducer, d', repeat) combination

        Rows are appended to results.csv as they complete.

        Returns:
            RunRecords in execution order, baseline first
        """
        X, y = load_dataset(self.config.dataset)
        if y is None:
            raise DataError("A sweep needs labelled data for the accuracy score")
        n, d = X.shape
        if self.config.tsne.perplexity >= n:
            raise ParameterError(f"Perplexity {self.config.tsne.perplexity} must be below N={n}")
        if self.config.k >= n:
            raise ParameterError(f"k={self.config.k} must be below N={n}")

        dims = self.dimensions(d) if self.config.reducers else []
        logger.info(f"Sweeping {self.config.reducers or ['baseline only']} over d' = {dims} on {n}x{d} data")

        self.store.start(self.config.model_dump(mode="json"), (n, d))
        records = [self.run_single(X, y, "none", d)]
        try:
            for reducer in self.config.reducers:
                for d_prime in dims:
                    for repeat in range(self.config.repeats):
                        records.append(self.run_single(X, y, reducer, d_prime, repeat))
        except BaseException:
            self.store.finish("interrupted")
            raise

        failed = sum(r.failed for r in records)
        self.store.finish("completed" if not failed else "completed_with_errors")
        logger.info(f"Sweep finished: {len(records) - failed} runs completed, {failed} failed")
        return records


def run_sweep(config: SweepConfig, n_threads: Optional[int] = None) -> list[RunRecord]:
    """Run a full sweep with a fresh SweepWorkflow"""
    return SweepWorkflow(config, n_threads=n_threads).run_sweep()
