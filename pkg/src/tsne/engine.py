"""
t-SNE optimizer: affinity stage plus gain-adjusted momentum gradient descent
"""
import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from src.errors import EmbeddingDivergedError, ParameterError
from src.models.config import TsneConfig
from src.tsne.affinities import (
    AffinityMatrix,
    joint_affinities_from_distances,
    neighbor_affinities_from_distances,
    squared_distances,
)
from src.tsne.objective import exact_terms, kl_divergence
from src.tsne.quadtree import barnes_hut_terms, sparse_kl_divergence
from src.utils.data_io import validate_matrix, write_raw
from src.utils.rng import SplitMix64

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("iteration", "kl", "grad_norm")


@dataclass(frozen=True)
class Embedding:
    """N x m output coordinates"""

    coords: np.ndarray

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return self.coords.shape[1]

    def save(self, path: str, labels: Optional[np.ndarray] = None) -> str:
        """Write as raw_f64 + sidecar; returns the sidecar path"""
        return write_raw(path, self.coords, labels=labels, extra={"kind": "embedding"})


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    kl: float
    grad_norm: float


@dataclass
class OptimizerTrace:
    """KL and gradient norm at recorded iterations, plus stage timings"""

    records: list[TraceRecord] = field(default_factory=list)
    affinity_seconds: float = 0.0
    optimization_seconds: float = 0.0
    converged: bool = False
    stop_iteration: int = 0

    @property
    def seconds(self) -> float:
        return self.affinity_seconds + self.optimization_seconds

    @property
    def initial_kl(self) -> float:
        return self.records[0].kl

    @property
    def final_kl(self) -> float:
        return self.records[-1].kl

    def save(self, path: str) -> str:
        """Write the records as CSV with columns iteration,kl,grad_norm"""
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(TRACE_COLUMNS)
            for r in self.records:
                writer.writerow([r.iteration, repr(r.kl), repr(r.grad_norm)])
        return path


@dataclass(frozen=True)
class AffinityStage:
    """Input affinities and how long their two parts took"""

    P: AffinityMatrix
    distance_seconds: float
    calibration_seconds: float

    @property
    def seconds(self) -> float:
        return self.distance_seconds + self.calibration_seconds


class TsneEngine:
    """
    Runs t-SNE with a fixed configuration

    The engine holds no per-run state; every call to ``fit`` owns its own
    embedding, velocity and gains.
    """

    def __init__(self, config: Optional[TsneConfig] = None, n_threads: Optional[int] = None):
        """
        Initialize engine

        Args:
            config: Optimization and calibration settings (defaults if omitted)
            n_threads: Overrides config.n_threads
        """
        config = config or TsneConfig()
        if n_threads is not None:
            config = config.model_copy(update={"n_threads": n_threads})
        self.config = config

    def affinity_stage(self, X: np.ndarray) -> AffinityStage:
        """
        Compute P, timing the distance and calibration parts separately

        Exact mode (theta = 0) builds dense P; otherwise P keeps only each
        point's nearest neighbours.
        """
        X = validate_matrix(X)
        n = X.shape[0]
        if self.config.perplexity >= n:
            raise ParameterError(f"Perplexity {self.config.perplexity} must be below N={n}")

        start = time.perf_counter()
        D = squared_distances(X)
        distance_seconds = time.perf_counter() - start

        start = time.perf_counter()
        if self.config.exact:
            P = joint_affinities_from_distances(D, self.config)
        else:
            P = neighbor_affinities_from_distances(D, self.config)
        calibration_seconds = time.perf_counter() - start

        logger.debug(f"Affinity stage: distances {distance_seconds:.4f}s, calibration {calibration_seconds:.4f}s")
        return AffinityStage(P=P, distance_seconds=distance_seconds, calibration_seconds=calibration_seconds)

    def _terms(self, P_entries, Y: np.ndarray, exaggeration: float) -> tuple[np.ndarray, object]:
        if self.config.exact:
            return exact_terms(exaggeration * P_entries, Y)
        return barnes_hut_terms(exaggeration * P_entries, Y, self.config.theta, self.config.n_threads)

    def _kl(self, P: AffinityMatrix, Y: np.ndarray, normalizer) -> float:
        if self.config.exact:
            return kl_divergence(P, normalizer, self.config.min_prob_floor)
        return sparse_kl_divergence(P, Y, normalizer, self.config.min_prob_floor)

    def initial_embedding(self, n: int) -> np.ndarray:
        """i.i.d. N(0, init_scale^2) coordinates from the seeded stream"""
        return SplitMix64(self.config.seed).normal(self.config.init_scale, (n, self.config.n_components))

    def optimize(self, P: AffinityMatrix, Y0: Optional[np.ndarray] = None) -> tuple[Embedding, OptimizerTrace]:
        """
        Minimize KL(P || Q) by gradient descent

        Args:
            P: Input affinities
            Y0: Starting embedding (seeded Gaussian if omitted)

        Returns:
            Tuple of (Embedding, OptimizerTrace without affinity timing)
        """
        cfg = self.config
        n = P.n
        Y = self.initial_embedding(n) if Y0 is None else np.array(Y0, dtype=np.float64)
        update = np.zeros_like(Y)
        gains = np.ones_like(Y)
        trace = OptimizerTrace()

        start = time.perf_counter()
        iteration = 0
        for iteration in range(cfg.n_iter):
            exaggeration = cfg.early_exaggeration_factor if iteration < cfg.early_exaggeration_iters else 1.0
            grad, normalizer = self._terms(P.entries, Y, exaggeration)
            grad_norm = float(np.linalg.norm(grad))
            if not np.isfinite(grad_norm):
                logger.error(f"Gradient became non-finite at iteration {iteration}")
                raise EmbeddingDivergedError(f"Non-finite gradient at iteration {iteration}", iteration=iteration)

            if iteration % cfg.trace_every == 0:
                kl = self._kl(P, Y, normalizer)
                trace.records.append(TraceRecord(iteration, kl, grad_norm))
                logger.info(f"Iteration {iteration}: KL {kl:.6f}, gradient norm {grad_norm:.3e}")

            momentum = cfg.momentum_initial if iteration < cfg.momentum_switch_iter else cfg.momentum_final
            disagree = update * grad < 0.0
            gains = np.where(disagree, gains + 0.2, gains * 0.8)
            np.maximum(gains, cfg.min_gain, out=gains)
            update = momentum * update - cfg.learning_rate * gains * grad
            Y = Y + update
            Y -= Y.mean(axis=0)

            if not np.isfinite(Y).all():
                logger.error(f"Embedding diverged at iteration {iteration}")
                raise EmbeddingDivergedError(f"NaN in embedding at iteration {iteration}", iteration=iteration)

            if iteration >= cfg.early_exaggeration_iters and grad_norm < cfg.min_grad_norm:
                trace.converged = True
                logger.info(f"Gradient norm below {cfg.min_grad_norm:g} at iteration {iteration}; stopping")
                break
        else:
            iteration = cfg.n_iter

        stop = iteration + 1 if trace.converged else iteration
        grad, normalizer = self._terms(P.entries, Y, 1.0)
        trace.records.append(TraceRecord(stop, self._kl(P, Y, normalizer), float(np.linalg.norm(grad))))
        trace.stop_iteration = stop
        trace.optimization_seconds = time.perf_counter() - start
        return Embedding(coords=Y), trace

    def fit(self, X: np.ndarray) -> tuple[Embedding, OptimizerTrace]:
        """
        Embed X in two dimensions

        Args:
            X: N x d DataMatrix, N >= 4

        Returns:
            Tuple of (Embedding, OptimizerTrace)
        """
        X = validate_matrix(X)
        if X.shape[0] < 4:
            raise ParameterError(f"t-SNE needs at least 4 points, got {X.shape[0]}")
        mode = "exact" if self.config.exact else f"Barnes-Hut (theta={self.config.theta})"
        logger.info(f"Running {mode} t-SNE on {X.shape[0]} x {X.shape[1]} data")

        stage = self.affinity_stage(X)
        embedding, trace = self.optimize(stage.P)
        trace.affinity_seconds = stage.seconds
        logger.info(
            f"t-SNE finished after {trace.stop_iteration} iterations in {trace.seconds:.2f}s "
            f"(KL {trace.initial_kl:.4f} -> {trace.final_kl:.4f})"
        )
        return embedding, trace


def run_tsne(X: np.ndarray, config: Optional[TsneConfig] = None) -> tuple[Embedding, OptimizerTrace]:
    """Embed X with a fresh TsneEngine"""
    return TsneEngine(config).fit(X)
