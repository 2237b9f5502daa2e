"""
Gaussian random projections and Johnson-Lindenstrauss distortion audits
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.errors import DataError, ParameterError
from src.models.records import JlAudit
from src.utils.data_io import load_raw, read_sidecar, write_raw
from src.utils.rng import SplitMix64

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProjectionMatrix:
    """d x d_prime matrix with i.i.d. N(0, 1/d) entries"""

    d: int
    d_prime: int
    entries: np.ndarray
    seed: int

    @property
    def distance_scale(self) -> float:
        """Expected ratio of projected to original squared distances (d'/d)"""
        return self.d_prime / self.d

    def save(self, path: str) -> str:
        """Cache the matrix as raw_f64 + sidecar; returns the sidecar path"""
        return write_raw(path, self.entries, extra={"seed": self.seed, "kind": "random_projection"})

    @classmethod
    def load(cls, path: str) -> "ProjectionMatrix":
        entries, _ = load_raw(path)
        meta = read_sidecar(f"{path}.meta")
        seed = int(meta["extra"].get("seed") or 0)
        return cls(d=entries.shape[0], d_prime=entries.shape[1], entries=entries, seed=seed)


def gaussian_projection(d: int, d_prime: int, seed: int) -> ProjectionMatrix:
    """
    Draw a Gaussian projection matrix

    Entries are filled row-major from the splitmix64 stream ``seed`` through
    Box-Muller, then scaled by 1/sqrt(d) so each has variance 1/d.

    Args:
        d: Input dimension
        d_prime: Output dimension, 1 <= d_prime <= d
        seed: Generator seed

    Returns:
        ProjectionMatrix
    """
    if d < 1 or not 1 <= d_prime <= d:
        raise ParameterError(f"Projection needs 1 <= d_prime <= d, got d={d}, d_prime={d_prime}")
    entries = SplitMix64(seed).normal(1.0 / math.sqrt(d), (d, d_prime))
    entries.setflags(write=False)
    return ProjectionMatrix(d=d, d_prime=d_prime, entries=entries, seed=seed)


def apply_projection(X: np.ndarray, R: ProjectionMatrix) -> np.ndarray:
    """
    Project every row of X

    Args:
        X: N x d DataMatrix
        R: ProjectionMatrix with R.d == d

    Returns:
        N x d_prime matrix X @ R
    """
    if X.ndim != 2 or X.shape[1] != R.d:
        raise ParameterError(f"Cannot project {X.shape} with a {R.d}x{R.d_prime} matrix")
    return X @ R.entries


def jl_min_dimension(n_points: int, epsilon: float) -> int:
    """
    Smallest k for which the classical JL bound guarantees (1 +- eps) distortion

    k >= 4 ln(n) / (eps^2/2 - eps^3/3)
    """
    if n_points < 2:
        raise ParameterError("Need at least 2 points")
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    return int(math.ceil(4.0 * math.log(n_points) / (epsilon ** 2 / 2 - epsilon ** 3 / 3)))


def _sample_pairs(n: int, pair_budget: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    total = n * (n - 1) // 2
    if pair_budget >= total:
        return np.triu_indices(n, k=1)
    draws = SplitMix64(seed).uint64s(2 * pair_budget)
    i = (draws[0::2] % np.uint64(n)).astype(np.int64)
    j = (draws[1::2] % np.uint64(n - 1)).astype(np.int64)
    j = j + (j >= i)
    return i, j


def jl_audit(
    X: np.ndarray,
    X_proj: np.ndarray,
    epsilon: float,
    pair_budget: int,
    seed: int,
    expected_scale: float = 1.0
) -> JlAudit:
    """
    Measure squared-distance distortion between X and its reduction

    Each audited pair contributes ratio = |x'_i - x'_j|^2 / (expected_scale * |x_i - x_j|^2).
    Use expected_scale = d'/d for N(0, 1/d) projections. Pairs with zero
    original distance are skipped and counted.

    Args:
        X: Original N x d matrix
        X_proj: Reduced N x d' matrix
        epsilon: Target distortion in (0, 1)
        pair_budget: Maximum pairs to audit; all pairs when it covers them
        seed: Seed for pair sampling
        expected_scale: Normalization of the ratio

    Returns:
        JlAudit
    """
    if X.shape[0] != X_proj.shape[0]:
        raise DataError(f"Row counts differ: {X.shape[0]} vs {X_proj.shape[0]}")
    if X.shape[0] < 2:
        raise DataError("Need at least 2 rows")
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")

    i, j = _sample_pairs(X.shape[0], pair_budget, seed)
    original = np.sum((X[i] - X[j]) ** 2, axis=1)
    projected = np.sum((X_proj[i] - X_proj[j]) ** 2, axis=1)

    keep = original > 0
    skipped = int(np.count_nonzero(~keep))
    ratio = projected[keep] / (expected_scale * original[keep])
    deviation = np.abs(ratio - 1.0)

    audit = JlAudit(
        epsilon=epsilon,
        pair_count=int(ratio.size),
        skipped_pairs=skipped,
        max_distortion=float(deviation.max()) if ratio.size else 0.0,
        fraction_within=float(np.mean(deviation <= epsilon)) if ratio.size else 1.0,
    )
    logger.info(
        f"JL audit: {audit.pair_count} pairs, {audit.fraction_within:.4f} within eps={epsilon}, "
        f"max distortion {audit.max_distortion:.4f}"
    )
    return audit
