"""
Input-space affinities: squared distances, perplexity calibration, joint P
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import sparse

from src.errors import NonFiniteError, ParameterError
from src.models.config import TsneConfig
from src.utils.parallel import map_blocks

logger = logging.getLogger(__name__)

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class ConditionalRow:
    """p_{j|i} for one anchor; ``i`` is -1 when the row was calibrated without one"""

    i: int
    probabilities: np.ndarray
    sigma: float
    beta: float
    perplexity: float
    duplicate: bool = False
    iterations: int = 0


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric joint probabilities P, dense or CSR"""

    n: int
    entries: Union[np.ndarray, sparse.csr_matrix]
    betas: np.ndarray
    duplicate_rows: int = 0

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.entries)

    def dense(self) -> np.ndarray:
        return self.entries.toarray() if self.is_sparse else self.entries

    def total(self) -> float:
        return float(self.entries.sum())


def squared_distances(X: np.ndarray) -> np.ndarray:
    """
    Pairwise squared Euclidean distances

    Uses |a|^2 + |b|^2 - 2 a.b, clamps round-off negatives to 0, symmetrizes
    and zeroes the diagonal.

    Args:
        X: N x d matrix, N >= 2

    Returns:
        N x N symmetric matrix with zero diagonal
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ParameterError(f"Need an N x d matrix with N >= 2, got shape {X.shape}")
    finite_rows = np.isfinite(X).all(axis=1)
    if not finite_rows.all():
        row = int(np.argmin(finite_rows))
        raise NonFiniteError(f"Non-finite value in row {row}", row=row)

    sq_norms = np.einsum("ij,ij->i", X, X)
    D = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def _gibbs(shifted: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    weights = np.exp(-beta * shifted)
    total = weights.sum()
    entropy = math.log(total) + beta * float(shifted @ weights) / total
    return entropy, weights / total


def row_entropy(distances: np.ndarray, beta: float) -> float:
    """Entropy in bits of the Gibbs distribution exp(-beta * d) over ``distances``"""
    shifted = np.asarray(distances, dtype=np.float64)
    shifted = shifted - shifted.min()
    entropy, _ = _gibbs(shifted, beta)
    return entropy / _LN2


def calibrate_row(
    distances_row: np.ndarray,
    perplexity: float,
    tol: float = 1e-5,
    max_iter: int = 50,
    anchor: Optional[int] = None
) -> ConditionalRow:
    """
    Find the precision beta = 1/(2 sigma^2) whose conditional row hits the perplexity

    p_{j|i} is proportional to exp(-beta * d_ij). The search starts at
    beta = 1/mean(d - min d), doubles or halves until the target entropy is
    bracketed, then bisects; ``max_iter`` bounds all steps together.

    Args:
        distances_row: Squared distances from the anchor (full row or neighbour list)
        perplexity: Target perplexity
        tol: Allowed |log2(achieved) - log2(target)|
        max_iter: Step budget
        anchor: Index of the anchor inside ``distances_row`` (its probability is 0)

    Returns:
        ConditionalRow over the same positions as ``distances_row``
    """
    row = np.asarray(distances_row, dtype=np.float64)
    mask = np.ones(row.shape[0], dtype=bool)
    if anchor is not None:
        mask[anchor] = False
    others = row[mask]
    if others.size < 2:
        raise ParameterError("Calibration needs at least 2 entries besides the anchor")
    if not 0 < perplexity <= others.size:
        raise ParameterError(f"Perplexity {perplexity} must lie in (0, {others.size}]")

    probabilities = np.zeros_like(row)
    index = -1 if anchor is None else anchor

    if not others.any():
        probabilities[mask] = 1.0 / others.size
        return ConditionalRow(
            i=index, probabilities=probabilities, sigma=0.0, beta=math.inf,
            perplexity=float(others.size), duplicate=True,
        )

    shifted = others - others.min()
    target = math.log2(perplexity)
    spread = shifted.mean()
    beta = 1.0 / spread if spread > 0 else 1.0
    beta_lo, beta_hi = 0.0, math.inf

    entropy, p = _gibbs(shifted, beta)
    steps = 0
    while abs(entropy / _LN2 - target) > tol and steps < max_iter:
        if entropy / _LN2 > target:
            beta_lo = beta
            beta = beta * 2.0 if beta_hi == math.inf else 0.5 * (beta + beta_hi)
        else:
            beta_hi = beta
            beta = beta / 2.0 if beta_lo == 0.0 else 0.5 * (beta + beta_lo)
        entropy, p = _gibbs(shifted, beta)
        steps += 1

    probabilities[mask] = p
    return ConditionalRow(
        i=index,
        probabilities=probabilities,
        sigma=math.sqrt(1.0 / (2.0 * beta)),
        beta=beta,
        perplexity=2.0 ** (entropy / _LN2),
        iterations=steps,
    )


def _check_perplexity(n: int, config: TsneConfig):
    if n < 3:
        raise ParameterError(f"Affinities need at least 3 points, got {n}")
    if config.perplexity >= n:
        raise ParameterError(f"Perplexity {config.perplexity} must be below N={n}")


def joint_affinities(X: np.ndarray, config: TsneConfig) -> AffinityMatrix:
    """
    Dense joint probabilities P_ij = (p_{i|j} + p_{j|i}) / 2N

    Args:
        X: N x d DataMatrix
        config: Perplexity and calibration settings

    Returns:
        Dense AffinityMatrix (exactly symmetric, sums to 1, zero diagonal)
    """
    n = X.shape[0]
    _check_perplexity(n, config)
    D = squared_distances(X)
    return joint_affinities_from_distances(D, config)


def joint_affinities_from_distances(D: np.ndarray, config: TsneConfig) -> AffinityMatrix:
    """Dense P from a precomputed squared-distance matrix"""
    n = D.shape[0]
    _check_perplexity(n, config)

    def calibrate_block(block: range) -> list[ConditionalRow]:
        return [
            calibrate_row(D[i], config.perplexity, config.calibration_tol, config.calibration_max_iter, anchor=i)
            for i in block
        ]

    conditional = np.zeros((n, n))
    betas = np.empty(n)
    duplicates = 0
    for rows in map_blocks(calibrate_block, n, config.n_threads):
        for r in rows:
            conditional[r.i] = r.probabilities
            betas[r.i] = r.beta
            duplicates += r.duplicate

    if duplicates:
        logger.warning(f"{duplicates} rows had only duplicate neighbours; used uniform rows")

    P = (conditional + conditional.T) / (2.0 * n)
    logger.info(f"Built dense affinities for {n} points (perplexity {config.perplexity})")
    return AffinityMatrix(n=n, entries=P, betas=betas, duplicate_rows=duplicates)


def neighbor_count(n: int, config: TsneConfig) -> int:
    """Neighbours stored per point in sparse mode: ceil(factor * perplexity), at most N-1"""
    return min(n - 1, int(math.ceil(config.neighbors_factor * config.perplexity)))


def nearest_neighbors(D: np.ndarray, k: int) -> np.ndarray:
    """
    Exact k nearest neighbours by row scan; distance ties go to the smaller index

    Args:
        D: N x N squared distances
        k: Neighbours per point

    Returns:
        N x k index matrix, nearest first
    """
    scan = D.copy()
    np.fill_diagonal(scan, np.inf)
    return np.argsort(scan, axis=1, kind="stable")[:, :k]


def neighbor_affinities(X: np.ndarray, config: TsneConfig) -> AffinityMatrix:
    """
    Sparse joint probabilities restricted to each point's nearest neighbours

    Args:
        X: N x d DataMatrix
        config: Perplexity, neighbour factor and calibration settings

    Returns:
        CSR AffinityMatrix
    """
    _check_perplexity(X.shape[0], config)
    return neighbor_affinities_from_distances(squared_distances(X), config)


def neighbor_affinities_from_distances(D: np.ndarray, config: TsneConfig) -> AffinityMatrix:
    """Sparse P from a precomputed squared-distance matrix"""
    n = D.shape[0]
    _check_perplexity(n, config)
    k = neighbor_count(n, config)
    neighbors = nearest_neighbors(D, k)

    def calibrate_block(block: range) -> list[tuple[int, ConditionalRow]]:
        return [
            (i, calibrate_row(D[i, neighbors[i]], config.perplexity,
                              config.calibration_tol, config.calibration_max_iter))
            for i in block
        ]

    values = np.empty((n, k))
    betas = np.empty(n)
    duplicates = 0
    for rows in map_blocks(calibrate_block, n, config.n_threads):
        for i, r in rows:
            values[i] = r.probabilities
            betas[i] = r.beta
            duplicates += r.duplicate

    if duplicates:
        logger.warning(f"{duplicates} rows had only duplicate neighbours; used uniform rows")

    conditional = sparse.csr_matrix(
        (values.ravel(), (np.repeat(np.arange(n), k), neighbors.ravel())), shape=(n, n)
    )
    P = ((conditional + conditional.T) / (2.0 * n)).tocsr()
    P.sort_indices()
    logger.info(f"Built sparse affinities for {n} points ({k} neighbours each, {P.nnz} stored entries)")
    return AffinityMatrix(n=n, entries=P, betas=betas, duplicate_rows=duplicates)
