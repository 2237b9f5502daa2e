"""
Student-t output affinities, KL objective and its exact gradient
"""
import logging
from typing import Union

import numpy as np
from scipy import sparse

from src.errors import NonFiniteError, ParameterError
from src.tsne.affinities import AffinityMatrix

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-12


def _as_dense(P: Union[AffinityMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(P, AffinityMatrix):
        return P.dense()
    if sparse.issparse(P):
        return P.toarray()
    return np.asarray(P, dtype=np.float64)


def student_kernel(Y: np.ndarray) -> np.ndarray:
    """W_ij = (1 + |y_i - y_j|^2)^-1 with a zero diagonal"""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 2:
        raise ParameterError(f"Need an N x m embedding with N >= 2, got shape {Y.shape}")
    if not np.isfinite(Y).all():
        row = int(np.argmin(np.isfinite(Y).all(axis=1)))
        raise NonFiniteError(f"Non-finite embedding coordinate in row {row}", row=row)
    sq_norms = np.einsum("ij,ij->i", Y, Y)
    D = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (Y @ Y.T)
    np.maximum(D, 0.0, out=D)
    W = 1.0 / (1.0 + D)
    W = 0.5 * (W + W.T)
    np.fill_diagonal(W, 0.0)
    return W


def low_dim_affinities(Y: np.ndarray) -> tuple[np.ndarray, float]:
    """
    Output-space joint probabilities

    Args:
        Y: N x m embedding

    Returns:
        Tuple of (Q = W / Z, Z = sum of off-diagonal W)
    """
    W = student_kernel(Y)
    Z = float(W.sum())
    return W / Z, Z


def kl_divergence(
    P: Union[AffinityMatrix, np.ndarray],
    Q: np.ndarray,
    floor: float = DEFAULT_FLOOR
) -> float:
    """
    KL(P || Q) = sum_{i != j} P_ij log(P_ij / Q_ij)

    Both arguments are floored at ``floor`` inside the logarithm only; entries
    with P_ij = 0 contribute nothing.

    Args:
        P: Input affinities
        Q: Output affinities of the same shape
        floor: Lower bound applied before taking logs

    Returns:
        Non-negative scalar (up to floor-induced error)
    """
    P = _as_dense(P)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise ParameterError(f"Shape mismatch: P {P.shape} vs Q {Q.shape}")
    off_diagonal = ~np.eye(P.shape[0], dtype=bool)
    p = P[off_diagonal]
    q = Q[off_diagonal]
    positive = p > 0
    p = p[positive]
    q = q[positive]
    return float(np.sum(p * (np.log(np.maximum(p, floor)) - np.log(np.maximum(q, floor)))))


def exact_terms(P: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Gradient of KL(P || Q) together with Q

    Returns:
        Tuple of (N x m gradient, Q)
    """
    W = student_kernel(Y)
    Q = W / W.sum()
    M = (P - Q) * W
    grad = 4.0 * (M.sum(axis=1)[:, None] * Y - M @ Y)
    return grad, Q


def exact_gradient(P: Union[AffinityMatrix, np.ndarray], Y: np.ndarray) -> np.ndarray:
    """
    dKL/dy_i = 4 sum_j (P_ij - Q_ij)(y_i - y_j)(1 + |y_i - y_j|^2)^-1

    Args:
        P: Symmetric input affinities summing to 1
        Y: N x m embedding

    Returns:
        N x m gradient matrix
    """
    P = _as_dense(P)
    Y = np.asarray(Y, dtype=np.float64)
    if P.shape != (Y.shape[0], Y.shape[0]):
        raise ParameterError(f"Shape mismatch: P {P.shape} vs {Y.shape[0]} points")
    grad, _ = exact_terms(P, Y)
    return grad


def exact_repulsion(Y: np.ndarray) -> tuple[np.ndarray, float]:
    """
    Unnormalized repulsive forces sum_j W_ij^2 (y_i - y_j) and Z

    The repulsive part of the gradient is -4 * forces / Z.
    """
    W = student_kernel(Y)
    W2 = W * W
    forces = W2.sum(axis=1)[:, None] * Y - W2 @ Y
    return forces, float(W.sum())
