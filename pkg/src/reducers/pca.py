"""
Principal component analysis by dense eigendecomposition
"""
import logging
from dataclasses import dataclass

import numpy as np

from src.errors import NumericError, ParameterError
from src.utils.data_io import load_raw, write_raw

logger = logging.getLogger(__name__)

# eigenvalues below this fraction of the largest are treated as zero
_RANK_TOL = 1e-12


@dataclass(frozen=True)
class PrincipalBasis:
    """Column mean, orthonormal components (d x d_prime) and their variances"""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def d(self) -> int:
        return self.components.shape[0]

    @property
    def d_prime(self) -> int:
        return self.components.shape[1]

    def save(self, path: str) -> str:
        """
        Cache as one (d+1) x (d_prime+1) raw_f64 matrix

        Row 0 holds [0, explained_variance...]; rows 1..d hold [mean_k, components_k...].
        """
        packed = np.zeros((self.d + 1, self.d_prime + 1))
        packed[0, 1:] = self.explained_variance
        packed[1:, 0] = self.mean
        packed[1:, 1:] = self.components
        return write_raw(path, packed, extra={"kind": "pca"})

    @classmethod
    def load(cls, path: str) -> "PrincipalBasis":
        packed, _ = load_raw(path)
        return cls(
            mean=packed[1:, 0].copy(),
            components=packed[1:, 1:].copy(),
            explained_variance=packed[0, 1:].copy(),
        )


def _eigh_descending(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        values, vectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as e:
        logger.error(f"Eigensolver failed: {str(e)}")
        raise NumericError(f"Eigendecomposition did not converge: {e}")
    return np.maximum(values[::-1], 0.0), vectors[:, ::-1]


def _complete_basis(basis: np.ndarray, d: int, count: int) -> np.ndarray:
    """Extend orthonormal columns with standard basis vectors, Gram-Schmidt style"""
    columns = [basis[:, k] for k in range(basis.shape[1])]
    for axis in range(d):
        if len(columns) == count:
            break
        v = np.zeros(d)
        v[axis] = 1.0
        for c in columns:
            v -= (c @ v) * c
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            columns.append(v / norm)
    return np.column_stack(columns)


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive"""
    pivots = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[pivots, np.arange(components.shape[1])])
    signs[signs == 0] = 1.0
    return components * signs


def pca_fit(X: np.ndarray, d_prime: int) -> PrincipalBasis:
    """
    Fit the top ``d_prime`` principal components of X

    The d x d covariance is decomposed when d <= N, otherwise the N x N Gram
    matrix of the centred data, whose eigenvectors map back to components
    through X_c^T. Components for zero-variance directions are completed to an
    orthonormal set.

    Args:
        X: N x d DataMatrix
        d_prime: Number of components, at most min(N, d)

    Returns:
        PrincipalBasis
    """
    n, d = X.shape
    if not 1 <= d_prime <= min(n, d):
        raise ParameterError(f"PCA needs 1 <= d_prime <= min(N, d) = {min(n, d)}, got {d_prime}")

    mean = X.mean(axis=0)
    centered = X - mean
    scale = 1.0 / (n - 1)

    if d <= n:
        values, vectors = _eigh_descending(scale * (centered.T @ centered))
        components = vectors[:, :d_prime]
    else:
        values, vectors = _eigh_descending(scale * (centered @ centered.T))
        rank = int(np.count_nonzero(values[:d_prime] > _RANK_TOL * max(values[0], 1e-300)))
        mapped = centered.T @ vectors[:, :rank] / np.sqrt((n - 1) * values[:rank])
        # re-orthonormalize against round-off in small eigenvalues
        mapped, _ = np.linalg.qr(mapped) if rank else (mapped, None)
        components = _complete_basis(mapped, d, d_prime)
        if components.shape[1] < d_prime:
            raise NumericError("Could not complete an orthonormal component basis")

    basis = PrincipalBasis(
        mean=mean,
        components=_fix_signs(components),
        explained_variance=values[:d_prime].copy(),
    )
    logger.info(
        f"PCA fitted {d_prime} of {d} dimensions ({'covariance' if d <= n else 'Gram'} path), "
        f"retained variance {basis.explained_variance.sum():.4g}"
    )
    return basis


def pca_transform(X: np.ndarray, B: PrincipalBasis) -> np.ndarray:
    """
    Project X onto the principal basis

    Args:
        X: N x d matrix
        B: PrincipalBasis fitted on d-dimensional data

    Returns:
        N x d_prime matrix (X - mean) @ components
    """
    if X.ndim != 2 or X.shape[1] != B.mean.shape[0]:
        raise ParameterError(f"Cannot transform {X.shape} with a basis fitted on {B.mean.shape[0]} columns")
    return (X - B.mean) @ B.components
