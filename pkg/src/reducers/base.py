"""
Common interface over the reduction front-ends used by sweeps
"""
import logging
from typing import Optional, Protocol

import numpy as np

from src.errors import ParameterError
from src.reducers.pca import PrincipalBasis, pca_fit, pca_transform
from src.reducers.random_projection import ProjectionMatrix, apply_projection, gaussian_projection

logger = logging.getLogger(__name__)


class Reducer(Protocol):
    kind: str
    d_prime: Optional[int]

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        ...


class IdentityReducer:
    """Pass-through used for the unreduced baseline"""

    kind = "none"

    def __init__(self):
        self.d_prime: Optional[int] = None

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        self.d_prime = X.shape[1]
        return X


class RandomProjectionReducer:
    """Data-oblivious Gaussian projection to d_prime dimensions"""

    kind = "random_projection"

    def __init__(self, d_prime: int, seed: int):
        self.d_prime = d_prime
        self.seed = seed
        self.matrix: Optional[ProjectionMatrix] = None

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        self.matrix = gaussian_projection(X.shape[1], self.d_prime, self.seed)
        return apply_projection(X, self.matrix)


class PcaReducer:
    """Projection onto the top d_prime principal components"""

    kind = "pca"

    def __init__(self, d_prime: int):
        self.d_prime = d_prime
        self.basis: Optional[PrincipalBasis] = None

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        self.basis = pca_fit(X, self.d_prime)
        return pca_transform(X, self.basis)


def make_reducer(kind: str, d_prime: Optional[int] = None, seed: int = 0) -> Reducer:
    """
    Build a reducer by kind

    Args:
        kind: "none", "random_projection" or "pca"
        d_prime: Target dimension (ignored for "none")
        seed: Projection seed (random_projection only)

    Returns:
        Reducer instance
    """
    if kind == "none":
        return IdentityReducer()
    if d_prime is None:
        raise ParameterError(f"Reducer '{kind}' needs a target dimension")
    if kind == "random_projection":
        return RandomProjectionReducer(d_prime, seed)
    if kind == "pca":
        return PcaReducer(d_prime)
    raise ParameterError(f"Unknown reducer: {kind}")
