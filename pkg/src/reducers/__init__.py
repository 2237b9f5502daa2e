from .random_projection import ProjectionMatrix, gaussian_projection, apply_projection, jl_audit, jl_min_dimension
from .pca import PrincipalBasis, pca_fit, pca_transform
from .base import IdentityReducer, RandomProjectionReducer, PcaReducer, make_reducer

__all__ = [
    'ProjectionMatrix', 'gaussian_projection', 'apply_projection', 'jl_audit', 'jl_min_dimension',
    'PrincipalBasis', 'pca_fit', 'pca_transform',
    'IdentityReducer', 'RandomProjectionReducer', 'PcaReducer', 'make_reducer',
]
