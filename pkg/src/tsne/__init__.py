from .affinities import (
    AffinityMatrix, ConditionalRow, squared_distances, calibrate_row, row_entropy,
    joint_affinities, neighbor_affinities,
)
from .objective import low_dim_affinities, kl_divergence, exact_gradient
from .quadtree import build_quadtree, barnes_hut_gradient
from .engine import Embedding, OptimizerTrace, TraceRecord, TsneEngine, run_tsne

__all__ = [
    'AffinityMatrix', 'ConditionalRow', 'squared_distances', 'calibrate_row', 'row_entropy',
    'joint_affinities', 'neighbor_affinities',
    'low_dim_affinities', 'kl_divergence', 'exact_gradient',
    'build_quadtree', 'barnes_hut_gradient',
    'Embedding', 'OptimizerTrace', 'TraceRecord', 'TsneEngine', 'run_tsne',
]
