from .rng import SplitMix64, derive_seed
from .run_store import RunStore

__all__ = ['SplitMix64', 'derive_seed', 'RunStore']
