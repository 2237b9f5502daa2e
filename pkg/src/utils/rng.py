"""
Deterministic seeded random numbers (splitmix64-v1)

Output t (t = 1, 2, ...) of the stream for ``seed`` is
mix64(seed + t * 0x9E3779B97F4A7C15 mod 2**64). Because every output is a
pure function of (seed, t), a stream can be generated in bulk with numpy and
reproduced exactly by any other implementation of the same mixing function.
"""
import math
from typing import Union

import numpy as np

PRNG_NAME = "splitmix64-v1"

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_C1 = 0xBF58476D1CE4E5B9
_MIX_C2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_TWO_POW_M53 = 2.0 ** -53


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python integer"""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX_C1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_C2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_C1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_C2)
        return z ^ (z >> np.uint64(31))


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 bytes of ``text``"""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & MASK64
    return h


def derive_seed(master: int, *parts: Union[str, int]) -> int:
    """
    Derive an independent stream seed from a master seed

    Args:
        master: Master seed
        *parts: Stream identifiers, e.g. ("random_projection", 53, 0)

    Returns:
        64-bit seed for the sub-stream
    """
    key = "|".join(str(p) for p in parts)
    return mix64((master & MASK64) ^ fnv1a64(key))


class SplitMix64:
    """Counter-based SplitMix64 generator"""

    name = PRNG_NAME

    def __init__(self, seed: int = 0):
        self.seed = int(seed) & MASK64
        self.counter = 0

    def next_uint64(self) -> int:
        """Draw a single 64-bit output as a Python integer"""
        self.counter += 1
        return mix64(self.seed + self.counter * GOLDEN_GAMMA)

    def uint64s(self, n: int) -> np.ndarray:
        """Draw ``n`` consecutive outputs as a uint64 array"""
        ts = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            states = np.uint64(self.seed) + ts * np.uint64(GOLDEN_GAMMA)
        return _mix64_array(states)

    def random(self, n: int) -> np.ndarray:
        """Uniform doubles in [0, 1)"""
        return (self.uint64s(n) >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53

    def integer_below(self, bound: int) -> int:
        """Integer in [0, bound) as ``x mod bound``"""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_uint64() % bound

    def standard_normal(self, n: int) -> np.ndarray:
        """
        Standard normal variates by Box-Muller

        Each pair of outputs (x1, x2) yields r*cos(2*pi*u2) and r*sin(2*pi*u2)
        with u1 = ((x1 >> 11) + 1) * 2**-53 and r = sqrt(-2 ln u1). When ``n``
        is odd the last sine variate is dropped.
        """
        pairs = (n + 1) // 2
        raw = self.uint64s(2 * pairs) >> np.uint64(11)
        u1 = (raw[0::2].astype(np.float64) + 1.0) * _TWO_POW_M53
        u2 = raw[1::2].astype(np.float64) * _TWO_POW_M53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]

    def normal(self, scale: float, shape: tuple) -> np.ndarray:
        """Zero-mean normal array of the given shape, row-major fill order"""
        size = int(np.prod(shape)) if shape else 1
        return (self.standard_normal(size) * scale).reshape(shape)
