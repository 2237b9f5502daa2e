"""
Shared fixtures and hypothesis profiles
"""
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=50, deadline=None)
settings.register_profile(
    "fast", max_examples=10, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def two_blobs(n_per_blob: int, d: int, separation: float = 50.0, seed: int = 0):
    """Two unit-variance Gaussian blobs whose centres are ``separation`` apart"""
    generator = np.random.default_rng(seed)
    offset = np.zeros(d)
    offset[0] = separation
    X = np.vstack([
        generator.standard_normal((n_per_blob, d)),
        generator.standard_normal((n_per_blob, d)) + offset,
    ])
    y = np.repeat([0, 1], n_per_blob)
    return X, y


@pytest.fixture
def blobs():
    return two_blobs


@pytest.fixture(scope="session")
def mnist_dir() -> Path:
    """Directory with MNIST IDX files; skips the test when unavailable"""
    value = os.getenv("RPTSNE_MNIST_DIR")
    if not value or not Path(value).is_dir():
        pytest.skip("RPTSNE_MNIST_DIR does not point at an MNIST directory")
    path = Path(value)
    for name in ("train-images-idx3-ubyte", "train-images-idx3-ubyte.gz"):
        if (path / name).exists():
            return path
    pytest.skip(f"No MNIST training images in {path}")
