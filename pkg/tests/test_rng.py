import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.utils.rng import MASK64, SplitMix64, derive_seed, fnv1a64, mix64


def test_seed_zero_matches_published_splitmix64_outputs():
    rng = SplitMix64(0)
    assert [rng.next_uint64() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


@given(st.integers(min_value=0, max_value=MASK64), st.integers(min_value=1, max_value=40))
def test_bulk_draws_continue_the_scalar_stream(seed, n):
    scalar = SplitMix64(seed)
    bulk = SplitMix64(seed)
    expected = [scalar.next_uint64() for _ in range(2 * n)]
    drawn = bulk.uint64s(n).tolist() + bulk.uint64s(n).tolist()
    assert drawn == expected
    assert bulk.counter == 2 * n


def test_uniforms_lie_in_unit_interval():
    u = SplitMix64(3).random(10_000)
    assert u.min() >= 0.0
    assert u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.02


def test_odd_normal_draw_is_prefix_of_even_draw():
    odd = SplitMix64(9).standard_normal(5)
    even = SplitMix64(9).standard_normal(6)
    np.testing.assert_array_equal(odd, even[:5])


def test_normal_moments():
    z = SplitMix64(11).standard_normal(200_000)
    assert np.isfinite(z).all()
    assert abs(z.mean()) < 4 / np.sqrt(z.size)
    assert z.var() == pytest.approx(1.0, rel=0.02)


def test_normal_fills_row_major():
    flat = SplitMix64(5).standard_normal(6) * 0.5
    shaped = SplitMix64(5).normal(0.5, (2, 3))
    np.testing.assert_array_equal(shaped, flat.reshape(2, 3))


def test_integer_below_rejects_empty_range():
    with pytest.raises(ValueError):
        SplitMix64(0).integer_below(0)


def test_fnv1a64_known_values():
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C


def test_derive_seed_separates_streams():
    seeds = {
        derive_seed(0, "random_projection", 7, 0),
        derive_seed(0, "random_projection", 7, 1),
        derive_seed(0, "random_projection", 11, 0),
        derive_seed(0, "pca", 7, 0),
        derive_seed(1, "random_projection", 7, 0),
    }
    assert len(seeds) == 5
    assert derive_seed(0, "tsne", 0) == derive_seed(0, "tsne", 0)


def test_derive_seed_is_mix_of_master_and_hash():
    assert derive_seed(42, "pca", 53, 2) == mix64(42 ^ fnv1a64("pca|53|2"))
