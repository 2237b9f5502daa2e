import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import DataError, ParameterError
from src.reducers import (
    IdentityReducer,
    PcaReducer,
    PrincipalBasis,
    ProjectionMatrix,
    RandomProjectionReducer,
    apply_projection,
    gaussian_projection,
    jl_audit,
    jl_min_dimension,
    make_reducer,
    pca_fit,
    pca_transform,
)


def jacobi_eigenvalues(A, sweeps=100):
    """Cyclic Jacobi rotations on a small symmetric matrix"""
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(sum(A[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off < 1e-15:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1 + tau * tau))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = s, -s
                A = J.T @ A @ J
    return sorted(np.diag(A), reverse=True)


def pairwise(X):
    return np.array([[np.sum((a - b) ** 2) for b in X] for a in X])


class TestGaussianProjection:
    def test_same_seed_same_matrix(self):
        first = gaussian_projection(784, 50, seed=1)
        second = gaussian_projection(784, 50, seed=1)
        assert first.entries.tobytes() == second.entries.tobytes()

    def test_entry_moments(self):
        R = gaussian_projection(1000, 1000, seed=7)
        entries = R.entries.ravel()
        assert abs(entries.mean()) <= 4 * (1 / math.sqrt(1000)) / math.sqrt(entries.size)
        assert entries.var() == pytest.approx(1 / 1000, rel=0.02)

    @pytest.mark.parametrize("d, d_prime", [(3, 5), (3, 0), (0, 0)])
    def test_invalid_dimensions(self, d, d_prime):
        with pytest.raises(ParameterError):
            gaussian_projection(d, d_prime, seed=0)

    def test_save_and_load(self, tmp_path):
        R = gaussian_projection(12, 4, seed=21)
        path = str(tmp_path / "r.f64")

        R.save(path)
        loaded = ProjectionMatrix.load(path)

        assert loaded.seed == 21
        assert (loaded.d, loaded.d_prime) == (12, 4)
        np.testing.assert_array_equal(loaded.entries, R.entries)


class TestApplyProjection:
    def test_zero_input(self):
        R = gaussian_projection(6, 3, seed=0)
        out = apply_projection(np.zeros((4, 6)), R)
        assert out.shape == (4, 3)
        assert not out.any()

    def test_basis_rows_select_matrix_rows(self):
        R = gaussian_projection(3, 2, seed=5)
        out = apply_projection(np.array([[1.0, 0, 0], [0, 1.0, 0]]), R)
        np.testing.assert_array_equal(out, R.entries[:2])

    def test_matches_triple_loop(self, rng):
        X = rng.standard_normal((10, 8))
        R = gaussian_projection(8, 5, seed=3)

        out = apply_projection(X, R)

        for i in range(10):
            for j in range(5):
                expected = sum(X[i, k] * R.entries[k, j] for k in range(8))
                assert abs(out[i, j] - expected) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            apply_projection(np.zeros((2, 4)), gaussian_projection(5, 2, seed=0))

    @settings(max_examples=20)
    @given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32))
    def test_linear(self, a, b, seed):
        generator = np.random.default_rng(seed)
        X1 = generator.standard_normal((5, 6))
        X2 = generator.standard_normal((5, 6))
        R = gaussian_projection(6, 3, seed=seed)

        combined = apply_projection(a * X1 + b * X2, R)
        separate = a * apply_projection(X1, R) + b * apply_projection(X2, R)

        np.testing.assert_allclose(combined, separate, atol=1e-10)


class TestJlAudit:
    def test_identity_reduction(self, rng):
        X = rng.standard_normal((30, 5))
        audit = jl_audit(X, X, epsilon=0.1, pair_budget=10_000, seed=0)
        assert audit.fraction_within == 1.0
        assert audit.max_distortion == 0.0
        assert audit.pair_count == 30 * 29 // 2

    def test_projection_preserves_squared_distances(self):
        """Retries once with a fresh seed, as for any statistical check"""
        X = np.random.default_rng(0).standard_normal((200, 784))
        fractions = []
        for seed in (1, 2):
            R = gaussian_projection(784, 200, seed=seed)
            audit = jl_audit(X, apply_projection(X, R), epsilon=0.3, pair_budget=10**6, seed=seed,
                             expected_scale=R.distance_scale)
            fractions.append(audit.fraction_within)
            if audit.fraction_within >= 0.99:
                break
        assert max(fractions) >= 0.99

    def test_duplicate_rows_are_skipped(self, rng):
        X = rng.standard_normal((5, 4))
        X[3] = X[1]
        X_proj = apply_projection(X, gaussian_projection(4, 2, seed=0))

        audit = jl_audit(X, X_proj, epsilon=0.5, pair_budget=100, seed=0)

        assert audit.skipped_pairs == 1
        assert audit.pair_count == 9
        assert math.isfinite(audit.max_distortion)

    def test_sampled_pairs_respect_budget(self, rng):
        X = rng.standard_normal((100, 3))
        audit = jl_audit(X, X * 2, epsilon=0.5, pair_budget=50, seed=4, expected_scale=4.0)
        assert audit.pair_count + audit.skipped_pairs == 50
        assert audit.max_distortion == pytest.approx(0.0, abs=1e-12)

    def test_row_count_mismatch(self, rng):
        with pytest.raises(DataError):
            jl_audit(rng.standard_normal((4, 3)), rng.standard_normal((5, 3)), 0.3, 10, 0)

    def test_single_row(self, rng):
        with pytest.raises(DataError):
            jl_audit(rng.standard_normal((1, 3)), rng.standard_normal((1, 3)), 0.3, 10, 0)


def test_jl_min_dimension():
    assert jl_min_dimension(200, 0.3) == math.ceil(4 * math.log(200) / (0.3 ** 2 / 2 - 0.3 ** 3 / 3))
    assert jl_min_dimension(10_000, 0.1) > jl_min_dimension(100, 0.1)
    with pytest.raises(ParameterError):
        jl_min_dimension(100, 1.5)


def test_projection_keeps_nearest_neighbours():
    """Statistical: Gaussian mixture of tight two-point components"""
    generator = np.random.default_rng(8)
    centers = generator.standard_normal((250, 200))
    X = np.repeat(centers, 2, axis=0) + 0.05 * generator.standard_normal((500, 200))
    X_proj = apply_projection(X, gaussian_projection(200, 50, seed=8))

    def nearest(points):
        sq = np.sum(points ** 2, axis=1)
        D = sq[:, None] + sq[None, :] - 2 * points @ points.T
        np.fill_diagonal(D, np.inf)
        return D.argmin(axis=1)

    assert np.mean(nearest(X) == nearest(X_proj)) >= 0.9


class TestPca:
    def test_rank_one_data(self, rng):
        t = rng.standard_normal(20)
        X = np.outer(t, [1.0, 2.0, -1.0]) + np.array([3.0, 0.0, 1.0])

        basis = pca_fit(X, 2)

        assert basis.explained_variance[1] <= 1e-10 * basis.explained_variance[0]

    def test_eigenvalues_match_jacobi_oracle(self, rng):
        X = rng.standard_normal((5, 3))
        centered = X - X.mean(axis=0)
        covariance = centered.T @ centered / 4

        basis = pca_fit(X, 3)

        np.testing.assert_allclose(basis.explained_variance, jacobi_eigenvalues(covariance), atol=1e-8)

    def test_row_permutation_invariance(self, rng):
        X = rng.standard_normal((15, 4))
        first = pca_fit(X, 4)
        second = pca_fit(X[rng.permutation(15)], 4)
        np.testing.assert_allclose(first.explained_variance, second.explained_variance, atol=1e-10)

    def test_components_are_orthonormal_and_sorted(self, rng):
        basis = pca_fit(rng.standard_normal((40, 6)), 4)
        gram = basis.components.T @ basis.components
        assert np.abs(gram - np.eye(4)).max() <= 1e-10
        assert np.all(np.diff(basis.explained_variance) <= 0)

    def test_gram_path_for_wide_data(self, rng):
        X = rng.standard_normal((10, 30))
        centered = X - X.mean(axis=0)
        expected = np.sort(np.linalg.eigvalsh(centered.T @ centered / 9))[::-1][:10]

        basis = pca_fit(X, 10)

        np.testing.assert_allclose(basis.explained_variance, np.maximum(expected, 0), atol=1e-9)
        gram = basis.components.T @ basis.components
        assert np.abs(gram - np.eye(10)).max() <= 1e-10

    def test_sign_convention(self, rng):
        components = pca_fit(rng.standard_normal((20, 5)), 3).components
        pivots = np.argmax(np.abs(components), axis=0)
        assert np.all(components[pivots, np.arange(3)] > 0)

    def test_too_many_components(self, rng):
        with pytest.raises(ParameterError):
            pca_fit(rng.standard_normal((4, 6)), 5)

    def test_transform_is_centred(self, rng):
        X = rng.standard_normal((25, 5)) + 10
        Z = pca_transform(X, pca_fit(X, 3))
        assert np.abs(Z.mean(axis=0)).max() <= 1e-10

    def test_plane_in_ten_dimensions_is_preserved(self, rng):
        X = rng.standard_normal((20, 2)) @ rng.standard_normal((2, 10)) + rng.standard_normal(10)

        Z = pca_transform(X, pca_fit(X, 2))

        original = pairwise(X)
        reduced = pairwise(Z)
        off = ~np.eye(20, dtype=bool)
        np.testing.assert_allclose(reduced[off], original[off], rtol=1e-8)

    def test_column_variances_equal_explained_variance(self, rng):
        X = rng.standard_normal((30, 6)) * np.arange(1, 7)
        basis = pca_fit(X, 4)
        Z = pca_transform(X, basis)
        np.testing.assert_allclose(Z.var(axis=0, ddof=1), basis.explained_variance, rtol=1e-8)

    def test_transform_dimension_mismatch(self, rng):
        basis = pca_fit(rng.standard_normal((10, 4)), 2)
        with pytest.raises(ParameterError):
            pca_transform(rng.standard_normal((3, 5)), basis)

    def test_save_and_load(self, tmp_path, rng):
        basis = pca_fit(rng.standard_normal((12, 5)), 3)
        path = str(tmp_path / "pca.f64")

        basis.save(path)
        loaded = PrincipalBasis.load(path)

        np.testing.assert_array_equal(loaded.mean, basis.mean)
        np.testing.assert_array_equal(loaded.components, basis.components)
        np.testing.assert_array_equal(loaded.explained_variance, basis.explained_variance)


class TestMakeReducer:
    def test_kinds(self):
        assert isinstance(make_reducer("none"), IdentityReducer)
        assert isinstance(make_reducer("random_projection", 3, seed=1), RandomProjectionReducer)
        assert isinstance(make_reducer("pca", 3), PcaReducer)

    def test_identity_passes_data_through(self, rng):
        X = rng.standard_normal((5, 4))
        reducer = make_reducer("none")
        assert reducer.fit_transform(X) is X
        assert reducer.d_prime == 4

    def test_random_projection_uses_seed(self, rng):
        X = rng.standard_normal((5, 8))
        out = make_reducer("random_projection", 3, seed=9).fit_transform(X)
        np.testing.assert_array_equal(out, apply_projection(X, gaussian_projection(8, 3, 9)))

    def test_missing_dimension_and_unknown_kind(self):
        with pytest.raises(ParameterError):
            make_reducer("pca")
        with pytest.raises(ParameterError):
            make_reducer("umap", 2)
