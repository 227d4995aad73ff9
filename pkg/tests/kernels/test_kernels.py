"""
Tests for the parametric kernel families, Gram assembly and spectral
normalization.
"""

import math

import numpy as np
import pytest

from src.core import autodiff as ad
from src.core.gradcheck import check_param_gradients
from src.core.nn import MlpSpec
from src.core.errors import ShapeError
from src.kernels.base import ConstantKernel, ProductKernel, RbfKernel, gram, median_bandwidth2
from src.kernels.deep_rbf import DeepRbfKernel, deep_rbf_eval
from src.kernels.random_feature import RandomFeatureKernel, random_feature_eval
from src.kernels.spectral import power_iteration, spectral_normalize


@pytest.fixture
def random_feature(rng):
    return RandomFeatureKernel(MlpSpec.make(2, [8], 3, activation="tanh"), rng, num_freq_samples=32)


def _identity_kernel(dim, rng):
    kernel = DeepRbfKernel(MlpSpec([dim, dim], ["identity"]), rng)
    kernel.params["h.W0"].data = np.eye(dim)
    kernel.params["h.b0"].data = np.zeros(dim)
    return kernel


class TestDeepRbf:
    def test_unit_diagonal(self, rng, deep_rbf):
        X = rng.standard_normal((6, 2))
        np.testing.assert_allclose(np.diag(deep_rbf.matrix(X).data), 1.0, atol=1e-12)
        assert deep_rbf_eval(deep_rbf, X[0], X[0]) == pytest.approx(1.0, abs=1e-12)

    def test_identity_features_reduce_to_gaussian(self, rng):
        kernel = _identity_kernel(2, rng)
        assert deep_rbf_eval(kernel, [0.0, 0.0], [1.0, 0.0]) == pytest.approx(math.exp(-1.0))

    def test_matches_reference_evaluator(self, rng, deep_rbf):
        x0, x = np.array([0.5, 0.1]), np.array([-0.5, 0.3])
        W0, b0 = deep_rbf.params["h.W0"].data, deep_rbf.params["h.b0"].data
        W1, b1 = deep_rbf.params["h.W1"].data, deep_rbf.params["h.b1"].data

        def features(p):
            return np.tanh(p @ W0 + b0) @ W1 + b1

        expected = math.exp(-float(np.sum((features(x0) - features(x)) ** 2)))
        assert deep_rbf_eval(deep_rbf, x0, x) == pytest.approx(expected, rel=1e-12)

    def test_symmetric_and_bounded(self, rng, deep_rbf):
        G = deep_rbf.matrix(rng.standard_normal((7, 2))).data
        np.testing.assert_array_equal(G, G.T)
        assert np.all(G > 0) and np.all(G <= 1.0)

    def test_parameter_gradients(self, rng, deep_rbf):
        X = rng.standard_normal((4, 2))
        errors = check_param_gradients(lambda: ad.tsum(deep_rbf.matrix(X)), deep_rbf.params)
        assert max(errors.values()) < 1e-4

    def test_spectral_norm_bounds_effective_weights(self, rng):
        kernel = DeepRbfKernel(
            MlpSpec.make(2, [8, 8], 4, activation="tanh"), rng, spectral_norm=True
        )
        for _ in range(200):
            kernel.refresh()
        assert max(kernel.net.effective_sigmas()) <= 1.0 + 1e-6


class TestRandomFeature:
    def test_unit_diagonal(self, rng, random_feature):
        X = rng.standard_normal((5, 2))
        np.testing.assert_allclose(np.diag(random_feature.matrix(X).data), 1.0, atol=1e-12)

    def test_symmetric(self, rng, random_feature):
        G = random_feature.matrix(rng.standard_normal((6, 2))).data
        np.testing.assert_allclose(G, G.T, atol=1e-12)
        assert np.all(np.abs(G) <= 1.0 + 1e-12)

    def test_pair_values_match_matrix(self, rng, random_feature):
        A, B = rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
        full = random_feature.matrix(A, B).data
        np.testing.assert_allclose(random_feature.pair_values(A, B).data, np.diag(full), atol=1e-12)

    def test_same_seed_is_bit_identical(self):
        values = []
        for _ in range(2):
            rng = np.random.default_rng(0)
            kernel = RandomFeatureKernel(
                MlpSpec.make(1, [8], 2, activation="tanh"), rng, num_freq_samples=1024
            )
            values.append(random_feature_eval(kernel, [0.3], [-0.7], np.random.default_rng(1)))
        assert values[0] == values[1]
        assert abs(values[0]) <= 1.0

    def test_global_term_with_forced_frequency(self, rng):
        kernel = RandomFeatureKernel(
            MlpSpec([1, 1], ["identity"]), rng, noise_dim=1, freq_hidden=(1,), num_freq_samples=1
        )
        kernel.params["rf.h.W0"].data = np.eye(1)
        kernel.params["rf.h.b0"].data = np.zeros(1)
        # w1 = 1 regardless of the noise
        kernel.params["rf.w1.W1"].data = np.zeros((1, 1))
        kernel.params["rf.w1.b1"].data = np.ones(1)
        term1, _ = kernel.terms(np.zeros((1, 1)), np.full((1, 1), math.pi))
        assert float(term1.data[0, 0]) == pytest.approx(-1.0, abs=1e-12)

    def test_positive_semidefinite_at_initialization(self, rng, random_feature):
        result = gram(random_feature, rng.standard_normal((20, 2)))
        assert result.min_eigenvalue() >= -1e-6


class TestGram:
    def test_single_point(self, deep_rbf):
        result = gram(deep_rbf, np.zeros((1, 2)))
        np.testing.assert_allclose(result.values, [[1.0]])

    def test_psd_on_random_points(self, rng, deep_rbf):
        assert gram(deep_rbf, rng.standard_normal((5, 2))).min_eigenvalue() >= -1e-8

    def test_constant_features_give_all_ones(self, rng):
        kernel = DeepRbfKernel(MlpSpec([2, 2], ["identity"]), rng)
        kernel.params["h.W0"].data = np.zeros((2, 2))
        result = gram(kernel, rng.standard_normal((4, 2)))
        np.testing.assert_allclose(result.values, np.ones((4, 4)), atol=1e-12)

    def test_exclude_diag_mean(self):
        result = gram(ConstantKernel(2.0), np.zeros((3, 1)), exclude_diag=True)
        assert not result.mask.diagonal().any()
        assert result.mean() == 2.0

    def test_exclude_diag_needs_same_set(self, deep_rbf):
        with pytest.raises(ValueError):
            gram(deep_rbf, np.zeros((2, 2)), np.ones((3, 2)), exclude_diag=True)

    def test_empty_input(self, deep_rbf):
        with pytest.raises(ShapeError):
            gram(deep_rbf, np.zeros((0, 2)))

    def test_product_kernel_multiplies_blocks(self, rng):
        X = rng.standard_normal((4, 3))
        first, second = RbfKernel(1.0), RbfKernel(2.0)
        product = ProductKernel([(slice(0, 1), first), (slice(1, 3), second)])
        expected = first.matrix(X[:, :1]).data * second.matrix(X[:, 1:]).data
        np.testing.assert_allclose(product.matrix(X).data, expected)


class TestMedianBandwidth:
    def test_two_particles(self):
        X = np.array([[0.0], [2.0]])
        assert median_bandwidth2(X) == pytest.approx(4.0 / math.log(3.0))

    def test_identical_particles_use_floor(self):
        bandwidth2 = median_bandwidth2(np.ones((4, 2)))
        assert bandwidth2 > 0
        np.testing.assert_array_equal(RbfKernel(bandwidth2).matrix(np.ones((4, 2))).data, 1.0)


class TestSpectralNormalize:
    def test_diagonal_matrix(self):
        result = spectral_normalize(np.diag([3.0, 1.0]), power_iters=50)
        assert result.sigma == pytest.approx(3.0, rel=1e-12)
        np.testing.assert_allclose(result.weight, np.diag([1.0, 1.0 / 3.0]), atol=1e-12)

    def test_identity_unchanged(self):
        result = spectral_normalize(np.eye(3), power_iters=1)
        assert result.sigma == pytest.approx(1.0)
        np.testing.assert_allclose(result.weight, np.eye(3))

    def test_random_matrix_against_svd(self, rng):
        W = rng.standard_normal((8, 8))
        sigma, _, _ = power_iteration(W, 50)
        exact = np.linalg.svd(W, compute_uv=False)[0]
        assert abs(sigma - exact) / exact < 0.01

    def test_zero_matrix_is_degenerate(self):
        result = spectral_normalize(np.zeros((2, 3)))
        assert result.degenerate
        assert result.sigma == 0.0
        np.testing.assert_array_equal(result.weight, np.zeros((2, 3)))

    def test_post_scale(self):
        result = spectral_normalize(np.diag([4.0, 2.0]), power_iters=50, scale=2.0)
        np.testing.assert_allclose(result.weight, np.diag([2.0, 1.0]), atol=1e-12)

    def test_requires_an_iteration(self):
        with pytest.raises(ValueError):
            spectral_normalize(np.eye(2), power_iters=0)
