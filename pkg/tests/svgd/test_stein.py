"""
Tests for SVGD updates, heat-kernel SVGD and the BNN regression harness.
"""

import math

import numpy as np
import pandas as pd
import pytest

from src.constants import BNN_STEP_SIZE
from src.core.errors import ConfigError, DomainError, NonFiniteError
from src.hklearn.config import HkConfig
from src.kernels.base import RbfKernel
from src.svgd.bnn import (
    METHODS,
    BnnPosterior,
    BnnSpec,
    bnn_regression,
    forward,
    init_particles,
    last_layer_kernel,
    predictive_log_likelihood,
)
from src.svgd.datasets import RegressionDataset, load_csv_dataset, make_dataset
from src.svgd.stein import (
    BananaTarget,
    GaussianTarget,
    MixtureTarget,
    ParticleSet,
    SvgdConfig,
    hk_svgd,
    kernel_repulsion,
    make_learned_kernel,
    rbf_median_kernel,
    svgd,
    svgd_step,
)


class TestTargets:
    def test_gaussian_closed_form_gradient_matches_autodiff(self, rng):
        target = GaussianTarget([1.0, -1.0], np.array([[1.0, 0.3], [0.3, 0.5]]))
        X = rng.standard_normal((4, 2))
        autodiff = super(GaussianTarget, target).grad_log_prob(X)
        np.testing.assert_allclose(target.grad_log_prob(X), autodiff, atol=1e-12)

    def test_gaussian_log_density(self):
        target = GaussianTarget([0.0], 1.0)
        assert target.log_prob([[0.0]])[0] == pytest.approx(-0.5 * math.log(2.0 * math.pi))

    def test_mixture_gradient_is_finite(self, rng):
        target = MixtureTarget([[-2.0, 0.0], [2.0, 0.0]], [0.5, 0.5])
        assert np.all(np.isfinite(target.grad_log_prob(rng.standard_normal((5, 2)))))

    def test_banana_is_two_dimensional(self):
        with pytest.raises(ValueError):
            BananaTarget().log_prob(np.zeros((2, 3)))

    def test_non_finite_particles(self):
        with pytest.raises(NonFiniteError):
            ParticleSet(np.array([[np.nan, 0.0]]))


class TestSvgdStep:
    def test_single_particle_follows_score(self):
        particles = svgd_step(ParticleSet([[2.0]]), GaussianTarget([0.0]), RbfKernel(1.0), 0.1)
        np.testing.assert_allclose(particles.positions, [[1.8]], atol=1e-14)
        assert particles.iteration == 1

    def test_mirror_symmetry(self):
        particles = ParticleSet([[-0.7], [0.7]])
        moved = svgd_step(particles, GaussianTarget([0.0]), RbfKernel(1.0), 0.05)
        assert moved.positions[0, 0] == pytest.approx(-moved.positions[1, 0], abs=1e-14)

    def test_zero_step_is_identity(self, rng):
        particles = ParticleSet(rng.standard_normal((5, 2)))
        moved = svgd_step(particles, GaussianTarget([0.0, 0.0]), rbf_median_kernel(particles), 0.0)
        np.testing.assert_array_equal(moved.positions, particles.positions)

    def test_negative_step(self):
        with pytest.raises(ValueError):
            svgd_step(ParticleSet([[0.0]]), GaussianTarget([0.0]), RbfKernel(1.0), -0.1)

    def test_repulsion_pushes_particles_apart(self):
        repulsion = kernel_repulsion(RbfKernel(1.0), np.array([[-0.5], [0.5]]))
        assert repulsion[0, 0] < 0 < repulsion[1, 0]

    def test_median_bandwidth(self):
        kernel = rbf_median_kernel(np.array([[0.0], [2.0]]))
        assert kernel.bandwidth2 == pytest.approx(4.0 / math.log(3.0))

    def test_adagrad_run_stays_finite(self, rng):
        cfg = SvgdConfig(step_size=0.1, iterations=5, adagrad=True)
        particles = svgd(GaussianTarget([0.0, 0.0]), ParticleSet(rng.standard_normal((6, 2))), cfg)
        assert particles.iteration == 5
        assert np.all(np.isfinite(particles.positions))

    def test_unknown_config_key(self):
        with pytest.raises(ConfigError):
            SvgdConfig.from_dict({"steps": 3})


class TestHkSvgd:
    def test_zero_step_keeps_particles_and_learns_kernel(self, rng):
        positions = rng.standard_normal((6, 2))
        kernel = make_learned_kernel(2, rng, hidden=[8])
        particles, trajectory = hk_svgd(
            GaussianTarget([0.0, 0.0]),
            ParticleSet(positions),
            HkConfig(inner_steps=1, sinkhorn_iters=30),
            SvgdConfig(step_size=0.0, iterations=2),
            kernel,
            rng,
        )
        np.testing.assert_array_equal(particles.positions, positions)
        assert len(trajectory) == 2
        assert particles.iteration == 2

    def test_moves_toward_target(self, rng):
        start = rng.standard_normal((8, 1)) + 4.0
        particles, _ = hk_svgd(
            GaussianTarget([0.0]),
            ParticleSet(start),
            HkConfig(inner_steps=1, sinkhorn_iters=30),
            SvgdConfig(step_size=0.2, iterations=5),
            make_learned_kernel(1, rng, hidden=[8]),
            rng,
        )
        assert abs(particles.mean()[0]) < abs(start.mean())


@pytest.mark.slow
def test_svgd_matches_gaussian_moments():
    rng = np.random.default_rng(0)
    target = GaussianTarget([1.0, -1.0], np.diag([1.0, 0.5]))
    particles = svgd(
        target,
        ParticleSet(rng.standard_normal((50, 2))),
        SvgdConfig(step_size=0.1, iterations=500),
    )
    np.testing.assert_allclose(particles.mean(), [1.0, -1.0], atol=0.2)
    ratio = particles.variance() / np.array([1.0, 0.5])
    assert np.all((ratio > 0.5) & (ratio < 1.5))


class TestDatasets:
    @pytest.mark.parametrize("n,fraction,sizes", [(10, 0.9, (9, 1)), (3, 0.5, (2, 1)), (20, 0.05, (2, 18))])
    def test_split_sizes(self, rng, n, fraction, sizes):
        dataset = RegressionDataset(np.arange(n, dtype=float), np.arange(n, dtype=float))
        train, test = dataset.split(rng, fraction)
        assert (len(train), len(test)) == sizes
        assert sorted(np.concatenate([train.y, test.y])) == list(range(n))

    def test_split_needs_three_rows(self, rng):
        with pytest.raises(ValueError):
            RegressionDataset([[0.0], [1.0]], [0.0, 1.0]).split(rng)

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "boston.csv"
        pd.DataFrame({"a": [1.0, 2.0, 3.0], "b": [0.5, 0.1, 0.2], "y": [3.0, 2.0, 1.0]}).to_csv(
            path, index=False
        )
        dataset = load_csv_dataset(path)
        assert dataset.X.shape == (3, 2)
        np.testing.assert_array_equal(dataset.y, [3.0, 2.0, 1.0])
        assert dataset.name == "boston"

    def test_missing_csv_names_path(self, tmp_path):
        path = tmp_path / "missing.csv"
        with pytest.raises(FileNotFoundError, match="missing.csv"):
            load_csv_dataset(path)

    def test_unknown_synthetic_dataset(self, rng):
        with pytest.raises(ValueError):
            make_dataset("housing", rng)


class TestBnn:
    def test_layout(self):
        spec = BnnSpec(input_dim=3, hidden_units=4, particles=2, kernel_hidden=[4])
        assert spec.num_weights == 3 * 4 + 4 + 1 + 4 + 1
        assert spec.first_block.stop == spec.last_block.start
        assert spec.last_block.stop - spec.last_block.start == 5

    def test_default_last_layer_kernel_has_two_layers(self, rng):
        spec = BnnSpec(input_dim=1, hidden_units=4, particles=3)
        kernel = last_layer_kernel(spec, rng, init_particles(spec, rng))
        width = spec.last_block.stop - spec.last_block.start
        assert kernel.net.spec.num_layers == 2
        assert kernel.net.spec.widths == [width, 32, 32]

    def test_zero_weights_predict_zero(self, rng):
        spec = BnnSpec(input_dim=2, hidden_units=3, particles=2, kernel_hidden=[4])
        theta = np.zeros((2, spec.num_weights))
        np.testing.assert_array_equal(forward(spec, theta, rng.standard_normal((4, 2))).data, 0.0)

    def test_posterior_gradient_shape(self, rng):
        spec = BnnSpec(input_dim=1, hidden_units=3, particles=4, kernel_hidden=[4])
        posterior = BnnPosterior(spec, rng.standard_normal((6, 1)), rng.standard_normal(6))
        theta = init_particles(spec, rng)
        assert posterior.grad_log_prob(theta).shape == theta.shape

    def test_predictive_log_likelihood_single_particle(self):
        value = predictive_log_likelihood(np.zeros((1, 3)), np.ones(1), np.zeros(3))
        assert value == pytest.approx(-0.5 * math.log(2.0 * math.pi))

    def test_predictive_log_likelihood_identical_particles(self):
        single = predictive_log_likelihood(np.array([[0.3, -0.2]]), [2.0], np.array([0.0, 1.0]))
        double = predictive_log_likelihood(np.array([[0.3, -0.2]] * 2), [2.0, 2.0], np.array([0.0, 1.0]))
        assert double == pytest.approx(single)

    def test_predictive_log_likelihood_positive_variance(self):
        with pytest.raises(DomainError):
            predictive_log_likelihood(np.zeros((1, 2)), [0.0], np.zeros(2))

    @pytest.mark.parametrize("method", METHODS)
    def test_small_run_reports_finite_metrics(self, rng, method):
        dataset = make_dataset("linear", rng, n=20, noise=0.1)
        spec = BnnSpec(input_dim=1, hidden_units=4, particles=3, kernel_hidden=[4])
        result = bnn_regression(
            dataset,
            spec,
            method,
            rng,
            svgd_cfg=SvgdConfig(step_size=1e-3, iterations=2, adagrad=True),
            hk_cfg=HkConfig(outer_steps=1, inner_steps=1, sinkhorn_iters=20),
        )
        assert not result.diverged
        assert np.isfinite(result.rmse) and np.isfinite(result.test_ll)
        assert result.particles.shape == (3, spec.num_weights)
        assert result.metrics()["method"] == method

    def test_unknown_method(self, rng):
        dataset = make_dataset("linear", rng, n=10)
        with pytest.raises(ValueError):
            bnn_regression(dataset, BnnSpec(input_dim=1, kernel_hidden=[4]), "mcmc", rng)

    def test_input_dimension_mismatch(self, rng):
        dataset = make_dataset("linear", rng, n=10, dim=2)
        with pytest.raises(ConfigError):
            bnn_regression(dataset, BnnSpec(input_dim=1, kernel_hidden=[4]), "svgd", rng)


@pytest.mark.slow
def test_hk_svgd_keeps_pace_with_svgd_on_sinusoid():
    spec = BnnSpec(input_dim=1)
    svgd_cfg = SvgdConfig(step_size=BNN_STEP_SIZE, iterations=500, adagrad=True)
    hk_cfg = HkConfig(outer_steps=1, inner_steps=2, sinkhorn_iters=20)
    rmse = {"svgd": [], "hk-svgd": []}
    for seed in range(10):
        dataset = make_dataset("sinusoid", np.random.default_rng([seed, 0]), n=200)
        for method, scores in rmse.items():
            rng = np.random.default_rng([seed, 1])
            result = bnn_regression(dataset, spec, method, rng, svgd_cfg, hk_cfg)
            assert not result.diverged, result.error
            scores.append(result.rmse)
    assert np.median(rmse["hk-svgd"]) <= 1.05 * np.median(rmse["svgd"]), rmse
