"""
Tests for kernel-induced measures, the JKO objective and the learning loop.
"""

import math

import numpy as np
import pytest

from src.core.autodiff import Tensor
from src.core.errors import ConfigError, DomainError, NonFiniteError
from src.core.gradcheck import check_param_gradients
from src.hklearn.config import HkConfig
from src.hklearn.learner import HeatKernelLearner, heat_kernel_learning
from src.hklearn.measures import (
    MeasureSnapshot,
    kde_weights,
    normalized_kde,
    ratio_weights,
    uniform_measure,
    unnormalized_ratio_measure,
)
from src.hklearn.objective import hk_objective, hk_objective_terms, neg_entropy, offdiag_mean
from src.kernels.base import ConstantKernel, Kernel


class ExplodingKernel(Kernel):
    """Kernel whose evaluation always overflows."""

    def matrix(self, X, Y=None):
        raise NonFiniteError("overflow in kernel evaluation")


class TestMeasures:
    def test_single_point(self, deep_rbf):
        np.testing.assert_allclose(normalized_kde(deep_rbf, np.zeros((1, 2))).data, [1.0])

    def test_constant_kernel_gives_uniform_weights(self, rng):
        weights = normalized_kde(ConstantKernel(3.0), rng.standard_normal((5, 2))).data
        np.testing.assert_allclose(weights, np.full(5, 0.2))

    def test_matches_double_sum(self, rng, deep_rbf):
        X = rng.standard_normal((6, 2))
        G = deep_rbf.matrix(X).data
        expected = np.array([sum(G[j, i] for j in range(6)) for i in range(6)])
        expected /= expected.sum()
        np.testing.assert_allclose(normalized_kde(deep_rbf, X).data, expected, rtol=1e-12)

    def test_kernel_scale_cancels(self, rng, deep_rbf):
        G = deep_rbf.matrix(rng.standard_normal((5, 2)))
        np.testing.assert_allclose(kde_weights(G).data, kde_weights(G * 7.5).data, rtol=1e-12)

    def test_uniform_measure(self):
        np.testing.assert_array_equal(uniform_measure(4).weights, np.full(4, 0.25))

    def test_unnormalized_ratio_with_frozen_copy_is_uniform(self, rng, deep_rbf):
        X = rng.standard_normal((4, 2))
        np.testing.assert_allclose(
            unnormalized_ratio_measure(deep_rbf, deep_rbf, X).data, np.full(4, 0.25), rtol=1e-12
        )

    def test_ratio_rejects_empty_reference_column(self):
        reference = np.array([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(DomainError):
            ratio_weights(Tensor(np.ones((2, 2))), reference)

    def test_snapshot_rejects_mismatched_sizes(self):
        with pytest.raises(ValueError):
            MeasureSnapshot(np.full(3, 1 / 3), np.zeros((2, 2)))


class TestNegEntropy:
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_estimator_a_uniform(self, n):
        value = neg_entropy(np.full(n, 1.0 / n), estimator="A")
        assert float(value.data) == pytest.approx(-math.log(n), abs=1e-12)

    def test_estimator_a_range(self, rng):
        weights = rng.dirichlet(np.ones(6))
        value = float(neg_entropy(weights, estimator="A").data)
        assert -math.log(6) - 1e-12 <= value <= 0.0

    def test_estimator_b_matches_reference(self, rng, deep_rbf):
        X = rng.standard_normal((5, 2))
        G = deep_rbf.matrix(X).data
        w = normalized_kde(deep_rbf, X)
        expected = sum(w.data[i] * math.log(G[j, i]) for i in range(5) for j in range(5)) / 5
        value = neg_entropy(w, kernel=deep_rbf, X=X, estimator="B")
        assert float(value.data) == pytest.approx(expected, rel=1e-12)

    def test_estimator_a_rejects_zero_weight(self):
        with pytest.raises(DomainError):
            neg_entropy(np.array([0.0, 1.0]), estimator="A")

    def test_unknown_estimator(self):
        with pytest.raises(ValueError):
            neg_entropy(np.array([0.5, 0.5]), estimator="C")


class TestObjective:
    def test_penalty_only_with_constant_kernel(self, rng):
        X = rng.standard_normal((4, 2))
        cfg = HkConfig(alpha=0.0, beta=0.0, lam=0.5)
        nu = MeasureSnapshot(np.full(4, 0.25), X)
        value = hk_objective(ConstantKernel(2.0), X, nu, cfg)
        assert float(value.data) == pytest.approx(-1.0, abs=1e-12)

    def test_components_sum_to_objective(self, rng, deep_rbf):
        X = rng.standard_normal((5, 2))
        cfg = HkConfig(alpha=1.0, beta=5.0, lam=0.1, sinkhorn_iters=200)
        nu = MeasureSnapshot(np.full(5, 0.2), X)
        terms = hk_objective_terms(deep_rbf, X, nu, cfg).values()
        expected = (
            cfg.alpha * terms["entropy"] + cfg.beta * terms["wasserstein"] - cfg.lam * terms["penalty"]
        )
        assert terms["objective"] == pytest.approx(expected, abs=1e-12)
        assert terms["wasserstein"] >= 0

    def test_offdiag_mean_single_point(self):
        assert float(offdiag_mean(Tensor(np.ones((1, 1)))).data) == 0.0

    @pytest.mark.parametrize("estimator", ["A", "B"])
    def test_parameter_gradients(self, rng, deep_rbf, estimator):
        X = rng.standard_normal((4, 2))
        cfg = HkConfig(alpha=1.0, beta=0.0, lam=0.5, entropy_estimator=estimator)
        nu = MeasureSnapshot(np.full(4, 0.25), X)
        errors = check_param_gradients(lambda: hk_objective(deep_rbf, X, nu, cfg), deep_rbf.params)
        assert max(errors.values()) < 1e-4

    def test_nu_must_share_the_batch(self, rng, deep_rbf):
        nu = MeasureSnapshot(np.full(3, 1 / 3), np.zeros((3, 2)))
        with pytest.raises(ValueError):
            hk_objective(deep_rbf, rng.standard_normal((4, 2)), nu, HkConfig())


class TestHkConfig:
    def test_tau_is_derived(self):
        assert HkConfig(alpha=1.0, beta=5.0).tau == pytest.approx(0.1)
        assert math.isinf(HkConfig(beta=0.0).tau)

    def test_lambda_key(self):
        cfg = HkConfig.from_dict({"lambda": 0.3, "alpha": 2.0})
        assert cfg.lam == 0.3
        assert cfg.to_dict()["lambda"] == 0.3

    def test_contradictory_tau(self):
        with pytest.raises(ConfigError):
            HkConfig.from_dict({"alpha": 1.0, "beta": 5.0, "tau": 0.7})

    @pytest.mark.parametrize(
        "record", [{"alpha": -1.0}, {"entropy_estimator": "Z"}, {"learning_rate": 0.0}, {"gamma": 1}]
    )
    def test_invalid_records(self, record):
        with pytest.raises(ConfigError):
            HkConfig.from_dict(record)


class TestLearner:
    def test_zero_steps_leaves_kernel_unchanged(self, rng, deep_rbf):
        before = deep_rbf.params.snapshot()
        _, trajectory = heat_kernel_learning(
            rng.standard_normal((6, 2)), deep_rbf, HkConfig(outer_steps=0), rng
        )
        assert len(trajectory) == 0
        for name, value in before.items():
            np.testing.assert_array_equal(deep_rbf.params[name].data, value)

    def test_each_step_does_not_increase_objective(self, rng, deep_rbf):
        cfg = HkConfig(outer_steps=3, inner_steps=3, learning_rate=1e-2, sinkhorn_iters=60)
        trajectory = HeatKernelLearner(deep_rbf, cfg, rng).run(rng.standard_normal((8, 2)))
        assert len(trajectory) == 3
        assert not trajectory.aborted
        for record in trajectory.records:
            assert record.objective <= record.start_objective + 1e-9
            assert record.weights.sum() == pytest.approx(1.0)
        assert [r.step for r in trajectory.records] == [1, 2, 3]

    def test_uniform_initial_snapshot(self, rng, deep_rbf):
        learner = HeatKernelLearner(deep_rbf, HkConfig(measure_mode="uniform-init"), rng)
        nu = learner.snapshot_measure(rng.standard_normal((5, 2)))
        np.testing.assert_array_equal(nu.weights, np.full(5, 0.2))

    def test_unnormalized_mode_runs(self, rng, deep_rbf):
        cfg = HkConfig(
            outer_steps=2, inner_steps=2, measure_mode="unnormalized", sinkhorn_iters=40
        )
        trajectory = HeatKernelLearner(deep_rbf, cfg, rng).run(rng.standard_normal((6, 2)))
        assert len(trajectory) == 2
        assert np.all(np.isfinite(trajectory.objectives()))

    def test_minibatches(self, rng, deep_rbf):
        cfg = HkConfig(outer_steps=2, inner_steps=1, batch_size=4, sinkhorn_iters=40)
        trajectory = HeatKernelLearner(deep_rbf, cfg, rng).run(rng.standard_normal((10, 2)))
        assert all(record.weights.shape == (4,) for record in trajectory.records)

    def test_needs_two_points(self, rng, deep_rbf):
        with pytest.raises(ValueError):
            HeatKernelLearner(deep_rbf, HkConfig(), rng).run(np.zeros((1, 2)))

    def test_non_finite_kernel_aborts_run(self, rng):
        trajectory = HeatKernelLearner(ExplodingKernel(), HkConfig(outer_steps=3), rng).run(
            np.zeros((3, 2))
        )
        assert trajectory.aborted
        assert len(trajectory) == 0
        assert "overflow" in trajectory.error


@pytest.mark.slow
def test_twenty_full_batch_steps_never_increase_objective(deep_rbf):
    rng = np.random.default_rng(1)
    cfg = HkConfig(outer_steps=20, inner_steps=5, sinkhorn_iters=100)
    trajectory = HeatKernelLearner(deep_rbf, cfg, rng).run(rng.standard_normal((32, 2)))
    assert len(trajectory) == 20
    for record in trajectory.records:
        assert record.objective <= record.start_objective + 1e-9
