import numpy as np
import pytest

from src.core.hessian import finite_difference_cross_trace, hessian_trace_cross
from src.core.nn import MlpSpec
from src.kernels.base import RbfKernel
from src.kernels.deep_rbf import DeepRbfKernel


def _identity_feature_kernel(dim: int, rng) -> DeepRbfKernel:
    kernel = DeepRbfKernel(MlpSpec([dim, dim], ["identity"]), rng)
    kernel.params["h.W0"].data = np.eye(dim)
    kernel.params["h.b0"].data = np.zeros(dim)
    return kernel


class TestCrossTrace:
    @pytest.mark.parametrize("dim", [1, 2, 5])
    def test_identity_features_give_twice_dimension(self, rng, dim):
        kernel = _identity_feature_kernel(dim, rng)
        value = hessian_trace_cross(kernel, rng.standard_normal(dim))
        assert float(value.data) == pytest.approx(2.0 * dim, rel=1e-12)

    def test_gaussian_kernel_closed_form(self):
        assert float(hessian_trace_cross(RbfKernel(1.0), np.array([0.4])).data) == 2.0

    def test_gaussian_kernel_finite_difference_fallback(self):
        kernel = RbfKernel(1.0)
        value = hessian_trace_cross(kernel.pair_values, np.array([0.4]))
        assert float(value.data) == pytest.approx(2.0, rel=1e-3)

    def test_deep_rbf_closed_form_matches_stencil(self, rng, deep_rbf):
        X = rng.standard_normal((4, 2))
        closed = hessian_trace_cross(deep_rbf, X).data
        stencil = finite_difference_cross_trace(deep_rbf.pair_values, X).data
        np.testing.assert_allclose(closed, stencil, rtol=1e-3)

    def test_batch_returns_one_value_per_point(self, rng):
        kernel = _identity_feature_kernel(3, rng)
        assert hessian_trace_cross(kernel, rng.standard_normal((6, 3))).shape == (6,)
