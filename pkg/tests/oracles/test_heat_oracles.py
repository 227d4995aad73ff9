import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from src.core.errors import DomainError
from src.oracles.bounds import (
    lower_bound_peak_time,
    lower_bound_thm4,
    ricci_bound_exponent,
    ricci_lower_bound,
)
from src.oracles.heat import (
    AnalyticKernel,
    a_t_line,
    heat_equation_residual,
    heat_kernel_circle,
    heat_kernel_line,
    l2_kernel_distance,
    l2_norm_decay_check,
    varadhan_residual,
)


class TestLineKernel:
    def test_peak_value(self):
        assert heat_kernel_line(0.25, 0.0, 0.0) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-12)
        assert a_t_line(0.25) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-12)

    @pytest.mark.parametrize("t", [0.05, 0.5, 3.0])
    def test_unit_mass(self, t):
        kernel = AnalyticKernel("line-1d")
        grid = kernel.support_grid(t)
        assert trapezoid(kernel(t, 0.0, grid), grid) == pytest.approx(1.0, abs=1e-6)

    def test_symmetric_in_arguments(self):
        assert heat_kernel_line(0.3, 0.2, 1.1) == heat_kernel_line(0.3, 1.1, 0.2)

    @pytest.mark.parametrize("t,x", [(1.0, 0.5), (0.2, -0.3), (2.0, 1.5)])
    def test_satisfies_heat_equation(self, t, x):
        residual = heat_equation_residual(lambda s, y: heat_kernel_line(s, 0.0, y), t, x)
        assert residual < 1e-5

    def test_varadhan_residual_shrinks_with_time(self):
        kernel = AnalyticKernel("line-1d")
        residuals = [
            varadhan_residual(kernel, kernel.geodesic, t, 0.0, 1.0) for t in (1e-2, 1e-3, 1e-4)
        ]
        assert residuals[0] > residuals[1] > residuals[2]
        assert residuals[-1] < 2e-3

    def test_squared_norm_decays_as_inverse_square_root(self):
        fit = l2_norm_decay_check("line-1d", [0.5, 1.0, 2.0, 4.0])
        assert fit.slope == pytest.approx(-0.5, abs=1e-6)
        for ratio in fit.ratios():
            assert ratio == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-6)

    @pytest.mark.parametrize("t", [0.0, -1.0])
    def test_non_positive_time(self, t):
        with pytest.raises(DomainError):
            heat_kernel_line(t, 0.0, 1.0)

    def test_heat_equation_step_must_be_smaller_than_time(self):
        with pytest.raises(DomainError):
            heat_equation_residual(lambda s, y: heat_kernel_line(s, 0.0, y), 1e-5, 0.0)


class TestCircleKernel:
    def test_periodic(self):
        theta = np.array([0.1, 1.0, 2.5])
        np.testing.assert_allclose(
            heat_kernel_circle(0.4, 0.0, theta),
            heat_kernel_circle(0.4, 0.0, theta + 2.0 * np.pi),
            rtol=1e-12,
        )

    def test_short_time_matches_line(self):
        assert heat_kernel_circle(0.01, 0.0, 0.3) == pytest.approx(
            heat_kernel_line(0.01, 0.0, 0.3), rel=1e-12
        )

    def test_long_time_approaches_uniform_density(self):
        assert heat_kernel_circle(50.0, 0.0, 1.0) == pytest.approx(1.0 / (2.0 * np.pi), rel=1e-6)

    def test_unit_mass(self):
        kernel = AnalyticKernel("circle")
        grid = kernel.support_grid(0.5)
        assert trapezoid(kernel(0.5, 0.0, grid), grid) == pytest.approx(1.0, abs=1e-8)

    def test_geodesic_wraps(self):
        kernel = AnalyticKernel("circle")
        assert kernel.geodesic(0.0, 2.0 * np.pi - 0.5) == pytest.approx(0.5)

    def test_squared_norm_flattens(self):
        fit = l2_norm_decay_check("circle", [2.0, 4.0, 8.0])
        assert fit.slope > -0.1

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            AnalyticKernel("sphere")


class TestL2Distance:
    def test_zero_for_identical_functions(self):
        grid = np.linspace(-3, 3, 101)
        assert l2_kernel_distance(np.sin, np.sin, grid) == 0.0

    def test_constant_offset(self):
        grid = np.linspace(0.0, 2.0, 11)
        assert l2_kernel_distance(np.ones_like(grid), np.zeros_like(grid), grid) == pytest.approx(2.0)

    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            l2_kernel_distance(np.sin, np.cos, [0.0, 0.0, 1.0])


class TestRicciBound:
    def test_one_dimension_has_no_exponential_factor(self):
        assert ricci_bound_exponent(1.0, 1, 1.0, 0.1) == 0.0
        assert ricci_lower_bound(1.0, 1, 1.0, 0.1) == pytest.approx(
            math.gamma(1.5) / math.sqrt(math.pi), rel=1e-12
        )

    def test_two_dimensional_value(self):
        assert ricci_lower_bound(1.0, 2, 1.0, 0.1) == pytest.approx(0.02531, abs=1e-4)

    def test_peak_time(self):
        peak = lower_bound_peak_time(2, 1.0, 0.1)
        assert peak == pytest.approx(math.pi**2 / 3.9)
        at_peak = ricci_lower_bound(peak, 2, 1.0, 0.1)
        assert ricci_lower_bound(0.5 * peak, 2, 1.0, 0.1) < at_peak
        assert ricci_lower_bound(2.0 * peak, 2, 1.0, 0.1) < at_peak

    def test_scales_inversely_with_constant(self):
        base = ricci_lower_bound(0.7, 3, 2.0, 1.0)
        assert ricci_lower_bound(0.7, 3, 2.0, 1.0, C_eps=4.0) == pytest.approx(base / 4.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"dim": 0, "K": 1.0, "eps": 0.1},
            {"dim": 2, "K": 0.0, "eps": 0.1},
            {"dim": 2, "K": 1.0, "eps": 0.0},
            {"dim": 2, "K": 1.0, "eps": 4.0},
        ],
    )
    def test_domain_errors(self, kwargs):
        with pytest.raises(DomainError):
            ricci_lower_bound(1.0, **kwargs)
        with pytest.raises(DomainError):
            lower_bound_peak_time(**kwargs)

    def test_non_positive_time(self):
        with pytest.raises(DomainError):
            ricci_lower_bound(0.0, 2, 1.0, 0.1)

    def test_public_name_matches_bound(self):
        assert lower_bound_thm4(1.0, 2, 1.0, 0.1, C_eps=2.0) == ricci_lower_bound(1.0, 2, 1.0, 0.1, 2.0)
        assert lower_bound_thm4(3.0, 1, 1.0, 0.1) < lower_bound_thm4(1.0, 1, 1.0, 0.1)
