"""
Oracle and invariant checks behind ``hk validate``.

Every check produces a value and a tolerance; it passes when the value is at
most the tolerance. A check that raises counts as failed with a NaN value.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.linalg import eigvalsh

from src.constants import ORACLE_RESIDUAL_TOLERANCE
from src.core.autodiff import ParamStore, Tensor
from src.core import autodiff as ad
from src.core.gradcheck import check_param_gradients
from src.core.nn import Mlp, MlpSpec
from src.genmodel.config import GanConfig
from src.genmodel.losses import mmd2
from src.genmodel.objectives import kernel_objective_rbf
from src.hklearn.measures import kde_weights
from src.kernels.deep_rbf import DeepRbfKernel
from src.kernels.random_feature import RandomFeatureKernel
from src.oracles.bounds import lower_bound_peak_time, ricci_bound_exponent, ricci_lower_bound
from src.oracles.heat import (
    a_t_line,
    heat_equation_residual,
    heat_kernel_circle,
    heat_kernel_line,
    l2_norm_decay_check,
    varadhan_residual,
)
from src.transport.exact import exact_ot_small
from src.transport.sinkhorn import cost_matrix, sinkhorn

LineKernel = Callable[[float, float, float], float]

VARADHAN_TIMES = (1e-1, 1e-2, 1e-3, 1e-4)
BOUND_PROBES = tuple(np.logspace(-1, 2, 16))
RICCI_EXAMPLE = 0.02531


@dataclass
class CheckResult:
    suite: str
    name: str
    value: float
    tolerance: float
    passed: bool


@dataclass
class ValidationReport:
    checks: List[CheckResult] = field(default_factory=list)

    COLUMNS = ("suite", "check", "value", "tolerance", "status")

    @property
    def all_passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_rows(self) -> List[list]:
        return [
            [c.suite, c.name, c.value, c.tolerance, "PASS" if c.passed else "FAIL"]
            for c in self.checks
        ]

    def format_table(self) -> str:
        frame = pd.DataFrame(self.to_rows(), columns=list(self.COLUMNS))
        table = frame.to_string(
            index=False, formatters={"value": "{:.3e}".format, "tolerance": "{:.1e}".format}
        )
        summary = f"{len(self.checks) - len(self.failures)}/{len(self.checks)} checks passed"
        return f"{table}\n{summary}"


def _max_increase(values: Sequence[float]) -> float:
    """Largest step up along ``values``; <= 0 means non-increasing."""
    return float(np.max(np.diff(values)))


class ValidationController:
    """
    Runs the oracle suites.

    Args:
        line_kernel: Line heat kernel under test, (t, x0, x) -> value.
        debug: Enable debug logging.
    """

    def __init__(self, line_kernel: LineKernel = heat_kernel_line, debug: bool = False):
        self.line_kernel = line_kernel
        self.debug = debug
        self.logger = logging.getLogger(__name__)
        if debug:
            self.logger.setLevel(logging.DEBUG)

    def _check(self, report: ValidationReport, suite: str, name: str, tolerance: float, fn) -> None:
        try:
            value = float(fn())
            passed = math.isfinite(value) and value <= tolerance
        except Exception as e:
            self.logger.error(f"Check {suite}/{name} raised: {e}")
            value, passed = math.nan, False
        report.checks.append(CheckResult(suite, name, value, tolerance, passed))
        if not passed:
            self.logger.warning(f"Check {suite}/{name} failed: {value} > {tolerance}")

    # ------------------------------------------------------------------ oracles

    def _line_checks(self, report: ValidationReport) -> None:
        k = self.line_kernel
        grid = np.linspace(-30.0, 30.0, 60001)
        checks: List[Tuple[str, float, Callable[[], float]]] = [
            ("peak_t0.25", 1e-12, lambda: abs(k(0.25, 0.0, 0.0) - 1.0 / math.sqrt(math.pi))),
            (
                "peak_equals_a_t",
                1e-12,
                lambda: max(abs(k(t, 0.7, 0.7) - a_t_line(t)) for t in (0.01, 0.1, 1.0, 10.0)),
            ),
            ("symmetry", 1e-15, lambda: abs(k(1.0, 0.3, -1.2) - k(1.0, -1.2, 0.3))),
            ("normalization", 1e-6, lambda: abs(trapezoid(k(1.0, 0.0, grid), grid) - 1.0)),
            (
                "heat_equation",
                ORACLE_RESIDUAL_TOLERANCE,
                lambda: heat_equation_residual(lambda t, x: k(t, 0.0, x), 1.0, 0.5),
            ),
            (
                "varadhan_t1e-4",
                1e-2,
                lambda: varadhan_residual(k, lambda a, b: abs(b - a), 1e-4, 0.0, 1.0),
            ),
            (
                "varadhan_monotone",
                0.0,
                lambda: _max_increase(
                    [varadhan_residual(k, lambda a, b: abs(b - a), t, 0.0, 1.0) for t in VARADHAN_TIMES]
                ),
            ),
        ]
        for name, tol, fn in checks:
            self._check(report, "line", name, tol, fn)
        self._check(
            report,
            "line",
            "l2_decay_slope",
            1e-2,
            lambda: abs(l2_norm_decay_check("line-1d", np.logspace(-1, 1, 9)).slope + 0.5),
        )
        self._check(
            report,
            "line",
            "l2_decay_ratio",
            1e-6,
            lambda: abs(l2_norm_decay_check("line-1d", [1.0, 2.0]).ratios()[0] - 1.0 / math.sqrt(2.0)),
        )

    def _circle_checks(self, report: ValidationReport) -> None:
        theta = np.linspace(-math.pi, math.pi, 4001)
        checks = [
            (
                "normalization",
                1e-6,
                lambda: abs(trapezoid(heat_kernel_circle(1.0, 0.0, theta), theta) - 1.0),
            ),
            (
                "periodicity",
                1e-12,
                lambda: abs(
                    heat_kernel_circle(1.0, 0.0, 0.7) - heat_kernel_circle(1.0, 0.0, 0.7 + 2 * math.pi)
                ),
            ),
            (
                "uniform_limit_t100",
                1e-6,
                lambda: abs(heat_kernel_circle(100.0, 0.0, 1.3) - 1.0 / (2.0 * math.pi)),
            ),
            (
                "heat_equation",
                ORACLE_RESIDUAL_TOLERANCE,
                lambda: heat_equation_residual(lambda t, x: heat_kernel_circle(t, 0.0, x), 1.0, 0.5),
            ),
        ]
        for name, tol, fn in checks:
            self._check(report, "circle", name, tol, fn)

    def _bound_checks(self, report: ValidationReport) -> None:
        peak = lower_bound_peak_time(2, 1.0, 0.1)
        late = [t for t in BOUND_PROBES if t >= peak]
        checks = [
            ("dim1_exponent", 0.0, lambda: abs(ricci_bound_exponent(1.0, 1, 1.0, 0.1))),
            (
                "dim1_monotone",
                0.0,
                lambda: _max_increase([ricci_lower_bound(t, 1, 1.0, 0.1) for t in BOUND_PROBES]),
            ),
            (
                "dim2_monotone_after_peak",
                0.0,
                lambda: _max_increase([ricci_lower_bound(t, 2, 1.0, 0.1) for t in late]),
            ),
            ("dim2_value", 1e-4, lambda: abs(ricci_lower_bound(1.0, 2, 1.0, 0.1) - RICCI_EXAMPLE)),
        ]
        for name, tol, fn in checks:
            self._check(report, "ricci_bound", name, tol, fn)

    # --------------------------------------------------------------- invariants

    @staticmethod
    def sinkhorn_relative_error(instances: int = 50, seed: int = 0) -> float:
        """Worst relative gap to the exact transport cost on small instances."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(instances):
            n, m = rng.integers(2, 7, size=2)
            C = cost_matrix(rng.standard_normal((n, 2)), rng.standard_normal((m, 2))).data
            a, b = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m))
            exact = exact_ot_small(a, b, C)
            approx = sinkhorn(a, b, C, eps_reg=1e-3 * C.mean(), max_iter=5000, warn=False).value
            worst = max(worst, abs(approx - exact) / max(exact, 1e-12))
        return worst

    @staticmethod
    def min_gram_eigenvalue(family: str, draws: int = 100, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        lowest = math.inf
        for _ in range(draws):
            spec = MlpSpec.make(2, [16], 4, activation="tanh")
            if family == "deep-rbf":
                kernel = DeepRbfKernel(spec, rng)
            else:
                kernel = RandomFeatureKernel(spec, rng)
            X = rng.standard_normal((int(rng.integers(2, 33)), 2))
            gram = kernel.matrix(X).data
            lowest = min(lowest, float(eigvalsh(0.5 * (gram + gram.T))[0]))
        return lowest

    @staticmethod
    def mmd_reduction_gap(seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        kernel = DeepRbfKernel(MlpSpec.make(2, [16], 4, activation="tanh"), rng)
        X, Y = rng.standard_normal((12, 2)), rng.standard_normal((9, 2)) + 0.5
        cfg = GanConfig(
            gamma1=4.0, gamma2=0.0, gamma3=0.0, gamma4=0.0, gamma5=0.0, alpha=0.0, beta=0.0, lam=4.0
        )
        objective = kernel_objective_rbf(kernel, X, Y, None, cfg)
        return abs(float(objective.data) + float(mmd2(kernel, X, Y, "biased").data))

    @staticmethod
    def kde_scale_gap(seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        kernel = DeepRbfKernel(MlpSpec.make(1, [8], 4, activation="tanh"), rng)
        gram = kernel.matrix(rng.uniform(-2.0, 2.0, (16, 1))).data
        return float(np.max(np.abs(kde_weights(Tensor(gram)).data - kde_weights(Tensor(3.7 * gram)).data)))

    @staticmethod
    def mlp_gradient_error(seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        params = ParamStore()
        net = Mlp(MlpSpec.make(3, [5], 2, activation="tanh"), params, "check", rng)
        x = rng.standard_normal((4, 3))
        errors = check_param_gradients(lambda: ad.tsum(ad.square(net(x))), params)
        return max(errors.values())

    def _invariant_checks(self, report: ValidationReport) -> None:
        self._check(report, "transport", "sinkhorn_vs_exact", 0.02, self.sinkhorn_relative_error)
        self._check(
            report, "kernels", "psd_deep_rbf", 1e-6, lambda: -self.min_gram_eigenvalue("deep-rbf")
        )
        self._check(
            report,
            "kernels",
            "psd_random_feature",
            1e-6,
            lambda: -self.min_gram_eigenvalue("random-feature"),
        )
        self._check(report, "hklearn", "kde_scale_cancellation", 1e-14, self.kde_scale_gap)
        self._check(report, "genmodel", "mmd_gan_reduction", 1e-9, self.mmd_reduction_gap)
        self._check(report, "autodiff", "mlp_gradient", 1e-4, self.mlp_gradient_error)

    def run_validate(self, include_invariants: bool = True) -> ValidationReport:
        """
        Run the oracle suites (and the invariant suites unless disabled).

        Returns:
            ValidationReport; ``all_passed`` is the overall verdict.
        """
        report = ValidationReport()
        self._line_checks(report)
        self._circle_checks(report)
        self._bound_checks(report)
        if include_invariants:
            self._invariant_checks(report)
        self.logger.info(
            f"Validation: {len(report.checks) - len(report.failures)}/{len(report.checks)} passed"
        )
        return report
