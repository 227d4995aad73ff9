"""
Closed-form heat kernels and checks derived from them.

The line kernel is exp(-(x - x0)^2 / 4t) / sqrt(4 pi t). The circle kernel
of radius r is the periodic image sum of the line kernel in arc length.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from src.constants import CIRCLE_TAIL_TOLERANCE
from src.core.errors import DomainError

logger = logging.getLogger(__name__)

ArrayOrFloat = Union[float, np.ndarray]

_MAX_IMAGE_TERMS = 100000


def _check_time(t: float) -> None:
    if not np.all(np.asarray(t) > 0):
        raise DomainError(f"Diffusion time must be positive, got {t}")


def heat_kernel_line(t: float, x0: ArrayOrFloat, x: ArrayOrFloat) -> ArrayOrFloat:
    """Heat kernel on the real line."""
    _check_time(t)
    diff = np.asarray(x, dtype=np.float64) - np.asarray(x0, dtype=np.float64)
    value = np.exp(-diff * diff / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)
    return float(value) if np.ndim(value) == 0 else value


def a_t_line(t: float) -> float:
    """Peak value 1 / sqrt(4 pi t) of the line kernel."""
    _check_time(t)
    return float(1.0 / np.sqrt(4.0 * np.pi * t))


def circle_image_terms(t: float, radius: float = 1.0, tol: float = CIRCLE_TAIL_TOLERANCE) -> int:
    """
    Number of periodic images per side so the dropped tail is below ``tol``.

    With the arc offset wrapped into [-pi r, pi r], the image m sits at least
    2 pi r (|m| - 1/2) away; the Gaussian decay makes the first dropped pair
    dominate the tail.
    """
    _check_time(t)
    if radius <= 0:
        raise DomainError(f"Radius must be positive, got {radius}")
    period = 2.0 * np.pi * radius
    peak = 1.0 / np.sqrt(4.0 * np.pi * t)
    for terms in range(1, _MAX_IMAGE_TERMS):
        nearest = period * (terms + 0.5)
        if 4.0 * peak * np.exp(-nearest * nearest / (4.0 * t)) < tol:
            return terms
    logger.warning(f"Circle kernel truncation capped at {_MAX_IMAGE_TERMS} images")
    return _MAX_IMAGE_TERMS


def heat_kernel_circle(
    t: float,
    theta0: ArrayOrFloat,
    theta: ArrayOrFloat,
    radius: float = 1.0,
    n_terms: Optional[int] = None,
) -> ArrayOrFloat:
    """
    Heat kernel on a circle of ``radius`` as a density in arc length.

    Args:
        t: Diffusion time.
        theta0: Source angle(s).
        theta: Target angle(s).
        radius: Circle radius.
        n_terms: Images per side; chosen automatically when omitted.
    """
    _check_time(t)
    if n_terms is None:
        n_terms = circle_image_terms(t, radius)
    if n_terms < 1:
        raise DomainError("n_terms must be >= 1")
    delta = np.asarray(theta, dtype=np.float64) - np.asarray(theta0, dtype=np.float64)
    wrapped = np.mod(delta + np.pi, 2.0 * np.pi) - np.pi
    arc = radius * wrapped
    period = 2.0 * np.pi * radius
    images = np.arange(-n_terms, n_terms + 1, dtype=np.float64)
    offsets = np.expand_dims(arc, -1) + period * images
    value = np.sum(np.exp(-offsets * offsets / (4.0 * t)), axis=-1) / np.sqrt(4.0 * np.pi * t)
    return float(value) if np.ndim(value) == 0 else value


@dataclass
class AnalyticKernel:
    """A closed-form heat kernel with its geodesic distance."""

    variant: str = "line-1d"
    radius: float = 1.0
    n_terms: Optional[int] = None

    def __post_init__(self):
        if self.variant not in ("line-1d", "circle"):
            raise ValueError(f"Unknown analytic kernel '{self.variant}'")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def __call__(self, t: float, x0: ArrayOrFloat, x: ArrayOrFloat) -> ArrayOrFloat:
        """Kernel in the variant's coordinates (position, or arc length)."""
        if self.variant == "line-1d":
            return heat_kernel_line(t, x0, x)
        return heat_kernel_circle(
            t, np.asarray(x0) / self.radius, np.asarray(x) / self.radius, self.radius, self.n_terms
        )

    def geodesic(self, x0: ArrayOrFloat, x: ArrayOrFloat) -> ArrayOrFloat:
        diff = np.asarray(x, dtype=np.float64) - np.asarray(x0, dtype=np.float64)
        if self.variant == "line-1d":
            return np.abs(diff)
        half = np.pi * self.radius
        return np.abs(np.mod(diff + half, 2.0 * half) - half)

    def support_grid(self, t: float, points: int = 4001) -> np.ndarray:
        """Quadrature grid covering the kernel's mass around 0."""
        if self.variant == "circle":
            return np.linspace(-np.pi * self.radius, np.pi * self.radius, points)
        half_width = 12.0 * np.sqrt(2.0 * t)
        return np.linspace(-half_width, half_width, points)


def varadhan_residual(
    kernel_fn: Callable[[float, float, float], float],
    geodesic_fn: Callable[[float, float], float],
    t: float,
    x0: float,
    x: float,
) -> float:
    """|-4t log k(t, x0, x) - d(x0, x)^2|."""
    _check_time(t)
    value = float(kernel_fn(t, x0, x))
    if value <= 0:
        raise DomainError(f"Kernel value {value} is not positive")
    distance = float(geodesic_fn(x0, x))
    return abs(-4.0 * t * np.log(value) - distance * distance)


def _values_on(fn_or_values, grid: np.ndarray) -> np.ndarray:
    if callable(fn_or_values):
        return np.asarray(fn_or_values(grid), dtype=np.float64)
    values = np.asarray(fn_or_values, dtype=np.float64)
    if values.shape != grid.shape:
        raise ValueError(f"Values shape {values.shape} does not match grid {grid.shape}")
    return values


def l2_kernel_distance(f, g, grid: Sequence[float]) -> float:
    """
    Trapezoid approximation of the integral of (f - g)^2 over the grid span.

    ``f`` and ``g`` are callables on arrays or values sampled on ``grid``.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("Grid needs at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("Grid must be strictly increasing")
    diff = _values_on(f, grid) - _values_on(g, grid)
    return float(trapezoid(diff * diff, grid))


def heat_equation_residual(
    kernel_fn: Callable[[float, ArrayOrFloat], ArrayOrFloat],
    t: float,
    x: float,
    dt: float = 1e-4,
    dx: float = 1e-4,
) -> float:
    """
    |dk/dt - d^2k/dx^2| by central differences at (t, x).

    Args:
        kernel_fn: k(t, x) with the source fixed.
    """
    if not 0 < dt < t:
        raise DomainError(f"Need 0 < dt < t, got dt={dt}, t={t}")
    if dx <= 0:
        raise DomainError("dx must be positive")
    if dt > 0.1 * t or dx > 0.1:
        raise DomainError(f"Step sizes too large for a derivative check: dt={dt}, dx={dx}")
    time_derivative = (kernel_fn(t + dt, x) - kernel_fn(t - dt, x)) / (2.0 * dt)
    space_derivative = (
        kernel_fn(t, x + dx) - 2.0 * kernel_fn(t, x) + kernel_fn(t, x - dx)
    ) / (dx * dx)
    return float(abs(time_derivative - space_derivative))


@dataclass
class DecayFit:
    """Least-squares fit of log(integral k^2) against log t."""

    slope: float
    intercept: float
    times: List[float] = field(default_factory=list)
    squared_norms: List[float] = field(default_factory=list)

    def ratios(self) -> List[float]:
        """Consecutive norm ratios."""
        return [b / a for a, b in zip(self.squared_norms[:-1], self.squared_norms[1:])]


def squared_l2_norm(kernel: AnalyticKernel, t: float, points: int = 4001) -> float:
    """Integral of k(t, 0, x)^2 over the kernel's support grid."""
    grid = kernel.support_grid(t, points)
    values = np.asarray(kernel(t, 0.0, grid))
    return float(trapezoid(values * values, grid))


def l2_norm_decay_check(
    variant: Union[str, AnalyticKernel], t_list: Sequence[float], radius: float = 1.0
) -> DecayFit:
    """
    Fit the decay exponent of the kernel's squared L2 norm in t.

    For the line the exact norm is 1 / sqrt(8 pi t), so the slope is -1/2; on
    the circle it flattens toward 1 / (2 pi r) for large t.
    """
    kernel = variant if isinstance(variant, AnalyticKernel) else AnalyticKernel(variant, radius)
    times = np.asarray(t_list, dtype=np.float64)
    if times.size < 2:
        raise ValueError("Need at least two times for a decay fit")
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("Times must be positive and strictly increasing")
    norms = np.array([squared_l2_norm(kernel, t) for t in times])
    slope, intercept = np.polyfit(np.log(times), np.log(norms), 1)
    return DecayFit(float(slope), float(intercept), times.tolist(), norms.tolist())
