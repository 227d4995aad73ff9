"""
Heat kernel lower bound on manifolds with Ricci curvature bounded below by
K > 0:

    k(t, x, y) >= Gamma(dim/2 + 1) / (C_eps (pi t)^(dim/2))
                  * exp(pi^2 (1 - dim) / ((4 - eps) K t))
"""

import numpy as np
from scipy.special import gammaln

from src.core.errors import DomainError


def _check_domain(dim: int, K: float, eps: float) -> None:
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    if K <= 0:
        raise DomainError(f"Curvature bound K must be positive, got {K}")
    if not 0 < eps < 4:
        raise DomainError(f"eps must lie in (0, 4), got {eps}")


def ricci_bound_exponent(t: float, dim: int, K: float, eps: float) -> float:
    """pi^2 (1 - dim) / ((4 - eps) K t); exactly 0 for dim = 1."""
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    _check_domain(dim, K, eps)
    return float(np.pi**2 * (1 - dim) / ((4.0 - eps) * K * t))


def ricci_lower_bound(t: float, dim: int, K: float, eps: float, C_eps: float = 1.0) -> float:
    """Lower bound on the heat kernel at time ``t``."""
    if C_eps <= 0:
        raise DomainError(f"C_eps must be positive, got {C_eps}")
    exponent = ricci_bound_exponent(t, dim, K, eps)
    log_prefactor = gammaln(dim / 2.0 + 1.0) - np.log(C_eps) - (dim / 2.0) * np.log(np.pi * t)
    return float(np.exp(log_prefactor + exponent))


lower_bound_thm4 = ricci_lower_bound


def lower_bound_peak_time(dim: int, K: float, eps: float) -> float:
    """
    Time at which the bound peaks; it increases before and decreases after.

    Zero for dim = 1, where the bound is a pure power decay.
    """
    _check_domain(dim, K, eps)
    c = np.pi**2 * (dim - 1) / ((4.0 - eps) * K)
    return float(2.0 * c / dim)
