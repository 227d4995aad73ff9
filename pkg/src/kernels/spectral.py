"""
Spectral normalization of weight matrices by power iteration.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.constants import NORM_FLOOR

logger = logging.getLogger(__name__)


@dataclass
class SpectralNormResult:
    """Normalized weight plus the power-iteration state that produced it."""

    weight: np.ndarray
    sigma: float
    u: np.ndarray
    v: np.ndarray
    degenerate: bool = False


def _l2_normalize(vec: np.ndarray) -> np.ndarray:
    return vec / (np.linalg.norm(vec) + NORM_FLOOR)


def power_iteration(
    weight: np.ndarray,
    power_iters: int,
    u0: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Estimate the largest singular value of ``weight``.

    Args:
        weight: 2-D matrix.
        power_iters: Number of alternating left/right updates (>= 1).
        u0: Warm-start left vector, shape (rows,).
        rng: Source for a random start when ``u0`` is not given.

    Returns:
        (sigma, u, v) with sigma = u^T W v.
    """
    if power_iters < 1:
        raise ValueError("power_iters must be >= 1")
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 2:
        raise ValueError(f"Expected a 2-D weight, got shape {weight.shape}")
    if u0 is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        u0 = rng.standard_normal(weight.shape[0])
    u = _l2_normalize(np.asarray(u0, dtype=np.float64))
    v = _l2_normalize(weight.T @ u)
    for _ in range(power_iters):
        v = _l2_normalize(weight.T @ u)
        u = _l2_normalize(weight @ v)
    sigma = float(u @ weight @ v)
    return sigma, u, v


def spectral_normalize(
    weight: np.ndarray,
    power_iters: int = 1,
    u0: Optional[np.ndarray] = None,
    scale: float = 1.0,
) -> SpectralNormResult:
    """
    Divide ``weight`` by its power-iteration spectral norm estimate.

    A zero matrix is returned unchanged with sigma 0 and ``degenerate`` set.

    Args:
        weight: 2-D matrix.
        power_iters: Power iterations (>= 1).
        u0: Optional warm-start vector carried between calls.
        scale: Factor applied after normalization.
    """
    weight = np.asarray(weight, dtype=np.float64)
    if not np.any(weight):
        logger.warning("Spectral normalization of a zero matrix; returning it unchanged")
        rows, cols = weight.shape
        return SpectralNormResult(
            weight.copy(), 0.0, np.zeros(rows), np.zeros(cols), degenerate=True
        )
    sigma, u, v = power_iteration(weight, power_iters, u0=u0)
    return SpectralNormResult(weight / sigma * scale, sigma, u, v)
