"""
Discrepancies between a real batch X and a generated batch Y.

Every function returns an autodiff tensor, so the same code serves the
generator step (gradients through Y) and the kernel step (gradients through
the kernel parameters).
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.core import autodiff as ad
from src.core.autodiff import Tensor
from src.core.errors import DomainError
from src.core.hessian import hessian_trace_cross
from src.kernels.base import as_points

logger = logging.getLogger(__name__)

ESTIMATORS = ("unbiased", "biased")


@dataclass
class PairGrams:
    """k(X, X), k(Y, Y) and k(X, Y) evaluated once and shared."""

    xx: Tensor
    yy: Tensor
    xy: Tensor


def _data(X) -> np.ndarray:
    return np.asarray(getattr(X, "data", X), dtype=np.float64)


def pair_grams(kernel, X, Y) -> PairGrams:
    """
    Evaluate the three Gram blocks.

    Identical batches reuse the same-set evaluation for the cross block so
    that biased discrepancies between them vanish exactly.
    """
    X, Y = as_points(X), as_points(Y)
    xx = kernel.matrix(X)
    yy = kernel.matrix(Y)
    same = X.shape == Y.shape and np.array_equal(X.data, Y.data)
    xy = kernel.matrix(X) if same else kernel.matrix(X, Y)
    return PairGrams(xx, yy, xy)


def same_set_mean(gram: Tensor, estimator: str = "biased") -> Tensor:
    """Mean of a same-set Gram block; "unbiased" drops the diagonal."""
    if estimator == "biased":
        return ad.tmean(gram)
    if estimator == "unbiased":
        n = gram.shape[0]
        if n < 2:
            raise ValueError("The unbiased estimator needs at least two points per batch")
        return ad.tsum(gram * (1.0 - np.eye(n))) / float(n * (n - 1))
    raise ValueError(f"Unknown estimator '{estimator}'; use one of {ESTIMATORS}")


def mmd2_from(grams: PairGrams, estimator: str = "unbiased") -> Tensor:
    return (
        same_set_mean(grams.xx, estimator)
        + same_set_mean(grams.yy, estimator)
        - 2.0 * ad.tmean(grams.xy)
    )


def mmd2(kernel, X, Y, estimator: str = "unbiased") -> Tensor:
    """
    Squared maximum mean discrepancy E k(x,x') + E k(y,y') - 2 E k(x,y).

    Raises:
        ValueError: On an unknown estimator, or fewer than two points per
            batch for the unbiased one.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"Unknown estimator '{estimator}'; use one of {ESTIMATORS}")
    return mmd2_from(pair_grams(kernel, X, Y), estimator)


def smmd_sigma(kernel, X, zeta: float) -> Tensor:
    """
    1 / (zeta + E_x k(x, x) + E_x tr[d^2 k / dy dz](x, x)) over the real batch.

    Raises:
        ValueError: If ``zeta`` is not positive.
        DomainError: If the denominator is not positive.
    """
    if zeta <= 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    points = _data(as_points(X))
    denominator = (
        zeta
        + ad.tmean(kernel.diag(points))
        + ad.tmean(hessian_trace_cross(kernel, points))
    )
    if float(denominator.data) <= 0:
        raise DomainError(f"SMMD scale denominator is {float(denominator.data):.3e}")
    return 1.0 / denominator


def smmd2(kernel, X, Y, zeta: float, estimator: str = "unbiased") -> Tensor:
    """sigma * MMD^2 with sigma from ``smmd_sigma``."""
    return smmd_sigma(kernel, X, zeta) * mmd2(kernel, X, Y, estimator)


def pair_expectation_from(grams: PairGrams, estimator: str = "biased") -> Tensor:
    return 0.25 * (
        same_set_mean(grams.yy, estimator)
        + 2.0 * ad.tmean(grams.xy)
        + same_set_mean(grams.xx, estimator)
    )


def pair_expectation(kernel, X, Y, estimator: str = "biased") -> Tensor:
    """
    Kernel mean over pairs drawn from the pooled batch,
    1/4 [E_YY k + 2 E_XY k + E_XX k].

    The biased estimator keeps the same-set diagonals, which makes the
    reduction of the kernel objective to -MMD^2 exact.
    """
    return pair_expectation_from(pair_grams(kernel, X, Y), estimator)


def repulsive_loss_from(grams: PairGrams, estimator: str = "biased") -> Tensor:
    return same_set_mean(grams.xx, estimator) - same_set_mean(grams.yy, estimator)


def repulsive_loss(kernel, X, Y, estimator: str = "biased") -> Tensor:
    """Repulsive discriminator loss E_XX k - E_YY k."""
    return repulsive_loss_from(pair_grams(kernel, X, Y), estimator)
