"""
Measures over a sample batch induced by a kernel.

The normalized KDE weight of point i is its column sum of the Gram matrix
divided by the total, so any constant scale of the kernel cancels.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.core import autodiff as ad
from src.core.autodiff import Tensor
from src.core.errors import DomainError, ShapeError
from src.transport.sinkhorn import DiscreteMeasure

logger = logging.getLogger(__name__)


@dataclass
class MeasureSnapshot:
    """Detached previous-step measure over the batch it was computed on."""

    weights: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        self.weights = DiscreteMeasure(self.weights).weights
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        if self.points.shape[0] != self.weights.size:
            raise ShapeError(
                f"{self.weights.size} weights for {self.points.shape[0]} points"
            )

    @property
    def measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.weights)


def kde_weights(gram_matrix: Tensor) -> Tensor:
    """w_i = sum_j G[j, i] / sum_ij G[j, i]."""
    columns = ad.tsum(gram_matrix, axis=0)
    total = ad.tsum(columns)
    if total.data <= 0:
        raise DomainError("Kernel density normalizer is not positive")
    return columns / total


def normalized_kde(kernel, X) -> Tensor:
    """Normalized kernel density weights on ``X`` (differentiable)."""
    return kde_weights(kernel.matrix(X))


def uniform_measure(n: int) -> DiscreteMeasure:
    return DiscreteMeasure.uniform(n)


def ratio_weights(gram_matrix: Tensor, reference_gram: np.ndarray) -> Tensor:
    """w_i = sum_j G[j, i] / (n sum_j G0[j, i]) with G0 held constant."""
    reference = np.asarray(reference_gram, dtype=np.float64)
    n = reference.shape[0]
    denominator = n * reference.sum(axis=0)
    if np.any(denominator <= 0):
        raise DomainError("Reference kernel density has a non-positive column")
    return ad.tsum(gram_matrix, axis=0) / denominator


def unnormalized_ratio_measure(kernel_t, kernel_0, X) -> Tensor:
    """
    Ratio of the current kernel density to a frozen reference kernel's.

    The weights are not renormalized onto the simplex.
    """
    return ratio_weights(kernel_t.matrix(X), kernel_0.matrix(X).data)


def to_simplex(weights: Tensor) -> Tensor:
    total = ad.tsum(weights)
    if total.data <= 0:
        raise DomainError("Weights sum to a non-positive value")
    return weights / total
