"""
JKO objective for heat kernel learning.

    alpha * H(mu) + beta * W2^2(nu, mu) - lambda * mean_{i != j} k(x_j, x_i)

where mu is the kernel-induced measure on the batch, H its negative entropy
and nu the detached measure from the previous step.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.core import autodiff as ad
from src.core.autodiff import Tensor
from src.core.errors import DomainError
from src.hklearn.config import HkConfig
from src.hklearn.measures import MeasureSnapshot, kde_weights, ratio_weights, to_simplex
from src.transport.sinkhorn import SinkhornResult, cost_matrix, sinkhorn

logger = logging.getLogger(__name__)


def neg_entropy(
    weights: Tensor,
    kernel=None,
    X=None,
    estimator: str = "A",
    gram_matrix: Optional[Tensor] = None,
) -> Tensor:
    """
    Negative entropy estimate of a kernel-induced measure.

    Estimator A is sum_i w_i log w_i. Estimator B is
    (1/n) sum_j sum_i w_i log k(x_j, x_i) and needs the kernel (or its Gram
    matrix on X).

    Raises:
        DomainError: On a log of a non-positive weight or kernel value.
    """
    weights = ad.as_tensor(weights)
    if estimator == "A":
        if np.any(weights.data <= 0):
            raise DomainError("Estimator A needs strictly positive weights")
        return ad.tsum(weights * ad.log(weights))
    if estimator == "B":
        if gram_matrix is None:
            if kernel is None or X is None:
                raise ValueError("Estimator B needs a kernel and points")
            gram_matrix = kernel.matrix(X)
        if np.any(gram_matrix.data <= 0):
            raise DomainError("Estimator B needs strictly positive kernel values")
        n = gram_matrix.shape[0]
        return ad.tsum(ad.log(gram_matrix) * weights) / float(n)
    raise ValueError(f"Unknown entropy estimator '{estimator}'")


def offdiag_mean(gram_matrix: Tensor) -> Tensor:
    """Mean over ordered pairs i != j; zero for a single point."""
    n = gram_matrix.shape[0]
    if n < 2:
        return Tensor(0.0)
    return ad.tsum(gram_matrix * (1.0 - np.eye(n))) / float(n * (n - 1))


@dataclass
class ObjectiveTerms:
    """The objective and its components at one parameter value."""

    objective: Tensor
    entropy: Tensor
    wasserstein: Tensor
    penalty: Tensor
    weights: Tensor
    transport: Optional[SinkhornResult] = None

    def values(self) -> Dict[str, float]:
        return {
            "objective": float(self.objective.data),
            "entropy": float(self.entropy.data),
            "wasserstein": float(self.wasserstein.data),
            "penalty": float(self.penalty.data),
        }


def batch_weights(
    gram_matrix: Tensor, cfg: HkConfig, reference_gram: Optional[np.ndarray] = None
) -> Tensor:
    """Current measure on the batch under the configured measure mode."""
    if cfg.measure_mode == "unnormalized":
        if reference_gram is None:
            raise ValueError("Unnormalized measure mode needs a reference Gram matrix")
        return ratio_weights(gram_matrix, reference_gram)
    return kde_weights(gram_matrix)


def hk_objective_terms(
    kernel,
    X,
    nu: MeasureSnapshot,
    cfg: HkConfig,
    cost: Optional[np.ndarray] = None,
    reference_gram: Optional[np.ndarray] = None,
    eps_reg: Optional[float] = None,
    gram_matrix: Optional[Tensor] = None,
) -> ObjectiveTerms:
    """
    Evaluate every component of the objective on batch ``X``.

    Args:
        kernel: Kernel being learned.
        X: (n, d) batch shared by ``nu`` and the current measure.
        nu: Previous-step measure.
        cfg: Weights and Sinkhorn settings.
        cost: Precomputed batch self cost matrix.
        reference_gram: Frozen reference Gram matrix (unnormalized mode).
        eps_reg: Sinkhorn regularization override.
        gram_matrix: Already evaluated kernel.matrix(X), reused when given.
    """
    X = np.asarray(getattr(X, "data", X), dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if nu.weights.size != X.shape[0]:
        raise ValueError("nu must be defined over the same batch as X")
    if gram_matrix is None:
        gram_matrix = kernel.matrix(X)
    weights = batch_weights(gram_matrix, cfg, reference_gram)

    zero = Tensor(0.0)
    entropy = (
        neg_entropy(weights, estimator=cfg.entropy_estimator, gram_matrix=gram_matrix)
        if cfg.alpha > 0
        else zero
    )
    transport = None
    wasserstein = zero
    if cfg.beta > 0:
        cost = cost_matrix(X).data if cost is None else cost
        simplex = to_simplex(weights) if cfg.measure_mode == "unnormalized" else weights
        transport = sinkhorn(
            nu.weights,
            simplex,
            cost,
            eps_reg=eps_reg if eps_reg is not None else cfg.sinkhorn_eps,
            max_iter=cfg.sinkhorn_iters,
            warn=False,
        )
        wasserstein = transport.distance
    penalty = offdiag_mean(gram_matrix)
    objective = cfg.alpha * entropy + cfg.beta * wasserstein - cfg.lam * penalty
    return ObjectiveTerms(objective, entropy, wasserstein, penalty, weights, transport)


def hk_objective(kernel, X, nu: MeasureSnapshot, cfg: HkConfig, **kwargs) -> Tensor:
    """Scalar objective tensor; see ``hk_objective_terms``."""
    return hk_objective_terms(kernel, X, nu, cfg, **kwargs).objective
