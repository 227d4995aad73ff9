"""
Kernel-step objectives for generative training.

Both families share the heat-kernel part (entropy and transport of the
kernel-induced measure on the pooled real and generated batch) and the
pooled pair expectation. They differ in the discriminating terms: the deep
RBF family penalizes kernel values directly, the random-feature family the
magnitude of its sine expectations plus a frequency-size penalty.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core import autodiff as ad
from src.core.autodiff import Tensor
from src.genmodel.config import GanConfig
from src.genmodel.losses import (
    PairGrams,
    pair_expectation_from,
    same_set_mean,
    smmd_sigma,
)
from src.hklearn.measures import MeasureSnapshot
from src.hklearn.objective import hk_objective_terms, offdiag_mean
from src.kernels.base import as_points
from src.kernels.deep_rbf import DeepRbfKernel
from src.kernels.random_feature import RandomFeatureKernel

logger = logging.getLogger(__name__)


@dataclass
class TaylorComponents:
    """Per-pair factors of the first-order kernel bound."""

    kernel_value: Tensor
    jacobian_norm: Tensor
    feature_distance: Tensor

    def bound(self) -> Tensor:
        return self.kernel_value * self.jacobian_norm * self.feature_distance


def _points(X) -> np.ndarray:
    return as_points(np.asarray(getattr(X, "data", X), dtype=np.float64)).data


def taylor_components(kernel: DeepRbfKernel, X, Y) -> TaylorComponents:
    """k(y, x), ||dh/dx(x)||_F and ||h(x) - h(y)|| for aligned rows."""
    X, Y = _points(X), _points(Y)
    hx, jac = kernel.features_with_jacobian(X)
    hy = kernel.features(Y)
    n = X.shape[0]
    return TaylorComponents(
        kernel_value=kernel.pair_values(Y, X),
        jacobian_norm=ad.safe_norm(ad.reshape(jac, (n, jac.shape[1] * jac.shape[2]))),
        feature_distance=ad.safe_norm(hx - hy),
    )


def taylor_bound_rbf(kernel: DeepRbfKernel, x, y) -> Tensor:
    """
    k(y, x) ||dh/dx(x)||_F ||h(x) - h(y)||, the first-order bound with its
    distance constant absorbed into the objective weights.

    Returns a scalar for single points and an (N,) tensor for aligned batches.
    """
    single = np.ndim(getattr(x, "data", x)) == 1
    bound = taylor_components(kernel, x, y).bound()
    return bound[0] if single else bound


def _pooled_grams(gram: Tensor, n: int) -> PairGrams:
    return PairGrams(xx=gram[:n, :n], yy=gram[n:, n:], xy=gram[:n, n:])


def _feature_distances(hx: Tensor, hy: Tensor) -> Tensor:
    return ad.safe_norm(ad.expand_dims(hx, 1) - ad.expand_dims(hy, 0))


def _heat_kernel_part(
    kernel,
    pooled: np.ndarray,
    gram: Tensor,
    nu: Optional[MeasureSnapshot],
    cfg: GanConfig,
    eps_reg: Optional[float],
    cost: Optional[np.ndarray],
    reference_gram: Optional[np.ndarray] = None,
) -> Tensor:
    if cfg.alpha == 0 and cfg.beta == 0:
        return Tensor(0.0)
    if nu is None:
        raise ValueError("The entropy and transport terms need a previous measure")
    terms = hk_objective_terms(
        kernel,
        pooled,
        nu,
        cfg.hk_config(),
        cost=cost,
        reference_gram=reference_gram,
        eps_reg=eps_reg,
        gram_matrix=gram,
    )
    return cfg.alpha * terms.entropy + cfg.beta * terms.wasserstein


def _distance_terms(kernel, X: np.ndarray, Y: np.ndarray, cfg: GanConfig) -> Tensor:
    total = Tensor(0.0)
    if cfg.gamma2 == 0 and cfg.gamma4 == 0:
        return total
    hx, hy = kernel.features(X), kernel.features(Y)
    if cfg.gamma2:
        total = total + cfg.gamma2 * ad.tmean(_feature_distances(hx, hy))
    if cfg.gamma4:
        total = total + cfg.gamma4 * offdiag_mean(_feature_distances(hx, hx))
    return total


def kernel_objective_rbf(
    kernel: DeepRbfKernel,
    X,
    Y,
    nu: Optional[MeasureSnapshot],
    cfg: GanConfig,
    eps_reg: Optional[float] = None,
    cost: Optional[np.ndarray] = None,
    reference_gram: Optional[np.ndarray] = None,
) -> Tensor:
    """
    alpha H + beta W - lambda E_pooled k + gamma1 E_XY k + gamma2 E_XY ||h(x) - h(y)||
    + gamma3 E_XX k + gamma4 E_XX ||h(x_i) - h(x_j)||.

    ``nu`` is the previous measure on the pooled batch [X; Y]; Y is treated
    as constant. ``reference_gram`` is the initial kernel's Gram matrix on the
    pooled batch, needed by the unnormalized measure mode. With
    ``cfg.scale_kernel_objective`` the sum is multiplied by the SMMD scale.
    """
    X, Y = _points(X), _points(Y)
    n = X.shape[0]
    pooled = np.concatenate([X, Y])
    gram = kernel.matrix(pooled)
    grams = _pooled_grams(gram, n)

    objective = _heat_kernel_part(kernel, pooled, gram, nu, cfg, eps_reg, cost, reference_gram)
    objective = objective - cfg.lam * pair_expectation_from(grams, cfg.estimator)
    if cfg.gamma1:
        objective = objective + cfg.gamma1 * ad.tmean(grams.xy)
    if cfg.gamma3:
        objective = objective + cfg.gamma3 * same_set_mean(grams.xx, cfg.estimator)
    objective = objective + _distance_terms(kernel, X, Y, cfg)
    if cfg.scale_kernel_objective:
        objective = objective * smmd_sigma(kernel, X, cfg.zeta)
    return objective


def sine_expectation(kernel: RandomFeatureKernel, X, Y) -> Tensor:
    """(n, m) mixture of the global and pairwise sine expectations."""
    global_sin, pair_sin = kernel.sin_terms(X, Y)
    return 0.5 * global_sin + 0.5 * pair_sin


def kernel_objective_dk(
    kernel: RandomFeatureKernel,
    X,
    Y,
    nu: Optional[MeasureSnapshot],
    cfg: GanConfig,
    eps_reg: Optional[float] = None,
    cost: Optional[np.ndarray] = None,
    reference_gram: Optional[np.ndarray] = None,
) -> Tensor:
    """
    Random-feature counterpart of ``kernel_objective_rbf``: gamma1 and
    gamma3 weigh |E sin| instead of kernel values, and gamma5 adds
    E[||w1|| + ||w2(x, y)|| + ||dw2/dh(x)||_F] over aligned pairs.
    """
    X, Y = _points(X), _points(Y)
    n = X.shape[0]
    pooled = np.concatenate([X, Y])
    gram = kernel.matrix(pooled)
    grams = _pooled_grams(gram, n)

    objective = _heat_kernel_part(kernel, pooled, gram, nu, cfg, eps_reg, cost, reference_gram)
    objective = objective - cfg.lam * pair_expectation_from(grams, cfg.estimator)
    if cfg.gamma1:
        objective = objective + cfg.gamma1 * ad.tmean(ad.tabs(sine_expectation(kernel, X, Y)))
    if cfg.gamma3:
        real = ad.tabs(sine_expectation(kernel, X, X))
        objective = objective + cfg.gamma3 * same_set_mean(real, cfg.estimator)
    objective = objective + _distance_terms(kernel, X, Y, cfg)
    if cfg.gamma5:
        objective = objective + cfg.gamma5 * kernel.frequency_penalty(X, Y)
    if cfg.scale_kernel_objective:
        objective = objective * smmd_sigma(kernel, X, cfg.zeta)
    return objective


def kernel_objective(kernel, X, Y, nu, cfg: GanConfig, **kwargs) -> Tensor:
    """Dispatch on the kernel family."""
    if isinstance(kernel, RandomFeatureKernel):
        return kernel_objective_dk(kernel, X, Y, nu, cfg, **kwargs)
    return kernel_objective_rbf(kernel, X, Y, nu, cfg, **kwargs)
