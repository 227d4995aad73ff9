"""
Entropy-regularized optimal transport (log-domain Sinkhorn).

The solver is a single autodiff primitive: the forward pass stores every
dual potential and the backward pass replays the iterations in reverse, so
the gradient is exact for the unrolled computation without keeping an
n x m intermediate per iteration on the tape.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
from scipy.special import logsumexp

from src.constants import (
    MEASURE_SUM_TOLERANCE,
    SINKHORN_EPS_FRACTION,
    SINKHORN_MAX_ITER,
    SINKHORN_TOL,
)
from src.core import autodiff as ad
from src.core.autodiff import Tensor
from src.core.errors import ShapeError

logger = logging.getLogger(__name__)

_LOG_FLOOR = 1e-300


@dataclass
class DiscreteMeasure:
    """Nonnegative weights on a finite support, summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if self.weights.size == 0:
            raise ValueError("A measure needs at least one atom")
        if np.any(self.weights < 0):
            raise ValueError("Measure weights must be nonnegative")
        total = float(self.weights.sum())
        if abs(total - 1.0) > MEASURE_SUM_TOLERANCE:
            raise ValueError(f"Measure weights sum to {total!r}, expected 1")

    @classmethod
    def uniform(cls, n: int) -> "DiscreteMeasure":
        if n < 1:
            raise ValueError("n must be >= 1")
        return cls(np.full(n, 1.0 / n))

    @property
    def size(self) -> int:
        return self.weights.size


MeasureLike = Union[DiscreteMeasure, Tensor, np.ndarray]


@dataclass
class SinkhornResult:
    """Transport cost (differentiable), plan and convergence record."""

    distance: Tensor
    plan: np.ndarray
    converged: bool
    residual: float
    iterations: int
    eps_reg: float
    residual_history: List[float] = field(default_factory=list)

    @property
    def value(self) -> float:
        return float(self.distance.data)


def weights_tensor(measure: MeasureLike) -> Tensor:
    if isinstance(measure, DiscreteMeasure):
        return Tensor(measure.weights)
    tensor = ad.as_tensor(measure)
    if tensor.ndim != 1:
        raise ShapeError(f"Measure weights must be 1-D, got {tensor.shape}")
    return tensor


def cost_matrix(X, Y=None) -> Tensor:
    """
    Squared Euclidean cost C[i, j] = ||X_i - Y_j||^2.

    Computed from explicit differences, so a self cost matrix is exactly
    symmetric with a zero diagonal.
    """
    X = ad.as_tensor(X)
    Y = X if Y is None else ad.as_tensor(Y)
    if X.ndim == 1:
        X = ad.reshape(X, (X.shape[0], 1))
    if Y.ndim == 1:
        Y = ad.reshape(Y, (Y.shape[0], 1))
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise ValueError("Cost matrix needs non-empty point sets")
    if X.shape[1] != Y.shape[1]:
        raise ShapeError(f"Dimension mismatch: {X.shape} vs {Y.shape}")
    diff = ad.expand_dims(X, 1) - ad.expand_dims(Y, 0)
    return ad.tsum(ad.square(diff), axis=-1)


def default_eps(C: np.ndarray) -> float:
    """0.05 * mean(C), or 1 for an all-zero cost."""
    mean = float(np.mean(C))
    return SINKHORN_EPS_FRACTION * mean if mean > 0 else 1.0


def sinkhorn(
    a: MeasureLike,
    b: MeasureLike,
    C,
    eps_reg: Optional[float] = None,
    max_iter: int = SINKHORN_MAX_ITER,
    tol: float = SINKHORN_TOL,
    warn: bool = True,
) -> SinkhornResult:
    """
    Entropic transport between ``a`` and ``b`` under cost ``C``.

    Args:
        a: Source weights (n,), possibly a differentiable tensor.
        b: Target weights (m,), possibly a differentiable tensor.
        C: (n, m) cost, array or tensor.
        eps_reg: Entropic regularization; 0.05 * mean(C) when omitted.
        max_iter: Iteration cap.
        tol: Stop once the L1 row-marginal violation falls below this.
        warn: Log a warning when ``tol`` is not reached.

    Returns:
        SinkhornResult whose ``distance`` is sum(plan * C), differentiable in
        ``a``, ``b`` and ``C``. Not reaching ``tol`` is logged, not raised.
    """
    a_t, b_t, c_t = weights_tensor(a), weights_tensor(b), ad.as_tensor(C)
    n, m = a_t.shape[0], b_t.shape[0]
    if c_t.shape != (n, m):
        raise ShapeError(f"Cost shape {c_t.shape} does not match marginals ({n}, {m})")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    cost = c_t.data
    eps = default_eps(cost) if eps_reg is None else float(eps_reg)
    if eps <= 0:
        raise ValueError(f"eps_reg must be positive, got {eps}")

    a_w, b_w = a_t.data, b_t.data
    loga = np.log(np.maximum(a_w, _LOG_FLOOR))
    logb = np.log(np.maximum(b_w, _LOG_FLOOR))

    g = np.zeros(m)
    f_hist: List[np.ndarray] = []
    g_hist: List[np.ndarray] = [g]
    history: List[float] = []
    plan = np.zeros((n, m))
    converged = False
    for _ in range(max_iter):
        f = eps * loga - eps * logsumexp((g[None, :] - cost) / eps, axis=1)
        g = eps * logb - eps * logsumexp((f[:, None] - cost) / eps, axis=0)
        f_hist.append(f)
        g_hist.append(g)
        plan = np.exp((f[:, None] + g[None, :] - cost) / eps)
        residual = float(np.abs(plan.sum(axis=1) - a_w).sum())
        history.append(residual)
        if residual < tol:
            converged = True
            break

    iterations = len(f_hist)
    if not converged and warn:
        logger.warning(
            f"Sinkhorn stopped after {iterations} iterations with residual "
            f"{history[-1]:.3e} (tol {tol:.1e})"
        )

    def vjp(upstream):
        scale = float(upstream)
        cost_bar = scale * plan
        s = scale * cost * plan / eps
        f_bar = s.sum(axis=1)
        g_bar = s.sum(axis=0)
        cost_bar = cost_bar - s
        loga_bar = np.zeros(n)
        logb_bar = np.zeros(m)
        for k in range(iterations - 1, -1, -1):
            f_k, g_prev = f_hist[k], g_hist[k]
            # g_k = eps*logb - eps*LSE_i((f_k - C)/eps)
            col = (f_k[:, None] - cost) / eps
            q_g = np.exp(col - logsumexp(col, axis=0, keepdims=True))
            logb_bar += eps * g_bar
            f_bar = f_bar - q_g @ g_bar
            cost_bar = cost_bar + q_g * g_bar[None, :]
            # f_k = eps*loga - eps*LSE_j((g_{k-1} - C)/eps)
            row = (g_prev[None, :] - cost) / eps
            q_f = np.exp(row - logsumexp(row, axis=1, keepdims=True))
            loga_bar += eps * f_bar
            g_bar = -(f_bar @ q_f)
            cost_bar = cost_bar + f_bar[:, None] * q_f
            f_bar = np.zeros(n)
        a_bar = loga_bar / np.maximum(a_w, _LOG_FLOOR)
        b_bar = logb_bar / np.maximum(b_w, _LOG_FLOOR)
        return a_bar, b_bar, cost_bar

    distance = ad.primitive(np.sum(plan * cost), (a_t, b_t, c_t), vjp, "sinkhorn")
    return SinkhornResult(
        distance=distance,
        plan=plan,
        converged=converged,
        residual=history[-1],
        iterations=iterations,
        eps_reg=eps,
        residual_history=history,
    )
