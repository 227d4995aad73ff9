"""Exact optimal transport for tiny instances (ground-truth oracle)."""

import logging

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from src.constants import EXACT_OT_MAX_SUPPORT
from src.core.errors import ConvergenceError
from src.transport.sinkhorn import DiscreteMeasure, MeasureLike, weights_tensor

logger = logging.getLogger(__name__)


def _is_uniform(weights: np.ndarray) -> bool:
    return bool(np.allclose(weights, 1.0 / weights.size, rtol=0.0, atol=1e-12))


def exact_ot_small(a: MeasureLike, b: MeasureLike, C) -> float:
    """
    Minimal transport cost sum(P * C) over couplings of ``a`` and ``b``.

    Equal-size uniform measures are solved as an assignment problem; general
    weights by the simplex solution of the transport linear program, which is
    an optimal vertex of the transport polytope.

    Raises:
        ValueError: If either support exceeds 8 atoms.
    """
    a_w = weights_tensor(a).data
    b_w = weights_tensor(b).data
    cost = np.asarray(getattr(C, "data", C), dtype=np.float64)
    n, m = a_w.size, b_w.size
    if n > EXACT_OT_MAX_SUPPORT or m > EXACT_OT_MAX_SUPPORT:
        raise ValueError(
            f"Exact OT oracle supports at most {EXACT_OT_MAX_SUPPORT} atoms, got {n}x{m}"
        )
    if cost.shape != (n, m):
        raise ValueError(f"Cost shape {cost.shape} does not match ({n}, {m})")
    DiscreteMeasure(a_w)
    DiscreteMeasure(b_w)

    if n == m and _is_uniform(a_w) and _is_uniform(b_w):
        rows, cols = linear_sum_assignment(cost)
        return float(cost[rows, cols].sum() / n)

    row_constraints = np.kron(np.eye(n), np.ones((1, m)))
    col_constraints = np.kron(np.ones((1, n)), np.eye(m))
    result = linprog(
        cost.reshape(-1),
        A_eq=np.vstack([row_constraints, col_constraints]),
        b_eq=np.concatenate([a_w, b_w]),
        bounds=(0, None),
        method="highs",
    )
    if not result.success:
        raise ConvergenceError(f"Transport LP failed: {result.message}")
    return float(result.fun)
