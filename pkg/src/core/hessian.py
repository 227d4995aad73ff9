"""
Cross-derivative trace of a two-argument kernel on its diagonal.

For k(y, z) the quantity is sum_i d^2 k / (dy_i dz_i) at y = z = x. Kernels
that know a closed form expose ``cross_trace(X)``; anything else falls back
to a central finite-difference stencil evaluated through the autodiff
tensors, so the result stays differentiable in the kernel parameters.
"""

import logging
from typing import Callable, Union

import numpy as np

from src.core import autodiff as ad
from src.core.autodiff import Tensor
from src.core.errors import NonFiniteError

logger = logging.getLogger(__name__)

DEFAULT_STENCIL_STEP = 1e-4

PairFn = Callable[[Tensor, Tensor], Tensor]


def finite_difference_cross_trace(
    pair_fn: PairFn, X: np.ndarray, step: float = DEFAULT_STENCIL_STEP
) -> Tensor:
    """
    Stencil estimate per point:
    [k(x+h,x+h) - k(x+h,x-h) - k(x-h,x+h) + k(x-h,x-h)] / (4 h^2) summed over
    coordinates.

    Args:
        pair_fn: Aligned-row evaluator, (N, d) x (N, d) -> (N,).
        X: (n, d) points.
        step: Stencil half-width h.

    Returns:
        (n,) tensor of traces.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, dim = X.shape
    offsets = step * np.eye(dim)
    plus = (X[:, None, :] + offsets[None]).reshape(n * dim, dim)
    minus = (X[:, None, :] - offsets[None]).reshape(n * dim, dim)
    stencil = (
        pair_fn(Tensor(plus), Tensor(plus))
        - pair_fn(Tensor(plus), Tensor(minus))
        - pair_fn(Tensor(minus), Tensor(plus))
        + pair_fn(Tensor(minus), Tensor(minus))
    )
    per_coord = ad.reshape(stencil, (n, dim)) / (4.0 * step * step)
    return ad.tsum(per_coord, axis=1)


def hessian_trace_cross(
    kernel_fn: Union[object, PairFn], x: np.ndarray
) -> Tensor:
    """
    Cross-derivative trace of ``kernel_fn`` at (x, x).

    Args:
        kernel_fn: A kernel object (closed form used when it has
            ``cross_trace``) or an aligned-row pair evaluator.
        x: A single point (d,) or a batch (n, d).

    Returns:
        Scalar tensor for a single point, else an (n,) tensor.

    Raises:
        NonFiniteError: If the trace is NaN/Inf.
    """
    points = np.asarray(x, dtype=np.float64)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if hasattr(kernel_fn, "cross_trace"):
        trace = kernel_fn.cross_trace(points)
    else:
        trace = finite_difference_cross_trace(kernel_fn, points)
    if not np.all(np.isfinite(trace.data)):
        raise NonFiniteError("non-finite cross-derivative trace")
    return trace[0] if single else trace
