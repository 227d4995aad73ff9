"""
Kernel interface, fixed utility kernels and Gram matrix assembly.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.constants import KERNEL_MIN_BANDWIDTH2
from src.core import autodiff as ad
from src.core.autodiff import ParamStore, Tensor
from src.core.errors import ShapeError
from src.core.hessian import finite_difference_cross_trace

logger = logging.getLogger(__name__)


def as_points(X) -> Tensor:
    """Promote a point or point set to an (n, d) tensor."""
    X = ad.as_tensor(X)
    if X.ndim == 1:
        X = ad.reshape(X, (1, X.shape[0]))
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError(f"Expected a non-empty (n, d) point set, got shape {X.shape}")
    return X


def pairwise_sqdist(A: Tensor, B: Optional[Tensor] = None) -> Tensor:
    """
    Squared Euclidean distances between rows of ``A`` and ``B``.

    With ``B`` omitted the result is the exactly symmetric self-distance
    matrix with a zero diagonal.
    """
    same = B is None or B is A
    B = A if B is None else B
    if A.shape[-1] != B.shape[-1]:
        raise ShapeError(f"Dimension mismatch: {A.shape} vs {B.shape}")
    a2 = ad.tsum(ad.square(A), axis=-1, keepdims=True)
    b2 = ad.transpose(ad.tsum(ad.square(B), axis=-1, keepdims=True))
    dist = ad.clip_min(a2 + b2 - 2.0 * ad.matmul(A, ad.transpose(B)), 0.0)
    if same:
        dist = 0.5 * (dist + ad.transpose(dist))
        dist = dist * (1.0 - np.eye(A.shape[0]))
    return dist


class Kernel:
    """
    Two-argument kernel evaluated on point sets.

    Subclasses implement ``matrix`` and ``pair_values``; ``params`` holds any
    trainable parameters.
    """

    family = "base"

    def __init__(self, params: Optional[ParamStore] = None):
        self.params = params if params is not None else ParamStore()

    def matrix(self, X, Y=None) -> Tensor:
        """(n, m) tensor of k(X_i, Y_j); ``Y`` omitted means Y is X."""
        raise NotImplementedError

    def pair_values(self, A, B) -> Tensor:
        """(N,) tensor of k(A_i, B_i) for aligned rows."""
        raise NotImplementedError

    def diag(self, X) -> Tensor:
        return self.pair_values(X, X)

    def refresh(self) -> None:
        """Advance the power-iteration state of spectrally normalized networks."""

    def cross_trace(self, X: np.ndarray) -> Tensor:
        return finite_difference_cross_trace(self.pair_values, X)

    def __call__(self, x0, x) -> float:
        value = self.pair_values(as_points(x0), as_points(x))
        return float(value.data[0])


class RbfKernel(Kernel):
    """Gaussian kernel exp(-||x - y||^2 / bandwidth2)."""

    family = "rbf"

    def __init__(self, bandwidth2: float = 1.0):
        super().__init__()
        if bandwidth2 <= 0:
            raise ValueError(f"bandwidth2 must be positive, got {bandwidth2}")
        self.bandwidth2 = float(bandwidth2)

    def matrix(self, X, Y=None) -> Tensor:
        X = as_points(X)
        Y = None if Y is None else as_points(Y)
        return ad.exp(-pairwise_sqdist(X, Y) / self.bandwidth2)

    def pair_values(self, A, B) -> Tensor:
        A, B = as_points(A), as_points(B)
        diff = A - B
        return ad.exp(-ad.tsum(ad.square(diff), axis=-1) / self.bandwidth2)

    def cross_trace(self, X: np.ndarray) -> Tensor:
        X = np.atleast_2d(X)
        return Tensor(np.full(X.shape[0], 2.0 * X.shape[1] / self.bandwidth2))


def median_bandwidth2(X: np.ndarray, floor: float = KERNEL_MIN_BANDWIDTH2) -> float:
    """median(pairwise squared distances) / log(n + 1), floored."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    if n < 2:
        return 1.0
    sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    upper = sq[np.triu_indices(n, k=1)]
    bandwidth2 = float(np.median(upper)) / np.log(n + 1.0)
    if bandwidth2 < floor:
        logger.debug(f"Median bandwidth {bandwidth2:.3e} below floor; using {floor:.1e}")
        return floor
    return bandwidth2


class ConstantKernel(Kernel):
    """k(x, y) = c everywhere."""

    family = "constant"

    def __init__(self, value: float = 1.0):
        super().__init__()
        self.value = float(value)

    def matrix(self, X, Y=None) -> Tensor:
        X = as_points(X)
        m = X.shape[0] if Y is None else as_points(Y).shape[0]
        return Tensor(np.full((X.shape[0], m), self.value))

    def pair_values(self, A, B) -> Tensor:
        return Tensor(np.full(as_points(A).shape[0], self.value))

    def cross_trace(self, X: np.ndarray) -> Tensor:
        return Tensor(np.zeros(np.atleast_2d(X).shape[0]))


class ProductKernel(Kernel):
    """
    Product of kernels acting on disjoint coordinate blocks.

    Args:
        blocks: (column slice, kernel) pairs.
    """

    family = "product"

    def __init__(self, blocks: Sequence[Tuple[slice, Kernel]]):
        super().__init__()
        if not blocks:
            raise ValueError("ProductKernel needs at least one block")
        self.blocks: List[Tuple[slice, Kernel]] = list(blocks)
        for _, kernel in self.blocks:
            self.params.attach(kernel.params)

    def matrix(self, X, Y=None) -> Tensor:
        X = as_points(X)
        Y = None if Y is None else as_points(Y)
        out = None
        for cols, kernel in self.blocks:
            part = kernel.matrix(X[:, cols], None if Y is None else Y[:, cols])
            out = part if out is None else out * part
        return out

    def pair_values(self, A, B) -> Tensor:
        A, B = as_points(A), as_points(B)
        out = None
        for cols, kernel in self.blocks:
            part = kernel.pair_values(A[:, cols], B[:, cols])
            out = part if out is None else out * part
        return out

    def refresh(self) -> None:
        for _, kernel in self.blocks:
            kernel.refresh()

    def cross_trace(self, X: np.ndarray) -> Tensor:
        X = np.atleast_2d(X)
        diags = [kernel.diag(X[:, cols]) for cols, kernel in self.blocks]
        total = None
        for b, (cols, kernel) in enumerate(self.blocks):
            term = kernel.cross_trace(X[:, cols])
            for c, diag in enumerate(diags):
                if c != b:
                    term = term * diag
            total = term if total is None else total + term
        return total


@dataclass
class GramMatrix:
    """Kernel evaluations between two point sets."""

    values: np.ndarray
    diag_excluded: bool = False
    same_set: bool = False

    @property
    def mask(self) -> np.ndarray:
        """True where an entry takes part in expectations."""
        mask = np.ones(self.values.shape, dtype=bool)
        if self.diag_excluded:
            np.fill_diagonal(mask, False)
        return mask

    def mean(self) -> float:
        return float(self.values[self.mask].mean())

    def min_eigenvalue(self) -> float:
        if not self.same_set:
            raise ValueError("Eigenvalues are only defined for a same-set Gram matrix")
        sym = 0.5 * (self.values + self.values.T)
        return float(np.linalg.eigvalsh(sym)[0])


def gram(kernel: Kernel, X, Y=None, exclude_diag: bool = False) -> GramMatrix:
    """
    Evaluate k(X_i, Y_j) for all pairs.

    Args:
        kernel: Any Kernel.
        X: (n, d) points.
        Y: (m, d) points; omitted or identical to X means a same-set Gram.
        exclude_diag: Mask the diagonal out of expectations (same set only).
    """
    X = as_points(X)
    same = Y is None or Y is X or (
        np.shape(Y) == X.shape and np.array_equal(ad.as_tensor(Y).data, X.data)
    )
    if exclude_diag and not same:
        raise ValueError("exclude_diag requires X == Y")
    values = kernel.matrix(X, None if same else as_points(Y)).data.copy()
    return GramMatrix(values, diag_excluded=exclude_diag, same_set=same)
