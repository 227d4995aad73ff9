"""
Deep RBF kernel: k(x0, x) = exp(-||h(x0) - h(x)||^2) with a learned feature
network h.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from src.core import autodiff as ad
from src.core.autodiff import ParamStore, Tensor
from src.core.nn import Mlp, MlpSpec
from src.kernels.base import Kernel, as_points, pairwise_sqdist

logger = logging.getLogger(__name__)


class DeepRbfKernel(Kernel):
    """
    Gaussian kernel in the feature space of an MLP.

    Args:
        spec: Feature network architecture.
        rng: Initialization source.
        params: Store to register the network in (a fresh one if omitted).
        prefix: Parameter name prefix.
        spectral_norm: Spectrally normalize every feature layer.
        spectral_scale: Post-normalization weight scale.
    """

    family = "deep-rbf"

    def __init__(
        self,
        spec: MlpSpec,
        rng: np.random.Generator,
        params: Optional[ParamStore] = None,
        prefix: str = "h",
        spectral_norm: bool = False,
        spectral_scale: float = 1.0,
    ):
        super().__init__(params)
        self.net = Mlp(
            spec,
            self.params,
            prefix,
            rng,
            spectral_norm=spectral_norm,
            spectral_scale=spectral_scale,
        )
        self.shift = np.zeros(spec.in_dim)
        self.scale = np.ones(spec.in_dim)

    @property
    def input_dim(self) -> int:
        return self.net.spec.in_dim

    @property
    def output_dim(self) -> int:
        return self.net.spec.out_dim

    def fit_input_scaling(self, X: np.ndarray) -> None:
        """Freeze a per-coordinate standardization fitted on ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        std = X.std(axis=0)
        self.shift = X.mean(axis=0)
        self.scale = np.where(std > 1e-12, std, 1.0)
        logger.debug(f"Input scaling fitted: shift={self.shift}, scale={self.scale}")

    def _standardize(self, X: Tensor) -> Tensor:
        if not np.any(self.shift) and np.all(self.scale == 1.0):
            return X
        return (X - self.shift) / self.scale

    def features(self, X) -> Tensor:
        """h(X) for an (n, d) point set."""
        return self.net(self._standardize(as_points(X)))

    def features_with_jacobian(self, X) -> Tuple[Tensor, Tensor]:
        """h(X) and dh/dx, the latter of shape (n, out, d)."""
        feats, jac = self.net.forward_with_jacobian(self._standardize(as_points(X)))
        return feats, jac / self.scale

    def matrix(self, X, Y=None) -> Tensor:
        hx = self.features(X)
        hy = None if Y is None else self.features(Y)
        return ad.exp(-pairwise_sqdist(hx, hy))

    def pair_values(self, A, B) -> Tensor:
        diff = self.features(A) - self.features(B)
        return ad.exp(-ad.tsum(ad.square(diff), axis=-1))

    def feature_distance(self, A, B) -> Tensor:
        """||h(A_i) - h(B_i)|| for aligned rows, zero-safe."""
        return ad.safe_norm(self.features(A) - self.features(B), axis=-1)

    def diag(self, X) -> Tensor:
        return Tensor(np.ones(as_points(X).shape[0]))

    def refresh(self) -> None:
        if self.net.spectral_norm:
            self.net.update_spectral_vectors()

    def cross_trace(self, X: np.ndarray) -> Tensor:
        """Closed form 2 ||dh/dx||_F^2 per point."""
        _, jac = self.features_with_jacobian(np.atleast_2d(X))
        return 2.0 * ad.tsum(ad.square(jac), axis=(1, 2))


def deep_rbf_eval(kernel: DeepRbfKernel, x0, x) -> float:
    """k(x0, x) for two single points."""
    return kernel(x0, x)
