"""
Random-feature kernel with learned frequency distributions.

    k(x0, x) = 1/2 E_w1[cos(w1 . (h(x0) - h(x)))]
             + 1/2 E_w2[cos(w2(x0, x) . (h(x0) - h(x)))]

w1 comes from a global noise-to-frequency network, w2 from a pairwise network
fed with the noise and both feature vectors. The pairwise term is averaged
over both input orderings so the kernel is symmetric. The frequency noise is
held fixed between ``resample`` calls (common random numbers), which keeps
every evaluation deterministic and differentiable.

The pairwise network starts with zero weights on its feature columns, so an
untrained kernel is a plain Bochner cosine kernel and positive semidefinite.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from src.core import autodiff as ad
from src.core.autodiff import ParamStore, Tensor
from src.core.nn import Mlp, MlpSpec
from src.kernels.base import Kernel, as_points

logger = logging.getLogger(__name__)


class RandomFeatureKernel(Kernel):
    """
    Args:
        feature_spec: Architecture of the feature network h.
        rng: Initialization and frequency-noise source.
        noise_dim: Dimension of the frequency noise.
        freq_hidden: Hidden widths of both frequency networks.
        num_freq_samples: Monte Carlo frequency count.
        params: Store to register all networks in.
        prefix: Parameter name prefix.
        spectral_norm: Spectrally normalize the feature network.
        spectral_scale: Post-normalization weight scale.
    """

    family = "random-feature"

    def __init__(
        self,
        feature_spec: MlpSpec,
        rng: np.random.Generator,
        noise_dim: int = 4,
        freq_hidden: Sequence[int] = (32,),
        num_freq_samples: int = 16,
        params: Optional[ParamStore] = None,
        prefix: str = "rf",
        spectral_norm: bool = False,
        spectral_scale: float = 1.0,
    ):
        super().__init__(params)
        if num_freq_samples < 1:
            raise ValueError("num_freq_samples must be >= 1")
        if noise_dim < 1:
            raise ValueError("noise_dim must be >= 1")
        out_dim = feature_spec.out_dim
        self.noise_dim = noise_dim
        self.num_freq_samples = num_freq_samples
        self.feature_net = Mlp(
            feature_spec,
            self.params,
            f"{prefix}.h",
            rng,
            spectral_norm=spectral_norm,
            spectral_scale=spectral_scale,
        )
        self.global_net = Mlp(
            MlpSpec.make(noise_dim, freq_hidden, out_dim), self.params, f"{prefix}.w1", rng
        )
        self.pair_net = Mlp(
            MlpSpec.make(noise_dim + 2 * out_dim, freq_hidden, out_dim),
            self.params,
            f"{prefix}.w2",
            rng,
        )
        self.params[self.pair_net.weight_name(0)].data[noise_dim:] = 0.0

        self.noise_cols = slice(0, noise_dim)
        self.first_cols = slice(noise_dim, noise_dim + out_dim)
        self.second_cols = slice(noise_dim + out_dim, noise_dim + 2 * out_dim)
        self.noise_global = np.zeros((num_freq_samples, noise_dim))
        self.noise_pair = np.zeros((num_freq_samples, noise_dim))
        self.resample(rng)

    @property
    def input_dim(self) -> int:
        return self.feature_net.spec.in_dim

    @property
    def output_dim(self) -> int:
        return self.feature_net.spec.out_dim

    def resample(self, rng: np.random.Generator) -> None:
        """Draw fresh frequency noise."""
        shape = (self.num_freq_samples, self.noise_dim)
        self.noise_global = rng.standard_normal(shape)
        self.noise_pair = rng.standard_normal(shape)

    def features(self, X) -> Tensor:
        return self.feature_net(as_points(X))

    def global_frequencies(self) -> Tensor:
        """(S, D) samples of w1."""
        return self.global_net(self.noise_global)

    def pair_frequencies(self, h_first: Tensor, h_second: Tensor, aligned: bool) -> Tensor:
        """
        Samples of w2 for feature pairs.

        Returns (S, n, m, D) for all pairs, or (S, N, D) when ``aligned``.
        """
        hidden = self.pair_net.spec.widths[1]
        zn = self.pair_net.preactivation(self.noise_pair, 0, rows=self.noise_cols)
        za = self.pair_net.preactivation(h_first, 0, rows=self.first_cols, include_bias=False)
        zb = self.pair_net.preactivation(h_second, 0, rows=self.second_cols, include_bias=False)
        samples = self.num_freq_samples
        if aligned:
            z = ad.reshape(zn, (samples, 1, hidden)) + ad.expand_dims(za, 0)
            z = z + ad.expand_dims(zb, 0)
        else:
            n, m = h_first.shape[0], h_second.shape[0]
            z = ad.reshape(zn, (samples, 1, 1, hidden)) + ad.reshape(za, (1, n, 1, hidden))
            z = z + ad.reshape(zb, (1, 1, m, hidden))
        return self.pair_net.forward_from(z)

    def _projections(self, hx: Tensor, hy: Tensor, aligned: bool):
        """Frequency projections of h(x) - h(y) for both terms."""
        if aligned:
            diff = hx - hy
            proj1 = ad.matmul(diff, ad.transpose(self.global_frequencies()))
            w_xy = self.pair_frequencies(hx, hy, aligned=True)
            w_yx = self.pair_frequencies(hy, hx, aligned=True)
            broadcast_diff = ad.expand_dims(diff, 0)
        else:
            diff = ad.expand_dims(hx, 1) - ad.expand_dims(hy, 0)
            proj1 = ad.matmul(diff, ad.transpose(self.global_frequencies()))
            w_xy = self.pair_frequencies(hx, hy, aligned=False)
            w_yx = ad.transpose(self.pair_frequencies(hy, hx, aligned=False), (0, 2, 1, 3))
            broadcast_diff = ad.expand_dims(diff, 0)
        proj_xy = ad.tsum(w_xy * broadcast_diff, axis=-1)
        proj_yx = ad.tsum(w_yx * broadcast_diff, axis=-1)
        return proj1, proj_xy, proj_yx

    def _terms_from_features(self, hx: Tensor, hy: Tensor, aligned: bool) -> Tuple[Tensor, Tensor]:
        proj1, proj_xy, proj_yx = self._projections(hx, hy, aligned)
        term1 = ad.tmean(ad.cos(proj1), axis=-1)
        term2 = 0.5 * (ad.tmean(ad.cos(proj_xy), axis=0) + ad.tmean(ad.cos(proj_yx), axis=0))
        return term1, term2

    def terms(self, X, Y=None) -> Tuple[Tensor, Tensor]:
        """The global and pairwise cosine expectations as (n, m) tensors."""
        hx = self.features(X)
        hy = hx if Y is None else self.features(Y)
        return self._terms_from_features(hx, hy, aligned=False)

    def matrix(self, X, Y=None) -> Tensor:
        term1, term2 = self.terms(X, Y)
        return 0.5 * term1 + 0.5 * term2

    def pair_values(self, A, B) -> Tensor:
        term1, term2 = self._terms_from_features(self.features(A), self.features(B), True)
        return 0.5 * term1 + 0.5 * term2

    def diag(self, X) -> Tensor:
        return Tensor(np.ones(as_points(X).shape[0]))

    def refresh(self) -> None:
        if self.feature_net.spectral_norm:
            self.feature_net.update_spectral_vectors()

    def sin_terms(self, X, Y) -> Tuple[Tensor, Tensor]:
        """
        E[sin(w . (h(y) - h(x)))] for the global and the pairwise frequencies,
        with w2 taken at the ordered pair (x, y). Shapes (n, m).
        """
        hx, hy = self.features(X), self.features(Y)
        proj1, proj_xy, _ = self._projections(hx, hy, aligned=False)
        return ad.tmean(ad.sin(-proj1), axis=-1), ad.tmean(ad.sin(-proj_xy), axis=0)

    def frequency_penalty(self, X, Y) -> Tensor:
        """
        Mean of ||w1|| + ||w2(x, y)|| + ||dw2(x, y) / dh(x)||_F over the
        aligned pairs (X_i, Y_i).
        """
        X, Y = as_points(X), as_points(Y)
        count = min(X.shape[0], Y.shape[0])
        hx, hy = self.features(X[:count]), self.features(Y[:count])
        samples, dim = self.num_freq_samples, self.output_dim
        inputs = ad.concat(
            [
                ad.broadcast_to(
                    ad.reshape(Tensor(self.noise_pair), (samples, 1, self.noise_dim)),
                    (samples, count, self.noise_dim),
                ),
                ad.broadcast_to(ad.expand_dims(hx, 0), (samples, count, dim)),
                ad.broadcast_to(ad.expand_dims(hy, 0), (samples, count, dim)),
            ],
            axis=-1,
        )
        flat = ad.reshape(inputs, (samples * count, self.noise_dim + 2 * dim))
        w2, jac = self.pair_net.forward_with_jacobian(flat, rows=self.first_cols)
        w1_norm = ad.tmean(ad.safe_norm(self.global_frequencies(), axis=-1))
        w2_norm = ad.tmean(ad.safe_norm(w2, axis=-1))
        jac_norm = ad.tmean(ad.safe_norm(ad.reshape(jac, (samples * count, dim * dim)), axis=-1))
        return w1_norm + w2_norm + jac_norm


def random_feature_eval(
    kernel: RandomFeatureKernel, x0, x, rng: Optional[np.random.Generator] = None
) -> float:
    """k(x0, x) for two single points; ``rng`` redraws the frequency noise first."""
    if rng is not None:
        kernel.resample(rng)
    return kernel(x0, x)
