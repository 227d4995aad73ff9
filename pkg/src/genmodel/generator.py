"""Noise-to-sample generator network."""

import logging
from typing import Optional, Sequence

import numpy as np

from src.constants import GENERATOR_NOISE_DIM
from src.core.autodiff import ParamStore, Tensor
from src.core.nn import Mlp, MlpSpec

logger = logging.getLogger(__name__)


class Generator:
    """
    y = g(eps) with eps ~ N(0, I) of dimension ``noise_dim``.

    Args:
        data_dim: Output dimension, equal to the data dimension.
        rng: Initialization source.
        noise_dim: Latent dimension.
        hidden: Hidden layer widths.
        params: Store to register the network in.
    """

    noise_tag = "standard-normal"

    def __init__(
        self,
        data_dim: int,
        rng: np.random.Generator,
        noise_dim: int = GENERATOR_NOISE_DIM,
        hidden: Sequence[int] = (64, 64),
        params: Optional[ParamStore] = None,
    ):
        self.data_dim = data_dim
        self.noise_dim = noise_dim
        self.params = params if params is not None else ParamStore()
        self.spec = MlpSpec.make(noise_dim, hidden, data_dim, activation="relu")
        self.net = Mlp(self.spec, self.params, "g", rng)

    def noise(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.standard_normal((count, self.noise_dim))

    def __call__(self, noise: np.ndarray) -> Tensor:
        return self.net(noise)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Detached samples."""
        return self(self.noise(rng, count)).data.copy()
