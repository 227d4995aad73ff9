"""
Multilayer perceptrons built on the autodiff tensors.

Weights are stored as (fan_in, fan_out) so a layer computes ``x @ W + b``
for any number of leading batch dimensions.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core import autodiff as ad
from src.core.autodiff import ParamStore, Tensor
from src.core.errors import ShapeError
from src.kernels.spectral import power_iteration

logger = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "tanh", "softplus", "identity")
INIT_SCHEMES = ("he_uniform", "xavier_uniform")

_ACTIVATION_FNS = {
    "relu": ad.relu,
    "tanh": ad.tanh,
    "softplus": ad.softplus,
    "identity": ad.identity,
}


def activation_fn(name: str):
    if name not in _ACTIVATION_FNS:
        raise ValueError(f"Unknown activation '{name}'; use one of {ACTIVATIONS}")
    return _ACTIVATION_FNS[name]


def activation_derivative(name: str, pre: Tensor, post: Tensor) -> Optional[Tensor]:
    """Elementwise derivative of an activation; None for identity."""
    if name == "tanh":
        return 1.0 - ad.square(post)
    if name == "relu":
        return Tensor((pre.data > 0).astype(np.float64))
    if name == "softplus":
        return ad.sigmoid(pre)
    return None


@dataclass
class MlpSpec:
    """Layer widths (input first), one activation per layer and an init tag."""

    widths: List[int]
    activations: List[str]
    init: str = "he_uniform"

    def __post_init__(self):
        self.widths = [int(w) for w in self.widths]
        self.activations = list(self.activations)
        if len(self.widths) < 2:
            raise ValueError("MlpSpec needs at least one layer (two widths)")
        if any(w <= 0 for w in self.widths):
            raise ValueError(f"Layer widths must be positive: {self.widths}")
        if len(self.activations) != len(self.widths) - 1:
            raise ValueError(
                f"Expected {len(self.widths) - 1} activations, "
                f"got {len(self.activations)}"
            )
        unknown = [a for a in self.activations if a not in ACTIVATIONS]
        if unknown:
            raise ValueError(f"Unknown activations {unknown}; use one of {ACTIVATIONS}")
        if self.init not in INIT_SCHEMES:
            raise ValueError(f"Unknown init scheme '{self.init}'")

    @classmethod
    def make(
        cls,
        in_dim: int,
        hidden: Sequence[int],
        out_dim: int,
        activation: str = "tanh",
        output_activation: str = "identity",
        init: str = "he_uniform",
    ) -> "MlpSpec":
        widths = [in_dim, *hidden, out_dim]
        activations = [activation] * len(hidden) + [output_activation]
        return cls(widths, activations, init)

    @property
    def in_dim(self) -> int:
        return self.widths[0]

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    @property
    def num_layers(self) -> int:
        return len(self.widths) - 1

    def to_dict(self) -> Dict[str, object]:
        return {
            "widths": list(self.widths),
            "activations": list(self.activations),
            "init": self.init,
        }


class Mlp:
    """
    Feed-forward network whose parameters live in a shared ParamStore.

    Args:
        spec: Architecture.
        params: Store receiving ``<prefix>.W<i>`` and ``<prefix>.b<i>``.
        prefix: Parameter name prefix.
        rng: Initialization source.
        spectral_norm: Divide every weight by its spectral norm estimate.
        spectral_scale: Factor applied after spectral normalization.
        power_iters: Power iterations per ``update_spectral_vectors`` call.
    """

    def __init__(
        self,
        spec: MlpSpec,
        params: ParamStore,
        prefix: str,
        rng: np.random.Generator,
        spectral_norm: bool = False,
        spectral_scale: float = 1.0,
        power_iters: int = 1,
    ):
        self.spec = spec
        self.params = params
        self.prefix = prefix
        self.spectral_norm = spectral_norm
        self.spectral_scale = spectral_scale
        self.power_iters = power_iters
        self._u: List[np.ndarray] = []

        for layer, (fan_in, fan_out) in enumerate(zip(spec.widths[:-1], spec.widths[1:])):
            if spec.init == "he_uniform":
                bound = np.sqrt(6.0 / fan_in)
            else:
                bound = np.sqrt(6.0 / (fan_in + fan_out))
            params.add(self.weight_name(layer), rng.uniform(-bound, bound, (fan_in, fan_out)))
            bias_bound = 1.0 / np.sqrt(fan_in)
            params.add(self.bias_name(layer), rng.uniform(-bias_bound, bias_bound, fan_out))
            start = rng.standard_normal(fan_in)
            self._u.append(start / np.linalg.norm(start))

        if spectral_norm:
            self.update_spectral_vectors(iters=20)

    def weight_name(self, layer: int) -> str:
        return f"{self.prefix}.W{layer}"

    def bias_name(self, layer: int) -> str:
        return f"{self.prefix}.b{layer}"

    def parameter_names(self) -> List[str]:
        names = []
        for layer in range(self.spec.num_layers):
            names.extend([self.weight_name(layer), self.bias_name(layer)])
        return names

    # -- weights ----------------------------------------------------------

    def weight(self, layer: int) -> Tensor:
        """Effective weight of ``layer``, spectrally normalized if enabled."""
        w = self.params[self.weight_name(layer)]
        if not self.spectral_norm:
            return w
        u = self._u[layer]
        v = w.data.T @ u
        v = v / (np.linalg.norm(v) + 1e-12)
        sigma = ad.tsum(w * np.outer(u, v))
        return w / sigma * self.spectral_scale

    def bias(self, layer: int) -> Tensor:
        return self.params[self.bias_name(layer)]

    def update_spectral_vectors(self, iters: Optional[int] = None) -> List[float]:
        """Advance the persisted power-iteration vectors; returns raw sigmas."""
        sigmas = []
        for layer in range(self.spec.num_layers):
            w = self.params[self.weight_name(layer)].data
            sigma, u, _ = power_iteration(w, iters or self.power_iters, u0=self._u[layer])
            self._u[layer] = u
            sigmas.append(sigma)
        return sigmas

    def effective_sigmas(self, iters: int = 50) -> List[float]:
        """Spectral norm estimates of the weights as used in the forward pass."""
        return [
            power_iteration(self.weight(layer).data, iters)[0]
            for layer in range(self.spec.num_layers)
        ]

    # -- forward ------------------------------------------------------------

    def preactivation(
        self,
        x,
        layer: int = 0,
        rows: Optional[slice] = None,
        include_bias: bool = True,
    ) -> Tensor:
        """``x @ W[rows] (+ b)`` for one layer; ``rows`` selects input columns."""
        w = self.weight(layer)
        if rows is not None:
            w = w[rows]
        z = ad.matmul(x, w)
        return z + self.bias(layer) if include_bias else z

    def forward_from(self, first_preactivation: Tensor) -> Tensor:
        """Finish the forward pass given the first layer's pre-activation."""
        h = _ACTIVATION_FNS[self.spec.activations[0]](first_preactivation)
        for layer in range(1, self.spec.num_layers):
            z = self.preactivation(h, layer)
            h = _ACTIVATION_FNS[self.spec.activations[layer]](z)
        return h

    def __call__(self, x) -> Tensor:
        x = ad.as_tensor(x)
        if x.shape[-1] != self.spec.in_dim:
            raise ShapeError(
                f"{self.prefix}: expected input width {self.spec.in_dim}, got {x.shape[-1]}"
            )
        return self.forward_from(self.preactivation(x, 0))

    def forward_with_jacobian(
        self, x, rows: Optional[slice] = None
    ) -> Tuple[Tensor, Tensor]:
        """
        Output and input Jacobian for a batch of points.

        Args:
            x: (N, in_dim) inputs.
            rows: Restrict the Jacobian to these input columns.

        Returns:
            (output of shape (N, out), Jacobian of shape (N, out, in')), both
            differentiable with respect to the parameters.
        """
        x = ad.as_tensor(x)
        if x.ndim != 2:
            raise ShapeError(f"Jacobian needs (N, in) inputs, got {x.shape}")
        n = x.shape[0]
        z = self.preactivation(x, 0)
        act = self.spec.activations[0]
        h = _ACTIVATION_FNS[act](z)
        w0 = self.weight(0)
        if rows is not None:
            w0 = w0[rows]
        jac = ad.expand_dims(ad.transpose(w0), 0)
        slope = activation_derivative(act, z, h)
        if slope is None:
            jac = jac + np.zeros((n, 1, 1))
        else:
            jac = ad.expand_dims(slope, -1) * jac

        for layer in range(1, self.spec.num_layers):
            w = self.weight(layer)
            z = ad.matmul(h, w) + self.bias(layer)
            act = self.spec.activations[layer]
            h = _ACTIVATION_FNS[act](z)
            jac = ad.matmul(ad.transpose(w), jac)
            slope = activation_derivative(act, z, h)
            if slope is not None:
                jac = ad.expand_dims(slope, -1) * jac
        return h, jac

    def input_jacobian(self, x, rows: Optional[slice] = None) -> Tensor:
        return self.forward_with_jacobian(x, rows)[1]
