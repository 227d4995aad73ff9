"""Adam optimizer over a ParamStore."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from src.constants import ADAM_EPS, ADAM_GAN_BETAS, ADAM_DEFAULT_BETAS
from src.core.autodiff import ParamStore
from src.core.errors import ShapeError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First/second moments per parameter name plus the step counter."""

    lr: float = 1e-3
    beta1: float = ADAM_DEFAULT_BETAS[0]
    beta2: float = ADAM_DEFAULT_BETAS[1]
    eps: float = ADAM_EPS
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError(f"Learning rate must be >= 0, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("Adam eps must be positive")
        if self.step < 0:
            raise ValueError("Adam step counter must be >= 0")

    @classmethod
    def for_params(cls, params: ParamStore, lr: float, **kwargs) -> "AdamState":
        state = cls(lr=lr, **kwargs)
        for name, tensor in params.items():
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        return state

    @classmethod
    def for_generator(cls, params: ParamStore, lr: float) -> "AdamState":
        beta1, beta2 = ADAM_GAN_BETAS
        return cls.for_params(params, lr, beta1=beta1, beta2=beta2)


def adam_step(
    params: ParamStore, grads: Mapping[str, np.ndarray], state: AdamState
) -> ParamStore:
    """
    Apply one bias-corrected Adam update in place.

    Parameters without an entry in ``grads`` are treated as having a zero
    gradient, which leaves them unchanged while their moments decay.

    Raises:
        ShapeError: If a gradient or moment does not match its parameter.
    """
    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, tensor in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(tensor.data)
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != tensor.shape:
            raise ShapeError(
                f"Gradient for '{name}' has shape {grad.shape}, expected {tensor.shape}"
            )
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or v is None:
            m, v = np.zeros_like(tensor.data), np.zeros_like(tensor.data)
        if m.shape != tensor.shape or v.shape != tensor.shape:
            raise ShapeError(f"Adam moments for '{name}' do not match its shape")
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.m[name], state.v[name] = m, v
        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        tensor.data = tensor.data - update
    return params
