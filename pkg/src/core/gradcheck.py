"""
Central finite-difference oracles for reverse-mode gradients.

Shared by the test-suite and the ``validate`` command.
"""

from typing import Callable, Dict

import numpy as np

from src.core.autodiff import ParamStore, Tensor, backward, forward, Tape, gradients

DEFAULT_STEP = 1e-5


def relative_error(actual: np.ndarray, expected: np.ndarray, floor: float = 1e-10) -> float:
    """||a - b|| / max(||a||, ||b||, floor)."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    scale = max(np.linalg.norm(actual), np.linalg.norm(expected), floor)
    return float(np.linalg.norm(actual - expected) / scale)


def numerical_gradient(
    fn: Callable[[], float], array: np.ndarray, step: float = DEFAULT_STEP
) -> np.ndarray:
    """
    Central differences of ``fn`` with respect to ``array``.

    ``array`` is perturbed in place and restored entry by entry.
    """
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        upper = fn()
        flat[i] = original - step
        lower = fn()
        flat[i] = original
        out[i] = (upper - lower) / (2.0 * step)
    return grad


def check_param_gradients(
    loss_fn: Callable[[], Tensor], params: ParamStore, step: float = DEFAULT_STEP
) -> Dict[str, float]:
    """Relative error of backward() against central differences per parameter."""
    tape = Tape(loss_fn, params)
    analytic = backward(tape, forward(tape))

    def scalar() -> float:
        return float(loss_fn().data.reshape(-1)[0])

    return {
        name: relative_error(
            analytic[name], numerical_gradient(scalar, params[name].data, step)
        )
        for name in params.names()
    }


def check_input_gradient(
    fn: Callable[[Tensor], Tensor], x: np.ndarray, step: float = DEFAULT_STEP
) -> float:
    """Relative error of the gradient of scalar ``fn(x)`` with respect to ``x``."""
    point = np.array(x, dtype=np.float64, copy=True)
    leaf = Tensor(point, requires_grad=True)
    (analytic,) = gradients(fn(leaf), [leaf])
    numeric = numerical_gradient(lambda: float(fn(Tensor(point)).data.reshape(-1)[0]), point, step)
    return relative_error(analytic, numeric)
