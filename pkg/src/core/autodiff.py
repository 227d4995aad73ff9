"""
Reverse-mode automatic differentiation over dense float64 tensors.

Every primitive produces a Tensor that remembers its parents and a
vector-Jacobian product closure. While a Tape is active it records the
nodes in creation order and carries the parameter registry that backward()
reports gradients for. Any primitive whose output is not finite raises
NonFiniteError instead of letting NaN/Inf flow into an optimizer.
"""

import itertools
import logging
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

_ACTIVE_TAPES: List["Tape"] = []
_NODE_IDS = itertools.count()

VJP = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(
        i for i, dim in enumerate(shape) if dim == 1 and grad.shape[i] != 1
    )
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A float64 array that participates in reverse-mode differentiation."""

    __array_priority__ = 100.0

    def __init__(
        self,
        data: Union["Tensor", np.ndarray, float, Sequence[float]],
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.op = "leaf"
        self.node_id = next(_NODE_IDS)
        self._parents: Tuple["Tensor", ...] = ()
        self._vjp: Optional[VJP] = None

    # -- array protocol -------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __len__(self) -> int:
        return self.data.shape[0]

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self.op!r}{label})"

    # -- operators ------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent: float):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return take(self, index)

    # -- method forms ---------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def swapaxes(self, a: int, b: int) -> "Tensor":
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return transpose(self, tuple(axes))

    def exp(self) -> "Tensor":
        return exp(self)

    def log(self) -> "Tensor":
        return log(self)

    def tanh(self) -> "Tensor":
        return tanh(self)

    def relu(self) -> "Tensor":
        return relu(self)

    def sqrt(self) -> "Tensor":
        return sqrt(self)


def as_tensor(value) -> Tensor:
    """Wrap constants; tensors pass through unchanged."""
    return value if isinstance(value, Tensor) else Tensor(value)


def primitive(
    data: np.ndarray, parents: Sequence[Tensor], vjp: VJP, op: str
) -> Tensor:
    """
    Create the output node of a primitive.

    Args:
        data: Output value.
        parents: Tensors the output depends on.
        vjp: Maps the output gradient to one gradient (or None) per parent.
        op: Name reported in errors and node listings.

    Raises:
        NonFiniteError: If ``data`` contains NaN or Inf.
    """
    data = np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite value produced by '{op}'")
    out = Tensor(data)
    out.op = op
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
        if _ACTIVE_TAPES:
            _ACTIVE_TAPES[-1]._record(out)
    return out


# =============================================================================
# ELEMENTWISE AND BROADCASTING PRIMITIVES
# =============================================================================


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return primitive(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return primitive(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return primitive(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.shape),
            _unbroadcast(g * a.data, b.shape),
        ),
        "mul",
    )


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = a.data / b.data
    return primitive(
        value,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        ),
        "div",
    )


def neg(a) -> Tensor:
    a = as_tensor(a)
    return primitive(-a.data, (a,), lambda g: (-g,), "neg")


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = a.data**exponent
    return primitive(
        value,
        (a,),
        lambda g: (g * exponent * a.data ** (exponent - 1),),
        f"pow{exponent}",
    )


def square(a) -> Tensor:
    a = as_tensor(a)
    return primitive(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,), "square")


def exp(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        value = np.exp(a.data)
    return primitive(value, (a,), lambda g: (g * value,), "exp")


def log(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.log(a.data)
    return primitive(value, (a,), lambda g: (g / a.data,), "log")


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(invalid="ignore"):
        value = np.sqrt(a.data)
    return primitive(value, (a,), lambda g: (0.5 * g / value,), "sqrt")


def tanh(a) -> Tensor:
    a = as_tensor(a)
    value = np.tanh(a.data)
    return primitive(value, (a,), lambda g: (g * (1.0 - value * value),), "tanh")


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return primitive(a.data * mask, (a,), lambda g: (g * mask,), "relu")


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    value = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return primitive(value, (a,), lambda g: (g * value * (1.0 - value),), "sigmoid")


def softplus(a) -> Tensor:
    a = as_tensor(a)
    value = np.logaddexp(0.0, a.data)
    slope = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return primitive(value, (a,), lambda g: (g * slope,), "softplus")


def identity(a) -> Tensor:
    return as_tensor(a)


def cos(a) -> Tensor:
    a = as_tensor(a)
    return primitive(np.cos(a.data), (a,), lambda g: (-g * np.sin(a.data),), "cos")


def sin(a) -> Tensor:
    a = as_tensor(a)
    return primitive(np.sin(a.data), (a,), lambda g: (g * np.cos(a.data),), "sin")


def tabs(a) -> Tensor:
    a = as_tensor(a)
    return primitive(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),), "abs")


def clip_min(a, floor: float) -> Tensor:
    """max(a, floor) with the gradient routed only where a > floor."""
    a = as_tensor(a)
    mask = a.data > floor
    return primitive(
        np.where(mask, a.data, floor), (a,), lambda g: (g * mask,), "clip_min"
    )


def where(condition: np.ndarray, a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    cond = np.asarray(condition, dtype=bool)
    return primitive(
        np.where(cond, a.data, b.data),
        (a, b),
        lambda g: (
            _unbroadcast(np.where(cond, g, 0.0), a.shape),
            _unbroadcast(np.where(cond, 0.0, g), b.shape),
        ),
        "where",
    )


# =============================================================================
# REDUCTIONS, SHAPE MANIPULATION AND LINEAR ALGEBRA
# =============================================================================


def _normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(ax % ndim for ax in axis))


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return primitive(a.data.sum(axis=axes, keepdims=keepdims), (a,), vjp, "sum")


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return tsum(a, axis=axes, keepdims=keepdims) / float(count)


def logsumexp(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    peak = np.max(a.data, axis=axes, keepdims=True)
    shifted = np.exp(a.data - peak)
    total = shifted.sum(axis=axes, keepdims=True)
    value = peak + np.log(total)
    weights = shifted / total

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (g * weights,)

    out = value if keepdims else np.squeeze(value, axis=axes)
    return primitive(out, (a,), vjp, "logsumexp")


def reshape(a, shape: Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    return primitive(
        a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape"
    )


def transpose(a, axes: Optional[Tuple[int, ...]] = None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return primitive(
        a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), "transpose"
    )


def expand_dims(a, axis: int) -> Tensor:
    a = as_tensor(a)
    shape = list(a.shape)
    axis = axis if axis >= 0 else a.ndim + 1 + axis
    shape.insert(axis, 1)
    return reshape(a, tuple(shape))


def broadcast_to(a, shape: Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    return primitive(
        np.broadcast_to(a.data, shape).copy(),
        (a,),
        lambda g: (_unbroadcast(g, a.shape),),
        "broadcast_to",
    )


def take(a, index) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        full = np.zeros(a.shape)
        np.add.at(full, index, g)
        return (full,)

    return primitive(a.data[index], (a,), vjp, "getitem")


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return primitive(
        np.concatenate([t.data for t in tensors], axis=axis), tensors, vjp, "concat"
    )


def matmul(a, b) -> Tensor:
    """Batched matrix product; both operands need at least two dimensions."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs 2-D or batched operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")

    def vjp(g):
        grad_a = g @ np.swapaxes(b.data, -1, -2)
        grad_b = np.swapaxes(a.data, -1, -2) @ g
        return (_unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape))

    return primitive(a.data @ b.data, (a, b), vjp, "matmul")


def safe_norm(a, axis: int = -1, floor: float = 1e-12) -> Tensor:
    """
    Euclidean norm along ``axis`` that is exactly zero at the origin and
    keeps a bounded gradient there: sqrt(s + floor) - sqrt(floor).
    """
    sq = tsum(square(a), axis=axis)
    return sqrt(sq + floor) - float(np.sqrt(floor))


# =============================================================================
# PARAMETERS, TAPE, FORWARD AND BACKWARD
# =============================================================================


class ParamStore:
    """Named parameter tensors with matching gradient slots."""

    def __init__(self):
        self._params: Dict[str, Tensor] = {}
        self.grads: Dict[str, np.ndarray] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"Parameter '{name}' already registered")
        tensor = Tensor(np.array(value, dtype=np.float64, copy=True), True, name)
        self._params[name] = tensor
        self.grads[name] = np.zeros_like(tensor.data)
        return tensor

    def attach(self, other: "ParamStore") -> "ParamStore":
        """Share every tensor of ``other`` under the same names."""
        for name, tensor in other.items():
            if name in self._params and self._params[name] is not tensor:
                raise ValueError(f"Parameter '{name}' already registered")
            self._params[name] = tensor
            self.grads[name] = other.grads[name]
        return self

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self) -> List[str]:
        return list(self._params)

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def restore(self, arrays: Dict[str, np.ndarray]) -> None:
        for name, value in arrays.items():
            if self._params[name].shape != np.shape(value):
                raise ShapeError(f"Shape mismatch restoring '{name}'")
            self._params[name].data = np.array(value, dtype=np.float64, copy=True)

    def zero_grad(self) -> None:
        for name, tensor in self._params.items():
            self.grads[name] = np.zeros_like(tensor.data)

    def num_values(self) -> int:
        return int(sum(t.size for t in self._params.values()))


class Tape:
    """
    Ordered record of the nodes built while the tape is active.

    Args:
        fn: Graph builder called by forward() with the bound input tensors.
        params: Parameter registry reported by backward().
    """

    def __init__(
        self,
        fn: Optional[Callable[..., Tensor]] = None,
        params: Optional[ParamStore] = None,
    ):
        self.fn = fn
        self.params = params if params is not None else ParamStore()
        self.nodes: List[Tensor] = []
        self.input_shapes: Optional[Tuple[Tuple[int, ...], ...]] = None
        self.output: Optional[Tensor] = None

    def _record(self, node: Tensor) -> None:
        self.nodes.append(node)

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        top = _ACTIVE_TAPES.pop()
        if top is not self:
            raise RuntimeError("Tape stack corrupted")


def forward(tape: Tape, inputs: Sequence = ()) -> Tensor:
    """
    Evaluate the tape's graph builder on ``inputs``.

    The first call fixes the input shapes; later calls must match them.

    Raises:
        ShapeError: On an input shape mismatch.
        NonFiniteError: If any intermediate value is NaN/Inf.
    """
    if tape.fn is None:
        raise ValueError("Tape has no graph builder")
    bound = [x if isinstance(x, Tensor) else Tensor(x) for x in inputs]
    shapes = tuple(t.shape for t in bound)
    if tape.input_shapes is None:
        tape.input_shapes = shapes
    elif shapes != tape.input_shapes:
        raise ShapeError(f"Inputs {shapes} do not match recorded {tape.input_shapes}")
    tape.nodes = []
    with tape:
        out = tape.fn(*bound)
    tape.output = out
    return out


def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def gradients(loss: Tensor, wrt: Sequence[Tensor]) -> List[np.ndarray]:
    """Gradients of a scalar ``loss`` with respect to each tensor in ``wrt``."""
    if loss.size != 1:
        raise ShapeError(f"Loss must be scalar, got shape {loss.shape}")
    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    if loss.requires_grad:
        for node in reversed(_topological_order(loss)):
            upstream = grads.get(id(node))
            if upstream is None or node._vjp is None:
                continue
            for parent, contribution in zip(node._parents, node._vjp(upstream)):
                if contribution is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + contribution if key in grads else contribution
    return [
        np.array(grads[id(t)], copy=True) if id(t) in grads else np.zeros_like(t.data)
        for t in wrt
    ]


def backward(tape: Tape, loss: Tensor) -> Dict[str, np.ndarray]:
    """
    Populate and return gradients for every parameter registered on the tape.

    Parameters the loss does not reach receive zeros.
    """
    names = tape.params.names()
    values = gradients(loss, [tape.params[name] for name in names])
    grad_map = dict(zip(names, values))
    for name, value in grad_map.items():
        tape.params.grads[name] = value
    return grad_map


def value_and_grad(
    fn: Callable[[], Tensor], params: ParamStore
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Evaluate a zero-argument scalar builder and its parameter gradients."""
    tape = Tape(lambda: fn(), params)
    out = forward(tape)
    return float(out.data.reshape(-1)[0]), backward(tape, out)
