"""
Tests for the reverse-mode autodiff engine, the MLP and Adam.
"""

import math

import numpy as np
import pytest

from src.core import autodiff as ad
from src.core.autodiff import ParamStore, Tape, Tensor
from src.core.errors import NonFiniteError, ShapeError
from src.core.gradcheck import check_input_gradient, check_param_gradients
from src.core.nn import Mlp, MlpSpec
from src.core.optim import AdamState, adam_step


def _reference_forward(params: ParamStore, spec: MlpSpec, x: np.ndarray) -> np.ndarray:
    """Scalar loops, no autodiff."""
    h = list(x)
    for layer in range(spec.num_layers):
        W = params[f"net.W{layer}"].data
        b = params[f"net.b{layer}"].data
        out = []
        for j in range(W.shape[1]):
            z = b[j]
            for i in range(W.shape[0]):
                z += h[i] * W[i, j]
            out.append(math.tanh(z) if spec.activations[layer] == "tanh" else z)
        h = out
    return np.array(h)


class TestForward:
    def test_identity_network(self, rng):
        params = ParamStore()
        net = Mlp(MlpSpec([3, 3], ["identity"]), params, "net", rng)
        params["net.W0"].data = np.eye(3)
        params["net.b0"].data = np.zeros(3)
        x = np.array([[0.5, -1.0, 2.0]])
        np.testing.assert_array_equal(net(x).data, x)

    def test_two_layer_tanh_matches_reference(self, rng):
        params = ParamStore()
        spec = MlpSpec.make(2, [4], 2, activation="tanh")
        net = Mlp(spec, params, "net", rng)
        x = np.zeros(2)
        expected = _reference_forward(params, spec, x)
        np.testing.assert_allclose(net(x[None, :]).data[0], expected, rtol=0, atol=1e-14)

    def test_tape_rejects_shape_change(self):
        tape = Tape(lambda x: ad.tsum(x))
        ad.forward(tape, [np.ones(3)])
        with pytest.raises(ShapeError):
            ad.forward(tape, [np.ones(4)])

    def test_non_finite_value_raises(self):
        with pytest.raises(NonFiniteError):
            ad.log(Tensor([-1.0]))

    def test_deterministic_forward(self):
        outputs = []
        for _ in range(2):
            params = ParamStore()
            net = Mlp(MlpSpec.make(2, [5], 1), params, "net", np.random.default_rng(7))
            outputs.append(net(np.ones((3, 2))).data)
        np.testing.assert_array_equal(outputs[0], outputs[1])

    def test_item_of_single_element(self):
        assert Tensor([[2.5]]).item() == 2.5
        assert Tensor(-1.0).item() == -1.0

    @pytest.mark.parametrize("value", [np.zeros(3), np.ones((2, 2)), np.zeros(0)])
    def test_item_rejects_other_shapes(self, value):
        with pytest.raises(ShapeError):
            Tensor(value).item()


class TestBackward:
    def test_sum_gradient_is_ones(self):
        x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
        (grad,) = ad.gradients(ad.tsum(x), [x])
        np.testing.assert_array_equal(grad, np.ones(3))

    def test_squared_norm_gradient(self):
        values = np.array([1.5, -0.5, 2.0])
        x = Tensor(values, requires_grad=True)
        (grad,) = ad.gradients(ad.tsum(ad.square(x)), [x])
        np.testing.assert_allclose(grad, 2.0 * values)

    def test_non_scalar_loss_rejected(self):
        x = Tensor(np.ones(2), requires_grad=True)
        with pytest.raises(ShapeError):
            ad.gradients(x * 2.0, [x])

    def test_unused_parameter_gets_zero_gradient(self):
        params = ParamStore()
        used = params.add("used", np.ones(2))
        params.add("unused", np.ones(3))
        tape = Tape(lambda: ad.tsum(used * 3.0), params)
        grads = ad.backward(tape, ad.forward(tape))
        np.testing.assert_array_equal(grads["unused"], np.zeros(3))
        np.testing.assert_array_equal(grads["used"], np.full(2, 3.0))

    def test_mlp_gradient_matches_finite_differences(self, rng):
        params = ParamStore()
        net = Mlp(MlpSpec.make(3, [6], 2, activation="tanh"), params, "net", rng)
        x = rng.standard_normal((5, 3))
        errors = check_param_gradients(lambda: ad.tsum(ad.square(net(x))), params)
        assert max(errors.values()) < 1e-4

    def test_backward_is_linear(self, rng):
        params = ParamStore()
        net = Mlp(MlpSpec.make(2, [4], 1, activation="tanh"), params, "net", rng)
        x = rng.standard_normal((3, 2))

        def grads(fn):
            tape = Tape(fn, params)
            return ad.backward(tape, ad.forward(tape))

        first = grads(lambda: ad.tsum(net(x)))
        second = grads(lambda: ad.tsum(ad.square(net(x))))
        both = grads(lambda: ad.tsum(net(x)) + ad.tsum(ad.square(net(x))))
        for name in params:
            np.testing.assert_allclose(both[name], first[name] + second[name], atol=1e-12)

    @pytest.mark.parametrize(
        "fn",
        [
            lambda x: ad.tsum(ad.exp(-ad.square(x))),
            lambda x: ad.logsumexp(x * 2.0),
            lambda x: ad.tsum(ad.softplus(x) * ad.cos(x)),
            lambda x: ad.tsum(ad.safe_norm(ad.reshape(x, (2, 2)))),
        ],
    )
    def test_input_gradients(self, fn):
        x = np.array([0.3, -1.2, 0.8, 2.0])
        assert check_input_gradient(fn, x) < 1e-4


class TestAdam:
    def test_zero_gradient_leaves_parameters(self):
        params = ParamStore()
        params.add("w", np.array([1.0, -2.0]))
        state = AdamState.for_params(params, lr=0.1)
        adam_step(params, {"w": np.zeros(2)}, state)
        np.testing.assert_array_equal(params["w"].data, [1.0, -2.0])
        assert state.step == 1

    def test_constant_gradient_moves_against_sign(self):
        params = ParamStore()
        params.add("w", np.zeros(2))
        state = AdamState.for_params(params, lr=0.01)
        for _ in range(50):
            adam_step(params, {"w": np.array([1.0, -1.0])}, state)
        assert params["w"].data[0] < 0
        assert params["w"].data[1] > 0

    def test_first_step_magnitude_is_learning_rate(self):
        params = ParamStore()
        params.add("w", np.zeros(1))
        state = AdamState.for_params(params, lr=0.1)
        adam_step(params, {"w": np.ones(1)}, state)
        assert params["w"].data[0] == pytest.approx(-0.1, abs=1e-8)

    def test_shape_mismatch(self):
        params = ParamStore()
        params.add("w", np.zeros(2))
        with pytest.raises(ShapeError):
            adam_step(params, {"w": np.zeros(3)}, AdamState.for_params(params, lr=0.1))

    def test_generator_betas(self):
        params = ParamStore()
        params.add("w", np.zeros(1))
        state = AdamState.for_generator(params, lr=1e-3)
        assert (state.beta1, state.beta2) == (0.5, 0.999)
