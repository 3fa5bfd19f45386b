import json

import numpy as np
import pytest

from orex.errors import InvalidInput, InvalidShape, ModelFormatError
from orex.model import (
    AffineLayer,
    Conv1DLayer,
    Network,
    ReluLayer,
    forward,
    gradient,
    load_model,
    lower_conv,
    lower_network,
    network_to_obj,
    save_model,
)
from oracles import direct_conv, finite_difference_gradient, random_net


def identity_net():
    return Network(
        layers=(AffineLayer(weights=np.eye(2), bias=np.zeros(2)),),
        input_words=2, embedding_dim=1, labels=("a", "b"),
    )


class TestForward:
    def test_sum_fixture(self, sum_net):
        pred = forward(sum_net, np.array([1.0, 1.0]))
        assert pred.logits.tolist() == [2.0, -2.0]
        assert pred.label == 0

    def test_tie_goes_to_smallest_label(self, sum_net):
        pred = forward(sum_net, np.array([0.0, 0.0]))
        assert pred.logits.tolist() == [0.0, 0.0]
        assert pred.label == 0

    def test_identity_net(self):
        pred = forward(identity_net(), np.array([0.3, -0.7]))
        assert pred.logits.tolist() == [0.3, -0.7]
        assert pred.label == 0

    def test_dimension_mismatch(self, sum_net):
        with pytest.raises(InvalidInput):
            forward(sum_net, np.array([1.0, 2.0, 3.0]))

    def test_deterministic(self, toyrelu_net):
        x = np.array([0.3, -0.9])
        a, b = forward(toyrelu_net, x), forward(toyrelu_net, x)
        assert np.array_equal(a.logits, b.logits) and a.label == b.label

    def test_shifting_logits_never_changes_label(self, toyrelu_net):
        rng = np.random.default_rng(7)
        for _ in range(50):
            x = rng.normal(size=2)
            logits = forward(toyrelu_net, x).logits
            assert int(np.argmax(logits)) == int(np.argmax(logits + 3.7))


class TestGradient:
    def test_sum_net_is_linear(self, sum_net):
        g = gradient(sum_net, np.array([5.0, -3.0]), (0, 1))
        assert g.tolist() == [2.0, 2.0]

    def test_inactive_relu_blocks_flow(self):
        net = Network(
            layers=(
                AffineLayer(weights=np.array([[1.0, 0.0]]), bias=np.zeros(1)),
                ReluLayer(),
                AffineLayer(weights=np.array([[1.0], [0.0]]), bias=np.zeros(2)),
            ),
            input_words=2, embedding_dim=1, labels=("a", "b"),
        )
        g = gradient(net, np.array([-1.0, 0.0]), (0, 1))
        assert g.tolist() == [0.0, 0.0]

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            net = random_net(rng, 3, 2, [6, 5])
            x = rng.normal(size=6)
            # keep clear of ReLU kinks so the comparison is well posed
            if _near_kink(net, x):
                continue
            g = gradient(net, x, (0, 1))
            fd = finite_difference_gradient(net, x, (0, 1))
            denom = max(np.linalg.norm(fd), 1e-12)
            assert np.linalg.norm(g - fd) / denom < 1e-4


def _near_kink(net, x, tol=1e-6):
    h = x
    for layer in net.layers:
        if isinstance(layer, AffineLayer):
            h = layer.weights @ h + layer.bias
        else:
            if np.any(np.abs(h) < tol):
                return True
            h = np.maximum(h, 0.0)
    return False


class TestLowerConv:
    def test_sliding_sum(self):
        layer = Conv1DLayer(kernel=np.array([[[1.0, 1.0]]]), stride=1, bias=np.zeros(1))
        dense = lower_conv(layer, in_positions=3)
        assert dense.weights.tolist() == [[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]
        assert dense.bias.tolist() == [0.0, 0.0]

    def test_strided_scaling(self):
        layer = Conv1DLayer(kernel=np.array([[[2.0]]]), stride=2, bias=np.zeros(1))
        dense = lower_conv(layer, in_positions=4)
        assert dense.weights.tolist() == [[2.0, 0.0, 0.0, 0.0], [0.0, 0.0, 2.0, 0.0]]

    def test_kernel_too_large(self):
        layer = Conv1DLayer(kernel=np.ones((1, 1, 5)), stride=1, bias=np.zeros(1))
        with pytest.raises(InvalidShape):
            lower_conv(layer, in_positions=3)

    def test_matches_direct_convolution(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            out_ch = int(rng.integers(1, 4))
            in_ch = int(rng.integers(1, 4))
            width = int(rng.integers(1, 4))
            stride = int(rng.integers(1, 3))
            positions = int(rng.integers(width, width + 4))
            kernel = rng.normal(size=(out_ch, in_ch, width))
            bias = rng.normal(size=out_ch)
            layer = Conv1DLayer(kernel=kernel, stride=stride, bias=bias)
            dense = lower_conv(layer, in_positions=positions)
            x = rng.normal(size=positions * in_ch)
            want = direct_conv(kernel, stride, bias, x, positions)
            assert np.allclose(dense.weights @ x + dense.bias, want, atol=1e-9)

    def test_lowered_network_forward_equivalence(self):
        rng = np.random.default_rng(5)
        conv = Conv1DLayer(kernel=rng.normal(size=(2, 2, 2)), stride=1,
                           bias=rng.normal(size=2))
        net = Network(
            layers=(
                conv,
                ReluLayer(),
                AffineLayer(weights=rng.normal(size=(2, 6)), bias=rng.normal(size=2)),
            ),
            input_words=4, embedding_dim=2, labels=("a", "b"),
        )
        lowered = lower_network(net)
        assert not lowered.has_conv()
        for _ in range(100):
            x = rng.normal(size=8)
            assert np.allclose(
                forward(net, x).logits, forward(lowered, x).logits, atol=1e-9
            )


class TestModelFiles:
    def test_sum_fixture_file(self, sum_net):
        assert sum_net.input_dim == 2
        assert sum_net.num_labels == 2
        assert len(sum_net.layers) == 1

    def test_mismatched_bias_rejected(self, sum_net):
        obj = network_to_obj(sum_net)
        obj["layers"][0]["bias"] = [0.0, 0.0, 0.0]
        with pytest.raises(ModelFormatError):
            load_model(json.dumps(obj).encode())

    def test_nonfinite_weight_rejected(self, sum_net):
        obj = network_to_obj(sum_net)
        obj["layers"][0]["weights"][0][0] = float("nan")
        with pytest.raises(ModelFormatError):
            load_model(json.dumps(obj).encode())

    def test_dimension_chain_break_rejected(self, toyrelu_net):
        obj = network_to_obj(toyrelu_net)
        obj["layers"][2]["weights"] = [[1.0, 1.0], [0.0, 0.0]]
        with pytest.raises(ModelFormatError):
            load_model(json.dumps(obj).encode())

    def test_round_trip_bytes(self, toyrelu_net):
        blob = save_model(toyrelu_net)
        assert save_model(load_model(blob)) == blob

    def test_dropout_is_dropped_with_note(self, sum_net):
        obj = network_to_obj(sum_net)
        obj["layers"].insert(0, {"kind": "dropout", "rate": 0.5})
        net = load_model(json.dumps(obj).encode())
        assert len(net.layers) == 1
        assert net.metadata["dropped_dropout_layers"] == 1
