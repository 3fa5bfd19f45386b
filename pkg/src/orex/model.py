"""Piecewise-linear classifier networks.

A network is an ordered stack of affine, ReLU and 1-d convolution layers
ending in an affine layer that emits one logit per label.  Softmax is never
applied: argmax over logits equals argmax over softmax, and keeping the
network piecewise-linear is what makes exact verification possible.
Convolutions are stored as such but can be lowered to an equivalent dense
affine layer so a single verifier covers both architectures.

All arithmetic is float64.  Every operation here is a pure function of its
(immutable) inputs.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import BinaryIO, Sequence, Union

import numpy as np

from .errors import InvalidInput, InvalidShape, ModelFormatError


@dataclass(frozen=True, eq=False)
class AffineLayer:
    """y = weights @ x + bias, weights is (out, in)."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class ReluLayer:
    """Elementwise max(x, 0); dimension-preserving."""


@dataclass(frozen=True, eq=False)
class Conv1DLayer:
    """1-d convolution over the word axis.

    kernel has shape (out_channels, in_channels, width) where in_channels is
    the embedding dimension of the incoming (positions, channels) sequence.
    bias is per output channel, added at every output position.  The flat
    layout is position-major, channel-minor on both sides.
    """

    kernel: np.ndarray
    stride: int
    bias: np.ndarray

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[1]

    @property
    def width(self) -> int:
        return self.kernel.shape[2]

    def out_positions(self, in_positions: int) -> int:
        if self.width > in_positions:
            raise InvalidShape(
                f"kernel width {self.width} exceeds {in_positions} input positions"
            )
        return (in_positions - self.width) // self.stride + 1


Layer = Union[AffineLayer, ReluLayer, Conv1DLayer]


@dataclass(frozen=True, eq=False)
class Prediction:
    label: int
    logits: np.ndarray


@dataclass(frozen=True, eq=False)
class Network:
    """A validated layer stack mapping R^{input_dim} to label logits."""

    layers: tuple
    input_words: int
    embedding_dim: int
    labels: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def input_dim(self) -> int:
        return self.input_words * self.embedding_dim

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    def __post_init__(self):
        _validate_stack(self.layers, self.input_words, self.embedding_dim, len(self.labels))

    def has_conv(self) -> bool:
        return any(isinstance(l, Conv1DLayer) for l in self.layers)


def _layer_dims(layer: Layer, in_dim: int, in_positions: int, in_channels: int, where: str):
    """Return (out_dim, out_positions, out_channels) after `layer`."""
    if isinstance(layer, AffineLayer):
        if layer.weights.ndim != 2 or layer.bias.ndim != 1:
            raise ModelFormatError("weights must be 2-d and bias 1-d", where)
        if layer.bias.shape[0] != layer.out_dim:
            raise ModelFormatError(
                f"bias length {layer.bias.shape[0]} != {layer.out_dim} rows", where
            )
        if layer.in_dim != in_dim:
            raise ModelFormatError(
                f"expects {layer.in_dim} inputs, previous layer provides {in_dim}", where
            )
        # Dense output has no natural sequence structure left.
        return layer.out_dim, layer.out_dim, 1
    if isinstance(layer, ReluLayer):
        return in_dim, in_positions, in_channels
    if isinstance(layer, Conv1DLayer):
        if layer.kernel.ndim != 3:
            raise ModelFormatError("kernel must be (out, in, width)", where)
        if layer.stride < 1:
            raise ModelFormatError(f"stride must be >= 1, got {layer.stride}", where)
        if layer.in_channels != in_channels:
            raise ModelFormatError(
                f"kernel expects {layer.in_channels} channels, sequence has {in_channels}",
                where,
            )
        if layer.bias.shape != (layer.out_channels,):
            raise ModelFormatError("bias must have one entry per output channel", where)
        try:
            out_pos = layer.out_positions(in_positions)
        except InvalidShape as exc:
            raise ModelFormatError(str(exc), where) from exc
        return out_pos * layer.out_channels, out_pos, layer.out_channels
    raise ModelFormatError(f"unknown layer type {type(layer).__name__}", where)


def _validate_stack(layers, input_words, embedding_dim, num_labels):
    if num_labels < 2:
        raise ModelFormatError("need at least 2 labels")
    if not layers:
        raise ModelFormatError("network has no layers")
    dim = input_words * embedding_dim
    positions, channels = input_words, embedding_dim
    for i, layer in enumerate(layers):
        where = f"layers[{i}]"
        for arr_name in ("weights", "bias", "kernel"):
            arr = getattr(layer, arr_name, None)
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ModelFormatError(f"non-finite {arr_name} entry", where)
        dim, positions, channels = _layer_dims(layer, dim, positions, channels, where)
    last = layers[-1]
    if not isinstance(last, AffineLayer):
        raise ModelFormatError("final layer must be affine (logits)", f"layers[{len(layers)-1}]")
    if dim != num_labels:
        raise ModelFormatError(
            f"final layer emits {dim} outputs, expected {num_labels} labels"
        )


def argmax_label(logits: np.ndarray) -> int:
    """Ties resolve to the smallest label index (np.argmax picks the first max)."""
    return int(np.argmax(logits))


def _check_point(net: Network, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise InvalidInput(f"input has shape {x.shape}, expected ({net.input_dim},)")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("input contains non-finite entries")
    return x


def _conv_forward(layer: Conv1DLayer, x: np.ndarray, in_positions: int) -> np.ndarray:
    seq = x.reshape(in_positions, layer.in_channels)
    out_pos = layer.out_positions(in_positions)
    out = np.empty((out_pos, layer.out_channels))
    for j in range(out_pos):
        window = seq[j * layer.stride : j * layer.stride + layer.width]  # (width, in)
        out[j] = np.einsum("oiw,wi->o", layer.kernel, window) + layer.bias
    return out.reshape(-1)


def forward(net: Network, x) -> Prediction:
    """Evaluate the network; ties in the argmax go to the smallest label index."""
    h = _check_point(net, x)
    positions = net.input_words
    for layer in net.layers:
        if isinstance(layer, AffineLayer):
            h = layer.weights @ h + layer.bias
            positions = h.shape[0]
        elif isinstance(layer, ReluLayer):
            h = np.maximum(h, 0.0)
        else:
            h = _conv_forward(layer, h, positions)
            positions = layer.out_positions(positions)
    return Prediction(label=argmax_label(h), logits=h)


def batch_logits(net: Network, xs: np.ndarray) -> np.ndarray:
    """Logits for a (n, input_dim) batch; used by sampling-based checks.

    Requires a conv-free network (lower first).
    """
    if net.has_conv():
        raise InvalidInput("lower convolutions before batch evaluation")
    h = np.asarray(xs, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != net.input_dim:
        raise InvalidInput(f"batch has shape {h.shape}, expected (n, {net.input_dim})")
    for layer in net.layers:
        if isinstance(layer, AffineLayer):
            h = h @ layer.weights.T + layer.bias
        else:
            h = np.maximum(h, 0.0)
    return h


def gradient(net: Network, x, pair: tuple) -> np.ndarray:
    """Gradient of (logit_a - logit_b) w.r.t. the input.

    At ReLU kinks the subgradient with slope 0 on the inactive side is used
    (pre-activation <= 0 contributes nothing).
    """
    a, b = pair
    if a == b:
        raise InvalidInput("gradient needs two distinct labels")
    if net.has_conv():
        raise InvalidInput("lower convolutions before taking gradients")
    h = _check_point(net, x)
    pre_acts = []
    for layer in net.layers:
        if isinstance(layer, AffineLayer):
            h = layer.weights @ h + layer.bias
        else:
            pre_acts.append(h)
            h = np.maximum(h, 0.0)
    if not (0 <= a < h.shape[0] and 0 <= b < h.shape[0]):
        raise InvalidInput(f"label pair {pair} out of range for {h.shape[0]} logits")
    delta = np.zeros(h.shape[0])
    delta[a], delta[b] = 1.0, -1.0
    for layer in reversed(net.layers):
        if isinstance(layer, AffineLayer):
            delta = layer.weights.T @ delta
        else:
            delta = delta * (pre_acts.pop() > 0.0)
    return delta


def lower_conv(layer: Conv1DLayer, in_positions: int) -> AffineLayer:
    """Dense affine layer computing exactly the same function as the convolution."""
    if layer.width > in_positions:
        raise InvalidShape(
            f"kernel width {layer.width} exceeds {in_positions} input positions"
        )
    d, out_pos = layer.in_channels, layer.out_positions(in_positions)
    w = np.zeros((out_pos * layer.out_channels, in_positions * d))
    b = np.zeros(out_pos * layer.out_channels)
    for j in range(out_pos):
        for o in range(layer.out_channels):
            row = j * layer.out_channels + o
            start = j * layer.stride * d
            w[row, start : start + layer.width * d] = layer.kernel[o].T.reshape(-1)
            b[row] = layer.bias[o]
    return AffineLayer(weights=w, bias=b)


def lower_network(net: Network) -> Network:
    """Replace every convolution by its dense equivalent."""
    if not net.has_conv():
        return net
    out, positions = [], net.input_words
    for layer in net.layers:
        if isinstance(layer, Conv1DLayer):
            out.append(lower_conv(layer, positions))
            positions = layer.out_positions(positions)
        else:
            out.append(layer)
            if isinstance(layer, AffineLayer):
                positions = layer.out_dim
    return Network(
        layers=tuple(out),
        input_words=net.input_words,
        embedding_dim=net.embedding_dim,
        labels=net.labels,
        metadata=dict(net.metadata),
    )


# --- canonical JSON model files ---------------------------------------------
#
# Canonical form: UTF-8, 2-space indent, fixed key order, floats in Python
# repr (shortest round-trip).  save(load(save(net))) is byte-identical.

def _layer_to_obj(layer: Layer) -> dict:
    if isinstance(layer, AffineLayer):
        return {
            "kind": "affine",
            "weights": [[float(v) for v in row] for row in layer.weights],
            "bias": [float(v) for v in layer.bias],
        }
    if isinstance(layer, ReluLayer):
        return {"kind": "relu"}
    return {
        "kind": "conv1d",
        "kernel": [[[float(v) for v in w] for w in ch] for ch in layer.kernel],
        "stride": int(layer.stride),
        "bias": [float(v) for v in layer.bias],
    }


def network_to_obj(net: Network) -> dict:
    return {
        "input_words": net.input_words,
        "embedding_dim": net.embedding_dim,
        "labels": list(net.labels),
        "layers": [_layer_to_obj(l) for l in net.layers],
    }


def canonical_dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ModelFormatError(f"missing key {key!r}", where)
    return obj[key]


def _float_array(value, where: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"not a numeric array: {exc}", where) from exc
    if arr.ndim != ndim:
        raise ModelFormatError(f"expected {ndim}-d array, got {arr.ndim}-d", where)
    if not np.all(np.isfinite(arr)):
        raise ModelFormatError("non-finite entry", where)
    return arr


def _layer_from_obj(obj: dict, where: str) -> Layer | None:
    kind = _require(obj, "kind", where)
    if kind == "affine":
        return AffineLayer(
            weights=_float_array(_require(obj, "weights", where), f"{where}.weights", 2),
            bias=_float_array(_require(obj, "bias", where), f"{where}.bias", 1),
        )
    if kind == "relu":
        return ReluLayer()
    if kind == "conv1d":
        kernel = _float_array(_require(obj, "kernel", where), f"{where}.kernel", 3)
        bias = (
            _float_array(obj["bias"], f"{where}.bias", 1)
            if "bias" in obj
            else np.zeros(kernel.shape[0])
        )
        return Conv1DLayer(kernel=kernel, stride=int(obj.get("stride", 1)), bias=bias)
    if kind == "dropout":
        return None  # inference no-op, dropped at load
    raise ModelFormatError(f"unknown layer kind {kind!r}", where)


def network_from_obj(obj: dict) -> Network:
    if not isinstance(obj, dict):
        raise ModelFormatError("model file must hold a JSON object")
    layers, dropped = [], 0
    raw_layers = _require(obj, "layers", "$")
    if not isinstance(raw_layers, list):
        raise ModelFormatError("must be a list", "layers")
    for i, raw in enumerate(raw_layers):
        layer = _layer_from_obj(raw, f"layers[{i}]")
        if layer is None:
            dropped += 1
        else:
            layers.append(layer)
    labels = _require(obj, "labels", "$")
    if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
        raise ModelFormatError("must be a list of strings", "labels")
    meta = {"dropped_dropout_layers": dropped} if dropped else {}
    return Network(
        layers=tuple(layers),
        input_words=int(_require(obj, "input_words", "$")),
        embedding_dim=int(_require(obj, "embedding_dim", "$")),
        labels=tuple(labels),
        metadata=meta,
    )


def load_model(source: Union[str, bytes, BinaryIO]) -> Network:
    """Load a network from a canonical model file (path, bytes or stream)."""
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, (io.IOBase,)) or hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    try:
        obj = json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"not valid UTF-8 JSON: {exc}") from exc
    return network_from_obj(obj)


def save_model(net: Network) -> bytes:
    return canonical_dumps(network_to_obj(net)).encode("utf-8")
