"""Minimal deterministic network executor.

Supports exactly the layer set needed for verification and sensitivity
probing: conv2d (with or without bias), the rewritten depthwise/pointwise
pair, ReLU, 2x2 average pooling, global average pooling, and dense. Anything
else is rejected up front.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .conv import conv2d_ref, im2col
from .types import ConvLayerSpec, ShapeError, WeightMatrix


@dataclass
class Conv2D:
    id: str
    weights: WeightMatrix
    bias: np.ndarray | None = None
    type: str = field(default="conv2d", init=False)

    @property
    def spec(self) -> ConvLayerSpec:
        return self.weights.spec


@dataclass
class GdwsPair:
    """Duplicate channels, apply one K x K filter each, then mix pointwise.

    gdw has shape (G, K, K), one filter per intermediate channel; dup[j] is
    the source input channel of intermediate channel j; pw is (M, G).
    """

    id: str
    spec: ConvLayerSpec
    g: np.ndarray
    dup: np.ndarray
    gdw: np.ndarray
    pw: np.ndarray
    bias: np.ndarray | None = None
    type: str = field(default="gdws_pair", init=False)

    def __post_init__(self) -> None:
        big_g = int(np.sum(self.g))
        k = self.spec.kernel
        if self.gdw.shape != (big_g, k, k):
            raise ShapeError(f"{self.id}: gdw shape {self.gdw.shape}")
        if self.pw.shape != (self.spec.out_channels, big_g):
            raise ShapeError(f"{self.id}: pw shape {self.pw.shape}")
        if self.dup.shape != (big_g,):
            raise ShapeError(f"{self.id}: dup length {self.dup.shape}")


@dataclass
class Dense:
    id: str
    weights: np.ndarray
    bias: np.ndarray | None = None
    type: str = field(default="dense", init=False)


@dataclass
class ReLU:
    id: str
    type: str = field(default="relu", init=False)


@dataclass
class AvgPool2:
    """2x2 average pooling, stride 2; spatial dims must be even."""

    id: str
    type: str = field(default="avgpool", init=False)


@dataclass
class GlobalAvgPool:
    id: str
    type: str = field(default="globalavgpool", init=False)


Layer = Conv2D | GdwsPair | Dense | ReLU | AvgPool2 | GlobalAvgPool


@dataclass
class NetworkManifest:
    """Ordered layer list with a declared input shape (C, H, W)."""

    name: str
    variant: str
    input_shape: tuple[int, int, int]
    layers: list

    def __post_init__(self) -> None:
        if self.variant not in ("standard", "gdws"):
            raise ShapeError(f"unknown variant {self.variant!r}")

    def conv_layers(self) -> list[Conv2D]:
        return [l for l in self.layers if isinstance(l, Conv2D)]

    def replaced(self, layers: list, variant: str) -> "NetworkManifest":
        return NetworkManifest(self.name, variant, self.input_shape, layers)


def _depthwise(x: np.ndarray, dup: np.ndarray, gdw: np.ndarray,
               spec: ConvLayerSpec) -> np.ndarray:
    """One K x K filter per intermediate channel, on duplicated inputs."""
    k = spec.kernel
    src = x[dup]
    one = ConvLayerSpec("dw", 1, k, 1, spec.stride, spec.padding)
    outs = []
    for j in range(src.shape[0]):
        cols = im2col(src[j:j + 1], one)
        kern = gdw[j].reshape(1, k * k)
        acc = np.zeros(cols.shape[1])
        for idx in range(k * k):
            acc += kern[0, idx] * cols[idx]
        outs.append(acc)
    oh = (x.shape[1] + 2 * spec.padding - k) // spec.stride + 1
    ow = (x.shape[2] + 2 * spec.padding - k) // spec.stride + 1
    if not outs:
        return np.zeros((0, oh, ow))
    return np.stack(outs).reshape(len(outs), oh, ow)


def run_layer(layer, x: np.ndarray) -> np.ndarray:
    if isinstance(layer, Conv2D):
        return conv2d_ref(layer.weights, x, layer.bias)
    if isinstance(layer, GdwsPair):
        spec = layer.spec
        mid = _depthwise(x, layer.dup, layer.gdw, spec)
        m = spec.out_channels
        out = np.zeros((m,) + mid.shape[1:])
        for j in range(mid.shape[0]):
            out += layer.pw[:, j].reshape(m, 1, 1) * mid[j]
        if layer.bias is not None:
            out = out + layer.bias[:, None, None]
        return out
    if isinstance(layer, Dense):
        flat = np.asarray(x, dtype=np.float64).ravel()
        if flat.shape[0] != layer.weights.shape[1]:
            raise ShapeError(f"{layer.id}: dense input {flat.shape[0]}, "
                             f"weights want {layer.weights.shape[1]}")
        out = layer.weights @ flat
        if layer.bias is not None:
            out = out + layer.bias
        return out
    if isinstance(layer, ReLU):
        return np.maximum(x, 0.0)
    if isinstance(layer, AvgPool2):
        c, h, w = x.shape
        if h % 2 or w % 2:
            raise ShapeError(f"{layer.id}: odd spatial dims {(h, w)}")
        return x.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))
    if isinstance(layer, GlobalAvgPool):
        return x.mean(axis=(1, 2))
    raise ShapeError(f"unsupported layer type {type(layer).__name__}")


def forward_pass(net: NetworkManifest, x: np.ndarray) -> np.ndarray:
    """Run the whole network; returns the final activation as a flat vector."""
    x = np.asarray(x, dtype=np.float64)
    for layer in net.layers:
        x = run_layer(layer, x)
    return np.asarray(x, dtype=np.float64).ravel()


def activations(net: NetworkManifest, x: np.ndarray) -> list[np.ndarray]:
    """Inputs seen by each layer, plus the final output, length len(layers)+1."""
    x = np.asarray(x, dtype=np.float64)
    acts = [x]
    for layer in net.layers:
        x = run_layer(layer, x)
        acts.append(x)
    return acts


def propagate_spec(layer, spec_in: tuple[int, int, int]):
    """Shape chaining for manifest validation; returns the next (C, H, W)."""
    c, h, w = spec_in
    if isinstance(layer, (Conv2D, GdwsPair)):
        spec = layer.spec
        if spec.in_channels != c:
            raise ShapeError(f"{layer.id}: expects C={spec.in_channels}, got {c}")
        sized = spec if spec.input_h is not None else spec.with_input(h, w)
        oh, ow = sized.out_hw()
        return (spec.out_channels, oh, ow)
    if isinstance(layer, ReLU):
        return spec_in
    if isinstance(layer, AvgPool2):
        return (c, h // 2, w // 2)
    if isinstance(layer, GlobalAvgPool):
        return (c, 1, 1)
    if isinstance(layer, Dense):
        return (layer.weights.shape[0], 1, 1)
    raise ShapeError(f"unsupported layer type {type(layer).__name__}")


def sized_spec(layer, net: NetworkManifest) -> ConvLayerSpec:
    """The layer's ConvLayerSpec with input dims filled in by propagation."""
    shape = net.input_shape
    for l in net.layers:
        if l is layer:
            if l.spec.input_h is not None:
                return l.spec
            return l.spec.with_input(shape[1], shape[2])
        shape = propagate_spec(l, shape)
    raise ShapeError("layer not in network")


def with_sized_specs(net: NetworkManifest) -> NetworkManifest:
    """Copy of the net with every conv-like spec carrying its input dims."""
    shape = net.input_shape
    out = []
    for layer in net.layers:
        if isinstance(layer, Conv2D) and layer.spec.input_h is None:
            spec = layer.spec.with_input(shape[1], shape[2])
            layer = Conv2D(layer.id, WeightMatrix(spec, layer.weights.data),
                           layer.bias)
        elif isinstance(layer, GdwsPair) and layer.spec.input_h is None:
            layer = replace(layer, spec=layer.spec.with_input(shape[1], shape[2]))
        shape = propagate_spec(layer, shape)
        out.append(layer)
    return net.replaced(out, net.variant)
