"""Network layers with exact gradients.

Batches are channels-first: ``(B, C, *spatial)`` for convolutional layers and
``(B, F)`` for dense layers. Every layer caches what its backward pass needs
during ``forward(..., training=True)``.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.tensor import (
    correlate_batch,
    correlate_input_grad,
    correlate_weight_grad,
    hadamard_power,
)
from ..exceptions import InvalidArgumentError, ShapeMismatchError
from ..schemas.network import LayerEntry

ACTIVATIONS = ("relu", "identity", "softmax")


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "softmax":
        return softmax(z)
    return z


def _glorot_bound(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


class Layer:
    kind = "layer"

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def output_shape(self, input_shape: Tuple[int, ...]) -> Tuple[int, ...]:
        raise NotImplementedError

    def params(self) -> Dict[str, np.ndarray]:
        return {}

    def grads(self) -> Dict[str, np.ndarray]:
        return {}

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params().values()))

    def entry(self, index: int) -> LayerEntry:
        return LayerEntry(index=index, type=self.kind)


class PolyConvLayer(Layer):
    """y_i = f(sum_d W_id * Y^d + b_i): one kernel bank per power of the input.

    ``weights`` has shape ``(D, C_out, C_in, *kernel)``; degree 1 is an
    ordinary convolution layer.
    """

    kind = "polyconv"

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: Union[int, Sequence[int]],
        degree: int = 1,
        rank: int = 2,
        activation: str = "relu",
        weights: Optional[np.ndarray] = None,
        bias: Optional[np.ndarray] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        if rank not in (1, 2, 3):
            raise InvalidArgumentError(f"rank must be 1, 2 or 3, got {rank}")
        if degree < 1:
            raise InvalidArgumentError(f"degree must be >= 1, got {degree}")
        if activation not in ("relu", "identity"):
            raise InvalidArgumentError(f"convolution activation must be relu or identity, got {activation}")
        if isinstance(kernel_size, int):
            kernel_size = (kernel_size,) * rank
        self.kernel_size = tuple(int(k) for k in kernel_size)
        if len(self.kernel_size) != rank:
            raise InvalidArgumentError(f"kernel {self.kernel_size} does not have rank {rank}")
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.rank = rank
        self.activation = activation

        shape = (degree, self.out_channels, self.in_channels) + self.kernel_size
        if weights is None:
            rng = rng or np.random.default_rng(0)
            taps = int(np.prod(self.kernel_size))
            bound = _glorot_bound(self.in_channels * taps, self.out_channels * taps)
            weights = rng.uniform(-bound, bound, size=shape)
            # damp higher powers so early activations stay bounded
            weights /= np.array([math.factorial(d) for d in range(1, degree + 1)]).reshape(
                (degree,) + (1,) * (len(shape) - 1)
            )
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != shape:
            raise ShapeMismatchError(f"weight bank shape {weights.shape} != expected {shape}")
        self.weights = weights
        self.bias = np.zeros(self.out_channels) if bias is None else np.asarray(bias, dtype=np.float64)
        if self.bias.shape != (self.out_channels,):
            raise ShapeMismatchError(f"bias shape {self.bias.shape} != ({self.out_channels},)")
        self._cache = None
        self._grads: Dict[str, np.ndarray] = {}

    @property
    def degree(self) -> int:
        return self.weights.shape[0]

    @property
    def receptive_field(self) -> int:
        return int(np.prod(self.kernel_size))

    def _check_input(self, x: np.ndarray) -> None:
        if x.ndim != self.rank + 2 or x.shape[1] != self.in_channels:
            raise ShapeMismatchError(
                f"expected (B, {self.in_channels}, <{self.rank} spatial axes>), got {x.shape}"
            )
        if any(s < k for s, k in zip(x.shape[2:], self.kernel_size)):
            raise ShapeMismatchError(f"input {x.shape[2:]} smaller than kernel {self.kernel_size}")

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._check_input(x)
        # each power is computed once and shared by every output channel
        powers = [hadamard_power(x, d) for d in range(1, self.degree + 1)]
        z = correlate_batch(powers[0], self.weights[0], self.rank)
        for d in range(1, self.degree):
            z += correlate_batch(powers[d], self.weights[d], self.rank)
        z += self.bias.reshape((1, -1) + (1,) * self.rank)
        y = _activate(z, self.activation)
        if training:
            self._cache = (x, powers, z)
        return y

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError("backward called before a training forward pass")
        x, powers, z = self._cache
        gz = grad * (z > 0) if self.activation == "relu" else grad
        spatial = x.shape[2:]

        weight_grads = np.empty_like(self.weights)
        grad_x = np.zeros_like(x, dtype=np.result_type(x.dtype, gz.dtype))
        for d in range(1, self.degree + 1):
            weight_grads[d - 1] = correlate_weight_grad(powers[d - 1], gz, self.kernel_size)
            back = correlate_input_grad(gz, self.weights[d - 1], spatial)
            if d == 1:
                grad_x += back
            else:
                grad_x += d * powers[d - 2] * back
        self._grads = {
            "weights": weight_grads,
            "bias": gz.sum(axis=(0,) + tuple(range(2, gz.ndim))),
        }
        return grad_x

    def output_shape(self, input_shape):
        channels, *spatial = input_shape
        if channels != self.in_channels or len(spatial) != self.rank:
            raise ShapeMismatchError(f"layer expects {self.in_channels} channels of rank {self.rank}, got {input_shape}")
        out = tuple(s - k + 1 for s, k in zip(spatial, self.kernel_size))
        if any(o < 1 for o in out):
            raise ShapeMismatchError(f"kernel {self.kernel_size} larger than input {tuple(spatial)}")
        return (self.out_channels,) + out

    def params(self):
        return {"weights": self.weights, "bias": self.bias}

    def grads(self):
        return self._grads

    def entry(self, index: int) -> LayerEntry:
        return LayerEntry(
            index=index, type=self.kind, rank=self.rank, degree=self.degree,
            extents=list(self.kernel_size), channels=(self.in_channels, self.out_channels),
            activation=self.activation,
        )


class MaxPool(Layer):
    """Non-overlapping max pooling; trailing samples that do not fill a window are dropped."""

    kind = "maxpool"

    def __init__(self, size: Sequence[int]):
        self.size = tuple(int(s) for s in size)
        if any(s < 1 for s in self.size):
            raise InvalidArgumentError(f"pool size must be positive, got {self.size}")
        self._cache = None

    @property
    def rank(self) -> int:
        return len(self.size)

    def _layout(self, shape):
        spatial = shape[2:]
        out = tuple(s // k for s, k in zip(spatial, self.size))
        interleaved = tuple(v for pair in zip(out, self.size) for v in pair)
        n = len(self.size)
        perm = [0, 1] + [2 + 2 * i for i in range(n)] + [3 + 2 * i for i in range(n)]
        return out, interleaved, perm

    def forward(self, x, training=False):
        if x.ndim != self.rank + 2:
            raise ShapeMismatchError(f"pool of rank {self.rank} got input {x.shape}")
        out, interleaved, perm = self._layout(x.shape)
        if any(o < 1 for o in out):
            raise ShapeMismatchError(f"pool {self.size} larger than input {x.shape[2:]}")
        cropped = x[(slice(None), slice(None)) + tuple(slice(0, o * k) for o, k in zip(out, self.size))]
        blocks = cropped.reshape(x.shape[:2] + interleaved).transpose(perm)
        blocks = blocks.reshape(x.shape[:2] + out + (-1,))
        index = blocks.argmax(axis=-1)[..., np.newaxis]
        if training:
            self._cache = (x.shape, cropped.shape, index)
        return np.take_along_axis(blocks, index, axis=-1)[..., 0]

    def backward(self, grad):
        shape, cropped_shape, index = self._cache
        out, interleaved, perm = self._layout(shape)
        blocks = np.zeros(shape[:2] + out + (int(np.prod(self.size)),), dtype=grad.dtype)
        np.put_along_axis(blocks, index, grad[..., np.newaxis], axis=-1)
        blocks = blocks.reshape(shape[:2] + out + self.size).transpose(np.argsort(perm))
        grad_x = np.zeros(shape, dtype=grad.dtype)
        grad_x[tuple(slice(0, s) for s in cropped_shape)] = blocks.reshape(cropped_shape)
        return grad_x

    def output_shape(self, input_shape):
        channels, *spatial = input_shape
        return (channels,) + tuple(s // k for s, k in zip(spatial, self.size))

    def entry(self, index):
        return LayerEntry(index=index, type=self.kind, rank=self.rank, extents=list(self.size))


class Flatten(Layer):
    kind = "flatten"

    def __init__(self):
        self._shape = None

    def forward(self, x, training=False):
        if training:
            self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)


class Dense(Layer):
    """Fully connected layer. With softmax, ``backward`` takes the gradient w.r.t. the logits."""

    kind = "dense"

    def __init__(
        self,
        in_features: int,
        out_features: int,
        activation: str = "relu",
        weights: Optional[np.ndarray] = None,
        bias: Optional[np.ndarray] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        if activation not in ACTIVATIONS:
            raise InvalidArgumentError(f"unknown activation {activation}")
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        self.activation = activation
        if weights is None:
            rng = rng or np.random.default_rng(0)
            bound = _glorot_bound(self.in_features, self.out_features)
            weights = rng.uniform(-bound, bound, size=(self.out_features, self.in_features))
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (self.out_features, self.in_features):
            raise ShapeMismatchError(f"dense weights {self.weights.shape} != ({self.out_features}, {self.in_features})")
        self.bias = np.zeros(self.out_features) if bias is None else np.asarray(bias, dtype=np.float64)
        if self.bias.shape != (self.out_features,):
            raise ShapeMismatchError(f"dense bias {self.bias.shape} != ({self.out_features},)")
        self._cache = None
        self._grads: Dict[str, np.ndarray] = {}

    def forward(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeMismatchError(f"dense layer expects (B, {self.in_features}), got {x.shape}")
        z = x @ self.weights.T + self.bias
        if training:
            self._cache = (x, z)
        return _activate(z, self.activation)

    def backward(self, grad):
        x, z = self._cache
        gz = grad * (z > 0) if self.activation == "relu" else grad
        self._grads = {"weights": gz.T @ x, "bias": gz.sum(axis=0)}
        return gz @ self.weights

    def output_shape(self, input_shape):
        if tuple(input_shape) != (self.in_features,):
            raise ShapeMismatchError(f"dense layer expects {self.in_features} features, got {input_shape}")
        return (self.out_features,)

    def params(self):
        return {"weights": self.weights, "bias": self.bias}

    def grads(self):
        return self._grads

    def entry(self, index):
        return LayerEntry(
            index=index, type=self.kind, channels=(self.in_features, self.out_features),
            activation=self.activation,
        )


@dataclass
class PolyConvGradients:
    weights: np.ndarray
    bias: np.ndarray
    input: np.ndarray


def _as_batch(layer: PolyConvLayer, y_prev: np.ndarray) -> Tuple[np.ndarray, bool]:
    y_prev = np.asarray(y_prev, dtype=np.float64)
    if y_prev.ndim == layer.rank + 1:
        return y_prev[np.newaxis], True
    return y_prev, False


def poly_conv_forward(layer: PolyConvLayer, y_prev: np.ndarray) -> np.ndarray:
    """Forward one sample ``(C_in, *S)`` or a batch ``(B, C_in, *S)`` through a polynomial layer."""
    batch, single = _as_batch(layer, y_prev)
    out = layer.forward(batch)
    return out[0] if single else out


def poly_conv_backward(layer: PolyConvLayer, y_prev: np.ndarray, upstream: np.ndarray) -> PolyConvGradients:
    """Gradients of <upstream, layer(y_prev)> with respect to weights, bias and input."""
    batch, single = _as_batch(layer, y_prev)
    upstream = np.asarray(upstream, dtype=np.float64)
    if single:
        upstream = upstream[np.newaxis]
    out = layer.forward(batch, training=True)
    if upstream.shape != out.shape:
        raise ShapeMismatchError(f"upstream gradient {upstream.shape} != layer output {out.shape}")
    grad_input = layer.backward(upstream)
    grads = layer.grads()
    return PolyConvGradients(
        weights=grads["weights"], bias=grads["bias"], input=grad_input[0] if single else grad_input,
    )


def standard_conv_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray, rank: int) -> np.ndarray:
    """Ordinary convolution layer (no activation), the degree-1 reference."""
    return correlate_batch(x, kernels, rank) + bias.reshape((1, -1) + (1,) * rank)


__all__ = [
    "Dense",
    "Flatten",
    "Layer",
    "MaxPool",
    "PolyConvGradients",
    "PolyConvLayer",
    "poly_conv_backward",
    "poly_conv_forward",
    "softmax",
    "standard_conv_forward",
]
