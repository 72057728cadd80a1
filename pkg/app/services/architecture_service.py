import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from ..exceptions import InfeasibleError, InvalidArgumentError
from ..models.layers import Dense, Flatten, Layer, MaxPool, PolyConvLayer
from ..models.network import Network

logger = logging.getLogger(__name__)


def init_output_bias(priors: Sequence[float]) -> np.ndarray:
    """Biases b with softmax(b) equal to the (renormalized) class priors; gauge b_N = 0."""
    p = np.asarray(priors, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InvalidArgumentError("priors must be a non-empty vector")
    if np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise InvalidArgumentError(f"every prior must be positive, got {p.tolist()}")
    p = p / p.sum()
    return np.log(p) - np.log(p[-1])


def equivalent_width_params(n: int, r2: int, r3: int) -> int:
    """Feature-extractor parameter count of the 3D template whose inner layers are n wide."""
    return (2 * r3 + r2) * n * n + 4 * (8 * r3 + 16 * r2 + 1) * n + 96 * (r3 + 1)


def solve_equivalent_width(n_target: int, r2: int, r3: int) -> int:
    """Inner width of a 3D network matching a 2D network's n_target parameters (rounded root)."""
    a = 2 * r3 + r2
    b = 4 * (8 * r3 + 16 * r2 + 1)
    c = 96 * (r3 + 1) - n_target
    if a <= 0:
        raise InvalidArgumentError("receptive fields must be positive")
    if c >= 0:
        raise InfeasibleError(f"n_target={n_target} must exceed 96(R3 + 1) = {96 * (r3 + 1)}")
    root = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
    width = int(math.floor(root + 0.5))
    if width < 1:
        raise InfeasibleError(f"n_target={n_target} gives a width below one ({root:.4f})")
    return width


def _pool_size(spatial: Sequence[int]) -> List[int]:
    return [2 if s >= 2 else 1 for s in spatial]


def build_preset(
    input_shape: Sequence[int],
    num_classes: int,
    rank: int = 3,
    degree: int = 1,
    depth: int = 3,
    first_channels: int = 32,
    inner_channels: int = 64,
    last_channels: int = 64,
    dense_units: int = 128,
    kernel: int = 3,
    priors: Optional[Sequence[float]] = None,
    seed: int = 0,
    classes: Optional[Sequence[str]] = None,
) -> Network:
    """Convolution/pool stages, flatten, a relu dense layer and a softmax head.

    The first stage has ``first_channels`` maps, the last ``last_channels``,
    the ones between ``inner_channels``. Each stage halves every spatial axis
    that is at least two samples long.
    """
    if depth < 1:
        raise InvalidArgumentError(f"depth must be >= 1, got {depth}")
    if len(input_shape) != rank + 1:
        raise InvalidArgumentError(f"input shape {tuple(input_shape)} is not (C, <{rank} spatial axes>)")
    rng = np.random.default_rng(seed)

    layers: List[Layer] = []
    shape = tuple(int(s) for s in input_shape)
    for stage in range(depth):
        if stage == 0:
            out_channels = first_channels
        elif stage == depth - 1:
            out_channels = last_channels
        else:
            out_channels = inner_channels
        conv = PolyConvLayer(shape[0], out_channels, kernel, degree=degree, rank=rank, activation="relu", rng=rng)
        shape = conv.output_shape(shape)
        pool = MaxPool(_pool_size(shape[1:]))
        shape = pool.output_shape(shape)
        layers.extend([conv, pool])

    layers.append(Flatten())
    features = int(np.prod(shape))
    logger.debug("preset feature extractor yields %d features", features)
    if dense_units:
        layers.append(Dense(features, dense_units, activation="relu", rng=rng))
        features = dense_units
    bias = init_output_bias(priors) if priors is not None else None
    layers.append(Dense(features, num_classes, activation="softmax", bias=bias, rng=rng))
    return Network(layers, num_classes, input_shape, seed=seed, classes=classes)
