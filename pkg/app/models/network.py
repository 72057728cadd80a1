import copy
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import InvalidArgumentError, ShapeMismatchError
from .layers import Dense, Layer, PolyConvLayer

logger = logging.getLogger(__name__)


class Network:
    """An ordered stack of layers ending in a dense softmax head with one unit per class."""

    def __init__(
        self,
        layers: Sequence[Layer],
        num_classes: int,
        input_shape: Sequence[int],
        seed: int = 0,
        classes: Optional[Sequence[str]] = None,
    ):
        self.layers: List[Layer] = list(layers)
        self.num_classes = int(num_classes)
        self.input_shape = tuple(int(s) for s in input_shape)
        self.seed = seed
        self.classes = list(classes) if classes else [str(k) for k in range(self.num_classes)]
        self._validate()

    def _validate(self) -> None:
        if not self.layers:
            raise InvalidArgumentError("a network needs at least its output layer")
        head = self.layers[-1]
        if not isinstance(head, Dense) or head.activation != "softmax" or head.out_features != self.num_classes:
            raise InvalidArgumentError(f"output layer must be dense softmax with {self.num_classes} units")
        if len(self.classes) != self.num_classes:
            raise InvalidArgumentError(f"{len(self.classes)} class names for {self.num_classes} classes")
        self.layer_shapes()

    def layer_shapes(self) -> List[Tuple[int, ...]]:
        """Per-layer output shapes (without the batch axis); raises on any mismatch."""
        shapes = []
        shape = self.input_shape
        for index, layer in enumerate(self.layers):
            try:
                shape = layer.output_shape(shape)
            except ShapeMismatchError as e:
                raise ShapeMismatchError(f"layer {index} ({layer.kind}): {e}")
            shapes.append(shape)
        return shapes

    @property
    def poly_layers(self) -> List[PolyConvLayer]:
        return [layer for layer in self.layers if isinstance(layer, PolyConvLayer)]

    @property
    def degrees(self) -> List[int]:
        return [layer.degree for layer in self.poly_layers]

    def parameter_count(self) -> int:
        return sum(layer.parameter_count() for layer in self.layers)

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def _check_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch, dtype=np.float64)
        if batch.shape[1:] != self.input_shape:
            raise ShapeMismatchError(f"batch samples have shape {batch.shape[1:]}, model expects {self.input_shape}")
        return batch

    def forward(
        self,
        batch: np.ndarray,
        training: bool = False,
        observer: Optional[Callable[[int, Layer, np.ndarray], None]] = None,
    ) -> np.ndarray:
        """Class probabilities ``(B, N)``; ``observer(index, layer, layer_input)`` sees every layer input."""
        x = self._check_batch(batch)
        for index, layer in enumerate(self.layers):
            if observer is not None:
                observer(index, layer, x)
            x = layer.forward(x, training=training)
        return x

    def predict_proba(self, samples: np.ndarray, batch_size: int = 64) -> np.ndarray:
        samples = np.asarray(samples)
        if len(samples) == 0:
            return np.zeros((0, self.num_classes))
        return np.concatenate(
            [self.forward(samples[i:i + batch_size]) for i in range(0, len(samples), batch_size)]
        )

    def predict(self, samples: np.ndarray, batch_size: int = 64) -> np.ndarray:
        return self.predict_proba(samples, batch_size).argmax(axis=1)

    def accuracy(self, samples: np.ndarray, labels: np.ndarray, batch_size: int = 64) -> float:
        if len(samples) == 0:
            return 0.0
        return float(np.mean(self.predict(samples, batch_size) == np.asarray(labels)))

    def loss_and_backward(self, batch: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
        """Mean categorical cross-entropy of the batch; fills every layer's gradients."""
        labels = np.asarray(labels, dtype=np.int64)
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise InvalidArgumentError(f"labels must lie in [0, {self.num_classes})")
        probs = self.forward(batch, training=True)
        n = len(labels)
        picked = probs[np.arange(n), labels]
        loss = float(-np.mean(np.log(np.clip(picked, 1e-300, None))))
        grad = probs.copy()
        grad[np.arange(n), labels] -= 1.0
        grad /= n
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return loss, probs

    def parameters(self) -> List[Tuple[Layer, str, np.ndarray]]:
        return [(layer, name, p) for layer in self.layers for name, p in layer.params().items()]


def forward_network(model: Network, batch: np.ndarray) -> np.ndarray:
    """Class probability matrix for a batch; rows sum to one."""
    return model.forward(batch)
