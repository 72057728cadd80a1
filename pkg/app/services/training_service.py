import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from sklearn.model_selection import train_test_split

from ..exceptions import InvalidArgumentError, TrainingDivergedError
from ..models.network import Network
from ..schemas.network import EpochLog, TrainConfig

logger = logging.getLogger(__name__)


class AdamOptimizer:
    """Adaptive moment estimation over a fixed list of parameter arrays, updated in place."""

    def __init__(self, learning_rate: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self._m: List[np.ndarray] = []
        self._v: List[np.ndarray] = []

    def step(self, params: List[np.ndarray], grads: List[np.ndarray]) -> None:
        if not self._m:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.epsilon)


@dataclass
class TrainResult:
    model: Network
    epochs: List[EpochLog] = field(default_factory=list)

    @property
    def final(self) -> Optional[EpochLog]:
        return self.epochs[-1] if self.epochs else None


def write_epoch_log(epochs: List[EpochLog], path: Union[str, Path]) -> None:
    Path(path).write_text("".join(e.line() + "\n" for e in epochs), encoding="utf-8")


class Trainer:
    """Mini-batch cross-entropy training with a seeded shuffle; bit-reproducible for a given seed."""

    def __init__(self, config: TrainConfig):
        self.config = config

    def train(
        self,
        model: Network,
        samples: np.ndarray,
        labels: np.ndarray,
        val_samples: Optional[np.ndarray] = None,
        val_labels: Optional[np.ndarray] = None,
        on_epoch: Optional[Callable[[EpochLog], None]] = None,
    ) -> TrainResult:
        config = self.config
        samples = np.asarray(samples, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        n = len(samples)
        if n == 0:
            raise InvalidArgumentError("training set is empty")
        if len(labels) != n:
            raise InvalidArgumentError(f"{n} samples but {len(labels)} labels")
        if config.batch_size > n:
            raise InvalidArgumentError(f"batch size {config.batch_size} exceeds dataset size {n}")

        rng = np.random.default_rng(config.seed)
        optimizer = AdamOptimizer(config.learning_rate, config.beta1, config.beta2, config.epsilon)
        params = [p for _, _, p in model.parameters()]
        result = TrainResult(model=model)

        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(n)
            total_loss = 0.0
            correct = 0
            for start in range(0, n, config.batch_size):
                index = order[start:start + config.batch_size]
                loss, probs = model.loss_and_backward(samples[index], labels[index])
                if not math.isfinite(loss):
                    raise TrainingDivergedError(f"loss became {loss} in epoch {epoch}")
                grads = [layer.grads()[name] for layer, name, _ in model.parameters()]
                optimizer.step(params, grads)
                total_loss += loss * len(index)
                correct += int(np.sum(probs.argmax(axis=1) == labels[index]))

            val_acc = None
            if val_samples is not None and len(val_samples):
                val_acc = model.accuracy(val_samples, val_labels)
            log = EpochLog(epoch=epoch, loss=total_loss / n, train_acc=correct / n, val_acc=val_acc)
            result.epochs.append(log)
            logger.info("epoch %s", log.line())
            if on_epoch is not None:
                on_epoch(log)
        return result


def train(model: Network, samples: np.ndarray, labels: np.ndarray, config: TrainConfig, **kwargs) -> TrainResult:
    return Trainer(config).train(model, samples, labels, **kwargs)


def train_with_restarts(
    build: Callable[[int], Network],
    samples: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    restarts: int = 1,
    val_samples: Optional[np.ndarray] = None,
    val_labels: Optional[np.ndarray] = None,
) -> TrainResult:
    """Train ``restarts`` freshly initialised models (seeds seed, seed+1, ...) and keep the best one.

    Ranking uses validation accuracy when a validation set is given, else the
    final training accuracy; ties keep the earliest restart.
    """
    best: Optional[TrainResult] = None
    best_score = -math.inf
    for offset in range(max(1, restarts)):
        seed = config.seed + offset
        run_config = config.model_copy(update={"seed": seed})
        result = Trainer(run_config).train(build(seed), samples, labels, val_samples, val_labels)
        final = result.final
        score = final.val_acc if final.val_acc is not None else final.train_acc
        logger.info("restart %d (seed %d) scored %.6f", offset, seed, score)
        if score > best_score:
            best, best_score = result, score
    return best


def holdout_split(labels: np.ndarray, val_ratio: float, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted indices of the fitting part and the held-out validation part of a training set.

    Stratified by label when every class can put an entry on both sides,
    otherwise a plain seeded shuffle. A zero ratio, or a set too small to
    spare a sample, leaves the validation part empty.
    """
    if not 0.0 <= val_ratio < 1.0:
        raise InvalidArgumentError(f"val_ratio must lie in [0, 1), got {val_ratio}")
    labels = np.asarray(labels)
    index = np.arange(len(labels))
    n_val = int(np.floor(val_ratio * len(labels) + 0.5))
    if n_val == 0 or n_val >= len(labels):
        return index, index[:0]
    _, counts = np.unique(labels, return_counts=True)
    stratified = counts.min() >= 2 and min(n_val, len(labels) - n_val) >= len(counts)
    fit, val = train_test_split(index, test_size=n_val, random_state=seed, stratify=labels if stratified else None)
    return np.sort(fit), np.sort(val)
