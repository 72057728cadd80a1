import logging
from pathlib import Path

import numpy as np

from ..config import settings
from ..models.store import save_model
from ..schemas.network import TrainConfig
from ..schemas.run_config import RunConfig
from ..services.architecture_service import build_preset
from ..services.training_service import holdout_split, train_with_restarts, write_epoch_log
from .deps import load_manifest, load_samples

logger = logging.getLogger(__name__)


def train(config: RunConfig) -> None:
    manifest, base_dir = load_manifest(config.input)
    samples, labels = load_samples(manifest, base_dir, "train")
    fit, held_out = holdout_split(labels, config.val_ratio, config.seed)
    if len(held_out):
        logger.info("holding out %d of %d training samples for validation", len(held_out), len(samples))
    else:
        logger.info("no validation hold-out; restarts are ranked on training accuracy")
    val_samples, val_labels = (samples[held_out], labels[held_out]) if len(held_out) else (None, None)
    samples, labels = samples[fit], labels[fit]

    num_classes = len(manifest.classes)
    # add-one smoothing keeps every prior positive when a class is absent from train
    counts = np.bincount(labels, minlength=num_classes) + 1.0
    priors = counts / counts.sum()
    rank = samples.ndim - 2
    logger.info("training on %d samples of shape %s (rank %d)", len(samples), samples.shape[1:], rank)

    def build(seed: int):
        return build_preset(
            samples.shape[1:], num_classes, rank=rank, degree=config.degree, depth=config.depth,
            first_channels=config.first_channels, inner_channels=config.inner_channels,
            last_channels=config.last_channels, dense_units=config.dense_units, kernel=config.kernel,
            priors=priors, seed=seed, classes=manifest.classes,
        )

    batch_size = config.batch_size
    if batch_size > len(samples):
        logger.warning("batch size %d exceeds the %d training samples; using %d", batch_size, len(samples), len(samples))
        batch_size = len(samples)
    train_config = TrainConfig(
        learning_rate=config.learning_rate, batch_size=batch_size,
        epochs=config.epochs, seed=config.seed,
    )
    result = train_with_restarts(
        build, samples, labels, train_config, restarts=config.restarts,
        val_samples=val_samples, val_labels=val_labels,
    )

    out = Path(config.out)
    save_model(result.model, out / f"model{settings.MODEL_SUFFIX}")
    write_epoch_log(result.epochs, out / "epochs.log")
    print(f"final epoch: {result.final.line()}")
