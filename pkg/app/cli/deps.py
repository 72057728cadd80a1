"""Artifact loading shared by the subcommands."""

import os
from pathlib import Path
from typing import Tuple

import numpy as np

from ..config import settings
from ..core.tensor import tensor_read
from ..exceptions import InvalidArgumentError, MissingArtifactError, ShapeMismatchError
from ..models.network import Network
from ..schemas.dataset import DatasetManifest, Split
from ..services.dataset_service import read_manifest


def manifest_path(source: str) -> Path:
    """A manifest file, or the manifest inside a directory."""
    path = Path(source)
    if path.is_dir():
        path = path / settings.MANIFEST_NAME
    if not path.is_file():
        raise MissingArtifactError(f"manifest {path} not found")
    return path


def load_manifest(source: str) -> Tuple[DatasetManifest, Path]:
    """The manifest and the directory its entry paths are relative to."""
    path = manifest_path(source)
    return read_manifest(path), path.parent


def relocate(manifest: DatasetManifest, base_dir: Path, out_dir: Path) -> DatasetManifest:
    """Rewrite entry paths so they resolve from ``out_dir``."""
    if base_dir.resolve() == out_dir.resolve():
        return manifest
    entries = [
        e.model_copy(update={"path": Path(os.path.relpath(base_dir / e.path, out_dir)).as_posix()})
        for e in manifest.entries
    ]
    return DatasetManifest(entries=entries, classes=manifest.classes)


def as_network_input(tensor: np.ndarray) -> np.ndarray:
    """Window stacks (M, C, h, w) become (C, M, h, w) volumes; 2D images stay (C, H, W)."""
    if tensor.ndim == 4:
        return np.moveaxis(tensor, 0, 1)
    return tensor


def load_samples(manifest: DatasetManifest, base_dir: Path, split: Split) -> Tuple[np.ndarray, np.ndarray]:
    """Stacked network inputs and 0-based labels of one split."""
    entries = manifest.split(split)
    if not entries:
        raise InvalidArgumentError(f"the {split} split is empty")
    samples = []
    for entry in entries:
        path = base_dir / entry.path
        if not path.is_file():
            raise MissingArtifactError(f"tensor {path} not found")
        samples.append(as_network_input(tensor_read(path)))
    shapes = {s.shape for s in samples}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"{split} tensors have differing shapes {sorted(shapes)}")
    labels = np.array([manifest.label_index(e.label) for e in entries], dtype=np.int64)
    return np.stack(samples).astype(np.float64), labels


def check_classes(model: Network, manifest: DatasetManifest) -> None:
    if list(model.classes) != list(manifest.classes):
        raise InvalidArgumentError(
            f"model classes {model.classes} differ from manifest classes {manifest.classes}"
        )
