"""Model files: a zip holding ``manifest.json`` plus one NDT1 tensor per weight bank and bias."""

import io
import logging
import zipfile
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from ..core.tensor import tensor_from_bytes, tensor_to_bytes
from ..exceptions import FormatError, MissingArtifactError
from ..schemas.network import ModelManifest
from .layers import Dense, Flatten, MaxPool, PolyConvLayer
from .network import Network

logger = logging.getLogger(__name__)

MANIFEST_MEMBER = "manifest.json"
# fixed member timestamp keeps identical models byte-identical
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _member(index: int, name: str) -> str:
    return f"layer_{index:02d}_{name}.ndt"


def _write_member(archive: zipfile.ZipFile, name: str, payload: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_DEFLATED
    archive.writestr(info, payload)


def save_model(model: Network, path: Union[str, Path]) -> Path:
    path = Path(path)
    manifest = ModelManifest(
        num_classes=model.num_classes,
        input_shape=list(model.input_shape),
        seed=model.seed,
        classes=model.classes,
        layers=[layer.entry(i) for i, layer in enumerate(model.layers)],
    )
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        _write_member(archive, MANIFEST_MEMBER, manifest.model_dump_json(indent=2).encode("utf-8"))
        for index, layer in enumerate(model.layers):
            for name, values in layer.params().items():
                _write_member(archive, _member(index, name), tensor_to_bytes(values))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(buffer.getvalue())
    logger.info("saved model with %d parameters to %s", model.parameter_count(), path)
    return path


def load_model(path: Union[str, Path]) -> Network:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"model file {path} not found")
    try:
        archive = zipfile.ZipFile(path)
    except zipfile.BadZipFile as e:
        raise FormatError(f"{path} is not a model file: {e}")
    with archive:
        try:
            manifest = ModelManifest.model_validate_json(archive.read(MANIFEST_MEMBER))
        except (KeyError, ValidationError) as e:
            raise FormatError(f"{path}: unreadable model manifest: {e}")

        def tensor(index: int, name: str) -> np.ndarray:
            try:
                return tensor_from_bytes(archive.read(_member(index, name))).astype(np.float64)
            except KeyError:
                raise FormatError(f"{path}: missing member {_member(index, name)}")

        layers = []
        for entry in manifest.layers:
            if entry.type == "polyconv":
                weights = tensor(entry.index, "weights")
                layers.append(PolyConvLayer(
                    entry.channels[0], entry.channels[1], entry.extents, degree=entry.degree,
                    rank=entry.rank, activation=entry.activation,
                    weights=weights, bias=tensor(entry.index, "bias"),
                ))
            elif entry.type == "maxpool":
                layers.append(MaxPool(entry.extents))
            elif entry.type == "flatten":
                layers.append(Flatten())
            else:
                layers.append(Dense(
                    entry.channels[0], entry.channels[1], activation=entry.activation,
                    weights=tensor(entry.index, "weights"), bias=tensor(entry.index, "bias"),
                ))
    return Network(layers, manifest.num_classes, manifest.input_shape, seed=manifest.seed, classes=manifest.classes)
