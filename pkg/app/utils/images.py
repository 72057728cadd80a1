from pathlib import Path
from typing import Union

import cv2
import numpy as np

from ..exceptions import FormatError


def load_png(path: Union[str, Path]) -> np.ndarray:
    """Read an 8-bit grayscale or RGB PNG as a float32 (C, H, W) array in [0, 1]."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise FormatError(f"could not decode image {path}")
    if raw.dtype != np.uint8:
        raise FormatError(f"{path}: expected 8-bit samples, got {raw.dtype}")
    if raw.ndim == 2:
        raw = raw[:, :, np.newaxis]
    elif raw.shape[2] == 4:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGRA2RGB)
    else:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    return np.ascontiguousarray(np.moveaxis(raw, -1, 0), dtype=np.float32) / np.float32(255.0)


def save_png(image: np.ndarray, path: Union[str, Path]) -> None:
    """Write a (C, H, W) array in [0, 1] (C = 1 or 3) as an 8-bit PNG."""
    pixels = np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    pixels = np.moveaxis(pixels, 0, -1)
    if pixels.shape[2] == 1:
        pixels = pixels[:, :, 0]
    else:
        pixels = cv2.cvtColor(pixels, cv2.COLOR_RGB2BGR)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), pixels):
        raise FormatError(f"could not write image {path}")


def resize_bilinear(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of a (C, H, W) array."""
    channels_last = np.ascontiguousarray(np.moveaxis(image, 0, -1), dtype=np.float32)
    resized = cv2.resize(channels_last, (int(width), int(height)), interpolation=cv2.INTER_LINEAR)
    if resized.ndim == 2:
        resized = resized[:, :, np.newaxis]
    return np.ascontiguousarray(np.moveaxis(resized, -1, 0))


def pad_centered(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Zero-pad a (C, H, W) array symmetrically to (C, height, width)."""
    _, h, w = image.shape
    top = (height - h) // 2
    left = (width - w) // 2
    out = np.zeros((image.shape[0], height, width), dtype=image.dtype)
    out[:, top:top + h, left:left + w] = image
    return out
