"""Procedural variable-size image sets for desk-scale runs.

Class ``k`` draws oriented sinusoidal stripes at angle ``pi * k / classes``
with a class-specific period, so any window of an image carries the class
signature. Every image has its own seed spawned from the master seed.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from ..schemas.dataset import DatasetManifest, ManifestEntry, SynthSpec
from ..utils.images import save_png

logger = logging.getLogger(__name__)


def class_name(k: int) -> str:
    return f"class_{k}"


def stripe_period(k: int) -> float:
    """Stripe period in pixels for class ``k``."""
    return 24.0 + 16.0 * k


def render_image(spec: SynthSpec, k: int, side: int, rng: np.random.Generator) -> np.ndarray:
    """A (C, side, side) image in [0, 1] with class ``k``'s stripe signature."""
    angle = math.pi * k / spec.classes
    phase = rng.uniform(0.0, 2.0 * math.pi)
    rows, cols = np.mgrid[0:side, 0:side].astype(np.float64)
    projection = cols * math.cos(angle) + rows * math.sin(angle)
    stripes = 0.5 + 0.4 * np.sin(2.0 * math.pi * projection / stripe_period(k) + phase)
    channels = []
    for c in range(spec.channels):
        tint = 1.0 if spec.channels == 1 else 0.7 + 0.3 * ((c + k) % spec.channels) / max(spec.channels - 1, 1)
        noise = rng.normal(0.0, spec.noise, size=(side, side)) if spec.noise else 0.0
        channels.append(np.clip(stripes * tint + noise, 0.0, 1.0))
    return np.stack(channels).astype(np.float32)


def synth_dataset(spec: SynthSpec, out_dir: Union[str, Path], threads: int = 1) -> DatasetManifest:
    """Write ``spec.count`` PNGs per class under ``out_dir/images`` and return their manifest.

    Entries are all marked ``train``; ``stratified_resplit`` assigns the test split.
    """
    out_dir = Path(out_dir)
    classes = [class_name(k) for k in range(spec.classes)]
    jobs: List[Tuple[int, int]] = [(k, i) for k in range(spec.classes) for i in range(spec.count)]
    if not jobs:
        return DatasetManifest(entries=[], classes=classes)
    seeds = np.random.SeedSequence(spec.seed).spawn(len(jobs))

    def build(job: int) -> ManifestEntry:
        k, i = jobs[job]
        rng = np.random.default_rng(seeds[job])
        low, high = spec.size_range(k)
        side = int(rng.integers(low, high + 1))
        image_id = f"{classes[k]}_{i:04d}"
        relative = f"images/{image_id}.png"
        save_png(render_image(spec, k, side, rng), out_dir / relative)
        return ManifestEntry(id=image_id, path=relative, label=classes[k], height=side, width=side)

    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        entries = list(pool.map(build, range(len(jobs))))
    logger.info("synthesised %d images of %d classes in %s", len(entries), spec.classes, out_dir)
    return DatasetManifest(entries=entries, classes=classes)
