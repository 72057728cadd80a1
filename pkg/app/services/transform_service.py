"""The VOTCSW transform: window origins, stack extraction, clamping and batch drivers."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import settings
from ..core.tensor import tensor_write
from ..exceptions import AspectError, GeometryError, InfeasibleError, InvalidArgumentError
from ..schemas.dataset import DatasetManifest, ManifestEntry
from ..schemas.geometry import GeometrySpec, ImageMeta, SlidingPattern, SmallMode, integer_sqrt
from ..utils.images import load_png, pad_centered, resize_bilinear
from .geometry_service import overlap_square

logger = logging.getLogger(__name__)

Origin = Tuple[float, float]
BASELINE_MODES = ("pad", "magnify", "shrink")


@dataclass
class WindowStack:
    tensor: np.ndarray  # (M, C, h, w)
    image_id: str
    spec: GeometrySpec
    alpha: float
    pattern: SlidingPattern
    origins: List[Tuple[int, int]] = field(default_factory=list)


@dataclass
class CoherenceReport:
    fractions: List[float]
    alpha: float

    @property
    def max_deviation(self) -> float:
        return max((abs(f - self.alpha) for f in self.fractions), default=0.0)


@dataclass
class TransformRecord:
    image_id: str
    height: int
    width: int
    alpha: Optional[float]
    pattern: str
    output: str

    def log_line(self) -> str:
        alpha = "n/a" if self.alpha is None else f"{self.alpha:.10f}"
        return f"{self.image_id}, {self.height}, {self.width}, {alpha}, {self.pattern}"


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def _axis_offsets(extent: int, window: int, root: int, exact: bool) -> List[float]:
    """Window offsets along one axis: equal real steps from 0 to extent - window."""
    limit = extent - window
    if root == 1:
        return [0.0 if exact else 0]
    step = limit / (root - 1)
    offsets = [k * step for k in range(root)]
    if exact:
        return offsets
    rounded = [min(max(_round_half_up(o), 0), limit) for o in offsets[:-1]]
    return rounded + [limit]


def pattern_sequence(root: int, pattern: SlidingPattern) -> List[Tuple[int, int]]:
    """Visit order over the root x root grid of (row, column) window indices."""
    pattern = SlidingPattern(pattern)
    if pattern == SlidingPattern.HORIZONTAL:
        cells = []
        for n in range(root * root):
            row, j = divmod(n, root)
            cells.append((row, j if row % 2 == 0 else root - 1 - j))
        return cells
    if pattern == SlidingPattern.VERTICAL:
        return [(c, r) for r, c in pattern_sequence(root, SlidingPattern.HORIZONTAL)]

    # clockwise spiral, outside in, from the top-left corner
    cells = []
    top, bottom, left, right = 0, root - 1, 0, root - 1
    while top <= bottom and left <= right:
        cells.extend((top, c) for c in range(left, right + 1))
        top += 1
        cells.extend((r, right) for r in range(top, bottom + 1))
        right -= 1
        if top <= bottom:
            cells.extend((bottom, c) for c in range(right, left - 1, -1))
            bottom -= 1
        if left <= right:
            cells.extend((r, left) for r in range(bottom, top - 1, -1))
            left += 1
    return cells


def window_origins(
    H: int,
    W: int,
    h: int,
    gamma: float,
    m: int,
    alpha: float,
    pattern: Union[SlidingPattern, str] = SlidingPattern.HORIZONTAL,
    exact: bool = False,
) -> List[Origin]:
    """Top-left corners of the m windows in visit order.

    Rounded origins are integers clamped so the last row and column sit flush
    with the far edges; ``exact=True`` returns the real-valued offsets instead.
    """
    try:
        pattern = SlidingPattern(pattern)
    except ValueError:
        raise InvalidArgumentError(f"unknown sliding pattern {pattern!r}")
    root = integer_sqrt(int(m))
    if root is None:
        raise InvalidArgumentError(f"m={m} is not a perfect square")
    w = int(round(gamma * h))
    if h > H or w > W:
        raise InvalidArgumentError(f"window ({h}, {w}) larger than image ({H}, {W})")
    expected = overlap_square(H, h, m)
    if abs(expected - alpha) > 1e-6:
        raise InvalidArgumentError(f"alpha={alpha} inconsistent with H={H}, h={h}, M={m} (expected {expected})")

    rows = _axis_offsets(H, h, root, exact)
    cols = _axis_offsets(W, w, root, exact)
    return [(rows[r], cols[c]) for r, c in pattern_sequence(root, pattern)]


def clamp_resize(
    image: np.ndarray,
    h_min_clamp: int,
    h_max_clamp: int,
    small_mode: Union[SmallMode, str] = SmallMode.PAD,
) -> np.ndarray:
    """Bring an image's height into [h_min_clamp, h_max_clamp], keeping its aspect ratio."""
    small_mode = SmallMode(small_mode)
    _, H, W = image.shape
    if h_min_clamp <= H <= h_max_clamp:
        return image
    target = h_max_clamp if H > h_max_clamp else h_min_clamp
    width = max(1, int(round(W * target / H)))
    if H > h_max_clamp or small_mode == SmallMode.MAGNIFY:
        return resize_bilinear(image, target, width)
    return pad_centered(image, target, width)


def extract_stack(
    image: np.ndarray,
    spec: GeometrySpec,
    pattern: Union[SlidingPattern, str] = SlidingPattern.HORIZONTAL,
    image_id: str = "",
) -> WindowStack:
    """Cut the (M, C, h, w) window stack out of a (C, H, W) image already within the clamp range."""
    if image.ndim != 3:
        raise InvalidArgumentError(f"expected a (C, H, W) image, got shape {image.shape}")
    meta = ImageMeta(channels=image.shape[0], height=image.shape[1], width=image.shape[2])
    H, W = meta.height, meta.width
    if abs(meta.aspect_ratio - spec.gamma) > settings.ASPECT_TOLERANCE * spec.gamma + 0.5 / H:
        raise AspectError(f"image aspect {meta.aspect_ratio:.6f} differs from window aspect {spec.gamma:.6f}")
    try:
        alpha = overlap_square(H, spec.h, spec.m)
    except (InfeasibleError, InvalidArgumentError) as e:
        raise GeometryError(f"image {image_id or '?'} of height {H}: {e}")

    origins = window_origins(H, W, spec.h, spec.gamma, spec.m, alpha, pattern)
    h, w = spec.h, spec.w
    frames = np.stack([image[:, a:a + h, c:c + w] for a, c in origins])
    return WindowStack(
        tensor=frames, image_id=image_id, spec=spec, alpha=alpha,
        pattern=SlidingPattern(pattern), origins=[(int(a), int(c)) for a, c in origins],
    )


def coherence_report(origins: Sequence[Origin], h: float, gamma_h: float, alpha: float) -> CoherenceReport:
    """Intersection area over window area for every consecutive pair of windows."""
    area = h * gamma_h
    fractions = []
    for (a0, c0), (a1, c1) in zip(origins, origins[1:]):
        rows = max(0.0, min(a0, a1) + h - max(a0, a1))
        cols = max(0.0, min(c0, c1) + gamma_h - max(c0, c1))
        fractions.append(rows * cols / area)
    return CoherenceReport(fractions=fractions, alpha=alpha)


def coverage_counts(origins: Sequence[Origin], H: int, W: int, h: int, w: int) -> np.ndarray:
    """Per-pixel number of windows containing that pixel."""
    counts = np.zeros((H, W), dtype=np.int32)
    for a, c in origins:
        counts[int(a):int(a) + h, int(c):int(c) + w] += 1
    return counts


def equivalent_side(h: int, w: int, m: int) -> int:
    """Side of the square image holding as many samples as an (m, h, w) stack."""
    return int(round(math.sqrt(h * w * m)))


def resize_baseline(image: np.ndarray, size: int, mode: str) -> np.ndarray:
    """Square 2D alternative to the window stack: shrink large images, pad or magnify small ones."""
    if mode not in BASELINE_MODES:
        raise InvalidArgumentError(f"unknown baseline mode {mode!r}")
    _, H, W = image.shape
    if mode == "shrink" or H > size or W > size:
        return resize_bilinear(image, size, size)
    if H == size and W == size:
        return image
    if mode == "magnify":
        return resize_bilinear(image, size, size)
    return pad_centered(image, size, size)


class TransformService:
    """Apply the window transform (or a resize baseline) to every image of a directory or manifest."""

    def __init__(
        self,
        spec: GeometrySpec,
        pattern: Union[SlidingPattern, str] = SlidingPattern.HORIZONTAL,
        small_mode: Union[SmallMode, str] = SmallMode.PAD,
        mode: str = "votcsw",
        size: Optional[int] = None,
        threads: int = 1,
    ):
        if mode != "votcsw" and mode not in BASELINE_MODES:
            raise InvalidArgumentError(f"unknown transform mode {mode!r}")
        self.spec = spec
        self.pattern = SlidingPattern(pattern)
        self.small_mode = SmallMode(small_mode)
        self.mode = mode
        self.size = size or equivalent_side(spec.h, spec.w, spec.m)
        self.threads = max(1, threads)

    def transform_array(self, image: np.ndarray, image_id: str = "") -> Tuple[np.ndarray, Optional[float]]:
        if self.mode != "votcsw":
            return resize_baseline(image, self.size, self.mode), None
        clamped = clamp_resize(image, self.spec.h_min_clamp, self.spec.h_max_clamp, self.small_mode)
        stack = extract_stack(clamped, self.spec, self.pattern, image_id)
        return stack.tensor, stack.alpha

    def _transform_one(self, job: Tuple[str, Path, Path]) -> TransformRecord:
        image_id, source, destination = job
        image = load_png(source)
        tensor, alpha = self.transform_array(image, image_id)
        tensor_write(tensor, destination)
        pattern = self.pattern.value if self.mode == "votcsw" else self.mode
        return TransformRecord(image_id, int(image.shape[1]), int(image.shape[2]), alpha, pattern, str(destination))

    def _run(self, jobs: List[Tuple[str, Path, Path]], out_dir: Path) -> List[TransformRecord]:
        out_dir.mkdir(parents=True, exist_ok=True)
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            records = list(pool.map(self._transform_one, jobs))
        log_path = out_dir / "transform.log"
        log_path.write_text("".join(r.log_line() + "\n" for r in records), encoding="utf-8")
        logger.info("transformed %d images into %s", len(records), out_dir)
        return records

    def transform_directory(self, source_dir: Union[str, Path], out_dir: Union[str, Path]) -> List[TransformRecord]:
        source_dir, out_dir = Path(source_dir), Path(out_dir)
        images = sorted(source_dir.glob("*.png"))
        jobs = [(p.stem, p, out_dir / "stacks" / f"{p.stem}{settings.TENSOR_SUFFIX}") for p in images]
        return self._run(jobs, out_dir)

    def transform_manifest(
        self, manifest: DatasetManifest, base_dir: Union[str, Path], out_dir: Union[str, Path]
    ) -> Tuple[List[TransformRecord], DatasetManifest]:
        """Transform every manifest entry; the returned manifest points at the tensor files."""
        base_dir, out_dir = Path(base_dir), Path(out_dir)
        jobs = [
            (e.id, base_dir / e.path, out_dir / "stacks" / f"{e.id}{settings.TENSOR_SUFFIX}")
            for e in manifest.entries
        ]
        records = self._run(jobs, out_dir)
        entries = [
            ManifestEntry(
                id=e.id, path=f"stacks/{e.id}{settings.TENSOR_SUFFIX}", label=e.label,
                height=e.height, width=e.width, split=e.split,
            )
            for e in manifest.entries
        ]
        return records, DatasetManifest(entries=entries, classes=manifest.classes)
