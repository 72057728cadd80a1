import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError
from sklearn.model_selection import train_test_split

from ..exceptions import FormatError, InfeasibleError, InvalidArgumentError
from ..schemas.dataset import DatasetManifest, DistributionReport, ManifestEntry, SplitDistribution

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["id", "path", "label", "height", "width", "split"]
SPLITS = ("train", "test")


def manifest_frame(manifest: DatasetManifest) -> pd.DataFrame:
    return pd.DataFrame([e.model_dump() for e in manifest.entries], columns=MANIFEST_COLUMNS)


def read_manifest(path: Union[str, Path], classes: Optional[Sequence[str]] = None) -> DatasetManifest:
    path = Path(path)
    try:
        frame = pd.read_csv(
            path, dtype={"id": str, "path": str, "label": str, "split": str}, keep_default_na=False,
        )
    except FileNotFoundError:
        raise FormatError(f"manifest {path} not found")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FormatError(f"{path}: unreadable manifest: {e}")
    missing = [c for c in MANIFEST_COLUMNS if c not in frame.columns]
    if missing:
        raise FormatError(f"{path}: manifest lacks columns {missing}")
    try:
        entries = [ManifestEntry(**row) for row in frame[MANIFEST_COLUMNS].to_dict(orient="records")]
        return DatasetManifest(entries=entries, classes=list(classes or []))
    except ValidationError as e:
        raise FormatError(f"{path}: invalid manifest: {e}")


def write_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest_frame(manifest).to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def size_bin_edges(manifest: DatasetManifest, bins: int = 8) -> List[float]:
    """Equal-width bin edges over the manifest's height range."""
    if bins < 1:
        raise InvalidArgumentError(f"size bins must be >= 1, got {bins}")
    heights = [e.height for e in manifest.entries]
    return np.linspace(min(heights), max(heights), bins + 1).tolist()


def _bin_index(heights: pd.Series, edges: Sequence[float]) -> np.ndarray:
    # right-closed last bin: the largest height falls in the final bin
    index = np.digitize(heights.to_numpy(), np.asarray(edges[1:-1]), right=False)
    return np.clip(index, 0, len(edges) - 2)


def distribution_report(
    manifest: DatasetManifest, bins: int = 8, edges: Optional[Sequence[float]] = None
) -> DistributionReport:
    """Per-split class frequencies and per-class height histograms."""
    if not len(manifest):
        raise InvalidArgumentError("distribution report needs a non-empty manifest")
    edges = list(edges) if edges is not None else size_bin_edges(manifest, bins)
    logger.info("size bin edges: %s", ", ".join(f"{e:.2f}" for e in edges))

    frame = manifest_frame(manifest)
    frame["bin"] = _bin_index(frame["height"], edges)
    splits = []
    for name in SPLITS:
        part = frame[frame["split"] == name]
        if part.empty:
            logger.warning("split %s is empty", name)
            splits.append(SplitDistribution(
                split=name, count=0,
                class_frequencies={c: 0.0 for c in manifest.classes},
                size_histograms={c: [0] * (len(edges) - 1) for c in manifest.classes},
                empty=True,
            ))
            continue
        counts = part["label"].value_counts()
        histograms = (
            part.groupby(["label", "bin"]).size()
            .unstack(fill_value=0)
            .reindex(index=manifest.classes, columns=range(len(edges) - 1), fill_value=0)
        )
        splits.append(SplitDistribution(
            split=name,
            count=len(part),
            class_frequencies={c: float(counts.get(c, 0)) / len(part) for c in manifest.classes},
            size_histograms={c: [int(v) for v in histograms.loc[c]] for c in manifest.classes},
        ))
    return DistributionReport(bin_edges=edges, splits=splits)


def render_report(report: DistributionReport) -> str:
    """Plain-text table: one row per class, frequency and histogram columns per split."""
    rows: Dict[str, Dict[str, object]] = {}
    for split in report.splits:
        for label, freq in split.class_frequencies.items():
            row = rows.setdefault(label, {})
            row[f"{split.split}_freq"] = round(freq, 4)
            row[f"{split.split}_sizes"] = " ".join(str(v) for v in split.size_histograms[label])
    frame = pd.DataFrame.from_dict(rows, orient="index")
    frame.index.name = "class"
    header = [
        "bin edges: " + ", ".join(f"{e:.2f}" for e in report.bin_edges),
        "counts: " + ", ".join(
            f"{s.split}={s.count}" + (" (empty)" if s.empty else "") for s in report.splits
        ),
    ]
    return "\n".join(header) + "\n" + frame.to_string() + "\n"


def stratified_resplit(
    manifest: DatasetManifest,
    train_ratio: float,
    size_bins: int = 8,
    seed: int = 0,
    edges: Optional[Sequence[float]] = None,
) -> DatasetManifest:
    """Reassign every entry to train/test so both match the class x size-bin distribution.

    The (class, size-bin) cell of each entry is the stratification key of a
    seeded ``train_test_split``; the global train count is ``round(ratio * N)``
    and is shared among the cells by largest remainder. Cells with fewer than
    two entries cannot be split and go wholly to train.
    """
    if not 0.0 < train_ratio < 1.0:
        raise InvalidArgumentError(f"train_ratio must lie in (0, 1), got {train_ratio}")
    if not len(manifest):
        return DatasetManifest(entries=[], classes=manifest.classes)
    edges = list(edges) if edges is not None else size_bin_edges(manifest, size_bins)

    frame = manifest_frame(manifest)
    frame["cell"] = frame["label"] + "|" + pd.Series(_bin_index(frame["height"], edges)).astype(str)
    cell_sizes = frame["cell"].value_counts()
    for key, size in cell_sizes[cell_sizes < 2].sort_index().items():
        logger.warning("cell %s has %d entries; assigned wholly to train", key, size)
    splittable = frame[frame["cell"].map(cell_sizes) >= 2]

    split = np.full(len(frame), "train", dtype=object)
    if len(splittable):
        n_cells = splittable["cell"].nunique()
        n_train = int(np.floor(train_ratio * len(splittable) + 0.5))
        if min(n_train, len(splittable) - n_train) < n_cells:
            raise InfeasibleError(
                f"{len(splittable)} entries at train_ratio {train_ratio} give {n_train} train and "
                f"{len(splittable) - n_train} test, fewer than the {n_cells} class x size-bin cells; "
                "lower size_bins or move train_ratio towards 0.5"
            )
        _, test_rows = train_test_split(
            splittable.index.to_numpy(),
            train_size=n_train,
            random_state=seed,
            stratify=splittable["cell"],
        )
        split[test_rows] = "test"

    entries = [e.model_copy(update={"split": s}) for e, s in zip(manifest.entries, split)]
    result = DatasetManifest(entries=entries, classes=manifest.classes)
    logger.info(
        "resplit %d entries over %d cells: %d train, %d test",
        len(entries), len(cell_sizes), len(result.split("train")), len(result.split("test")),
    )
    return result
