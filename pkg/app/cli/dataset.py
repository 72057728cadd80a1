import logging
from pathlib import Path

from ..config import settings
from ..schemas.dataset import SynthSpec
from ..schemas.run_config import RunConfig
from ..services.dataset_service import (
    distribution_report,
    render_report,
    size_bin_edges,
    stratified_resplit,
    write_manifest,
)
from ..services.synth_service import synth_dataset
from .deps import load_manifest, relocate

logger = logging.getLogger(__name__)


def synth(config: RunConfig) -> None:
    spec = SynthSpec(
        classes=config.classes, count=config.count, size_min=config.size_min,
        size_max=config.size_max, channels=config.channels, noise=config.noise, seed=config.seed,
    )
    out = Path(config.out)
    manifest = synth_dataset(spec, out, threads=config.threads)
    write_manifest(manifest, out / settings.MANIFEST_NAME)
    print(f"synthesised {len(manifest)} images in {out}")


def resample(config: RunConfig) -> None:
    manifest, base_dir = load_manifest(config.input)
    out = Path(config.out)
    edges = size_bin_edges(manifest, config.size_bins)
    before = distribution_report(manifest, edges=edges)
    resplit = stratified_resplit(manifest, config.train_ratio, seed=config.seed, edges=edges)
    after = distribution_report(resplit, edges=edges)

    out.mkdir(parents=True, exist_ok=True)
    write_manifest(relocate(resplit, base_dir, out), out / settings.MANIFEST_NAME)
    text = "before\n" + render_report(before) + "\nafter\n" + render_report(after)
    (out / "distribution.txt").write_text(text, encoding="utf-8")
    print(render_report(after), end="")
