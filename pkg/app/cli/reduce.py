import logging
from pathlib import Path

from ..config import settings
from ..models.store import load_model, save_model
from ..schemas.run_config import RunConfig
from ..services.reduction_service import reduce_network, write_reduction_report
from ..services.report_service import write_plan
from .deps import check_classes, load_manifest, load_samples

logger = logging.getLogger(__name__)


def reduce(config: RunConfig) -> None:
    model = load_model(config.model)
    manifest, base_dir = load_manifest(config.input)
    check_classes(model, manifest)
    samples, labels = load_samples(manifest, base_dir, "train")

    reduced, plan = reduce_network(
        model, samples, labels, tolerance=config.tolerance, threads=config.threads,
    )
    out = Path(config.out)
    save_model(reduced, out / f"model{settings.MODEL_SUFFIX}")
    write_reduction_report(plan, out / "reduction.txt")
    write_plan(plan, out)
    print(plan.report_lines()[-1])
