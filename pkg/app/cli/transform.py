import logging
from pathlib import Path

from ..config import settings
from ..exceptions import MissingArtifactError
from ..schemas.geometry import GeometrySpec
from ..schemas.run_config import RunConfig
from ..services.dataset_service import write_manifest
from ..services.transform_service import TransformService
from .config import geometry_spec
from .deps import load_manifest

logger = logging.getLogger(__name__)


def transform(config: RunConfig) -> None:
    if config.h is not None and config.m is not None:
        spec = geometry_spec(config)
    else:
        # baseline with an explicit size: the window geometry is unused
        spec = GeometrySpec(m=1, h=config.size, h_max_clamp=config.size)
    service = TransformService(
        spec, pattern=config.pattern, small_mode=config.small_mode,
        mode=config.mode, size=config.size, threads=config.threads,
    )
    source = Path(config.input)
    out = Path(config.out)
    if not source.exists():
        raise MissingArtifactError(f"input {source} not found")

    if source.is_file() or (source / settings.MANIFEST_NAME).is_file():
        manifest, base_dir = load_manifest(str(source))
        records, stacked = service.transform_manifest(manifest, base_dir, out)
        write_manifest(stacked, out / settings.MANIFEST_NAME)
    else:
        records = service.transform_directory(source, out)
    print(f"transformed {len(records)} images into {out / 'stacks'}")
