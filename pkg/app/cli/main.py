import logging
import platform
import sys
from importlib import metadata
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

from ..config import settings
from ..exceptions import UsageError, VotcswError
from ..schemas.run_config import RunConfig
from ..utils.logger import setup_logger
from .config import parse_config
from .dataset import resample, synth
from .evaluate import evaluate, report
from .plan import plan
from .reduce import reduce
from .train import train
from .transform import transform

COMMANDS: Dict[str, Callable[[RunConfig], None]] = {
    "plan": plan,
    "synth": synth,
    "resample": resample,
    "transform": transform,
    "train": train,
    "reduce": reduce,
    "eval": evaluate,
    "report": report,
}

VERSIONED = ("numpy", "pandas", "scikit-learn", "opencv-python-headless", "pydantic", "pydantic-settings", "python-dotenv")


def library_versions() -> str:
    versions = [f"python {platform.python_version()}"]
    for name in VERSIONED:
        try:
            versions.append(f"{name} {metadata.version(name)}")
        except metadata.PackageNotFoundError:
            versions.append(f"{name} ?")
    return ", ".join(versions)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; 0 on success, 1 on a domain error, 2 on a usage error."""
    try:
        config = parse_config(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    except UsageError as e:
        print(f"{e.kind}: {e.message}", file=sys.stderr)
        return e.exit_code

    log_file = Path(config.out) / settings.RUN_LOG_NAME
    logger = setup_logger("app", str(log_file), getattr(logging, config.log_level))
    logger.info("config: %s", config.model_dump_json())
    logger.info("seed: %d", config.seed)
    logger.info("versions: %s", library_versions())

    try:
        COMMANDS[config.subcommand](config)
    except VotcswError as e:
        logger.error("%s: %s", e.kind, e.message)
        return e.exit_code
    logger.info("%s finished", config.subcommand)
    return 0


def main() -> None:
    sys.exit(run())
