from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..config import settings
from .geometry import ParameterOrder, SlidingPattern, SmallMode

Subcommand = Literal["plan", "synth", "resample", "transform", "train", "reduce", "eval", "report"]
TransformMode = Literal["votcsw", "pad", "magnify", "shrink"]


class RunConfig(BaseModel):
    """Fully resolved settings of one CLI invocation (file values overridden by flags)."""

    model_config = ConfigDict(extra="forbid")

    subcommand: Subcommand
    input: Optional[str] = None
    out: str = "out"
    model: Optional[str] = None
    reduction: Optional[str] = None
    seed: int = settings.DEFAULT_SEED
    threads: int = Field(settings.DEFAULT_THREADS, ge=1)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = settings.LOG_LEVEL

    # Geometry planning
    hmin: Optional[int] = Field(None, ge=1)
    hmax: Optional[int] = Field(None, ge=1)
    m: Optional[int] = Field(None, ge=1)
    alpha_min: Optional[float] = Field(None, ge=0.0, lt=1.0)
    alpha_max: Optional[float] = Field(None, ge=0.0, lt=1.0)
    order: ParameterOrder = ParameterOrder.AMIN_AMAX_M

    # Transform
    h: Optional[int] = Field(None, ge=1)
    gamma: float = Field(1.0, gt=0.0)
    pattern: SlidingPattern = SlidingPattern.HORIZONTAL
    small_mode: SmallMode = SmallMode.PAD
    hmin_clamp: Optional[int] = Field(None, ge=1)
    hmax_clamp: Optional[int] = Field(None, ge=1)
    mode: TransformMode = "votcsw"
    size: Optional[int] = Field(None, ge=1)

    # Network and training
    learning_rate: float = Field(1e-3, ge=0.0)
    batch_size: int = Field(128, ge=1)
    epochs: int = Field(100, ge=1)
    restarts: int = Field(1, ge=1)
    val_ratio: float = Field(0.1, ge=0.0, lt=1.0)
    degree: int = Field(1, ge=1)
    depth: int = Field(3, ge=1)
    first_channels: int = Field(32, ge=1)
    inner_channels: int = Field(64, ge=1)
    last_channels: int = Field(64, ge=1)
    dense_units: int = Field(128, ge=0)
    kernel: int = Field(3, ge=1)

    # Degree reduction
    tolerance: float = Field(0.0, ge=0.0)

    # Datasets
    classes: int = Field(2, ge=1)
    count: int = Field(200, ge=0)
    size_min: int = Field(418, ge=2)
    size_max: int = Field(973, ge=2)
    channels: Literal[1, 3] = 1
    noise: float = Field(0.05, ge=0.0)
    train_ratio: float = Field(0.9, gt=0.0, lt=1.0)
    size_bins: int = Field(8, ge=1)


REQUIRED_FIELDS = {
    "plan": ["hmin", "hmax", "m", "alpha_min", "alpha_max"],
    "synth": [],
    "resample": ["input"],
    "transform": ["input"],
    "train": ["input"],
    "reduce": ["input", "model"],
    "eval": ["input", "model"],
    "report": ["input"],
}


def missing_fields(config: RunConfig) -> List[str]:
    return [name for name in REQUIRED_FIELDS[config.subcommand] if getattr(config, name) is None]
