from .dataset import DatasetManifest, DistributionReport, ManifestEntry, SplitDistribution, SynthSpec
from .geometry import (
    GeometryPlan,
    GeometrySpec,
    HeightRange,
    ImageMeta,
    OrderValidation,
    ParameterOrder,
    SlidingPattern,
    SmallMode,
)
from .network import (
    EpochLog,
    EvaluationArtifact,
    LayerEntry,
    MetricsReport,
    ModelManifest,
    ReductionPlan,
    ReductionStep,
    TrainConfig,
)
from .run_config import RunConfig

__all__ = [
    "DatasetManifest",
    "DistributionReport",
    "ManifestEntry",
    "SplitDistribution",
    "SynthSpec",
    "GeometryPlan",
    "GeometrySpec",
    "HeightRange",
    "ImageMeta",
    "OrderValidation",
    "ParameterOrder",
    "SlidingPattern",
    "SmallMode",
    "EpochLog",
    "EvaluationArtifact",
    "LayerEntry",
    "MetricsReport",
    "ModelManifest",
    "ReductionPlan",
    "ReductionStep",
    "TrainConfig",
    "RunConfig",
]
