from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

Activation = Literal["relu", "identity", "softmax"]
LayerType = Literal["polyconv", "maxpool", "flatten", "dense"]


class LayerEntry(BaseModel):
    """One row of a model file's layer manifest."""

    index: int
    type: LayerType
    rank: int = 0
    degree: int = 1
    extents: List[int] = []
    channels: Tuple[int, int] = (0, 0)
    activation: Activation = "identity"


class ModelManifest(BaseModel):
    format: str = "ndpm/1"
    num_classes: int
    input_shape: List[int]
    seed: int = 0
    classes: List[str] = []
    layers: List[LayerEntry]


class TrainConfig(BaseModel):
    learning_rate: float = Field(1e-3, ge=0.0)
    batch_size: int = Field(128, ge=1)
    epochs: int = Field(100, ge=1)
    beta1: float = Field(0.9, gt=0.0, lt=1.0)
    beta2: float = Field(0.999, gt=0.0, lt=1.0)
    epsilon: float = Field(1e-8, gt=0.0)
    seed: int = 0


class EpochLog(BaseModel):
    epoch: int
    loss: float
    train_acc: float
    val_acc: Optional[float] = None

    def line(self) -> str:
        val = "-" if self.val_acc is None else f"{self.val_acc:.6f}"
        return f"{self.epoch}, {self.loss:.8f}, {self.train_acc:.6f}, {val}"


class ClassMetrics(BaseModel):
    label: str
    support: int
    precision: float
    recall: float
    f1: float


class MetricsReport(BaseModel):
    accuracy: float
    total: int
    correct: int
    per_class: List[ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float


class ReductionStep(BaseModel):
    iteration: int
    layer: int
    new_degree: int
    score: float
    candidate_scores: List[float] = []

    def line(self) -> str:
        return f"{self.iteration}, {self.layer}, {self.new_degree}, {self.score:.6f}"


class ReductionPlan(BaseModel):
    original_degrees: List[int]
    reductions: List[int]
    bounds: List[float]
    threshold: float
    baseline_score: Optional[float] = None
    final_score: Optional[float] = None
    history: List[ReductionStep] = []
    original_parameters: int = 0
    reduced_parameters: int = 0

    @property
    def final_degrees(self) -> List[int]:
        return [d - r for d, r in zip(self.original_degrees, self.reductions)]

    @property
    def parameter_ratio(self) -> float:
        return self.original_parameters / self.reduced_parameters if self.reduced_parameters else float("nan")

    def report_lines(self) -> List[str]:
        lines = [step.line() for step in self.history]
        degrees = " ".join(str(d) for d in self.final_degrees)
        lines.append(f"degrees: {degrees}; parameter ratio: {self.parameter_ratio:.4f}")
        return lines


class InferenceTiming(BaseModel):
    samples: int
    mean_seconds: float


class EvaluationArtifact(BaseModel):
    """What `eval` leaves behind for the report."""

    classes: List[str]
    confusion: List[List[int]]
    metrics: MetricsReport
    timing: Optional[InferenceTiming] = None
    parameters: Optional[int] = None
    degrees: List[int] = []
    extra: Dict[str, float] = {}
