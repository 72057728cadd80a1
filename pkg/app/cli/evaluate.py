import logging
from pathlib import Path

from ..models.store import load_model
from ..schemas.network import EvaluationArtifact
from ..schemas.run_config import RunConfig
from ..services.metrics_service import confusion_matrix, evaluate_metrics, time_inference
from ..services.report_service import emit_report, load_artifacts, write_evaluation
from .deps import check_classes, load_manifest, load_samples

logger = logging.getLogger(__name__)


def evaluate(config: RunConfig) -> None:
    model = load_model(config.model)
    manifest, base_dir = load_manifest(config.input)
    check_classes(model, manifest)
    samples, labels = load_samples(manifest, base_dir, "test")

    predicted = model.predict(samples)
    confusion = confusion_matrix(labels, predicted, model.num_classes)
    artifact = EvaluationArtifact(
        classes=model.classes,
        confusion=confusion.tolist(),
        metrics=evaluate_metrics(confusion, model.classes),
        timing=time_inference(model, samples),
        parameters=model.parameter_count(),
        degrees=model.degrees,
    )
    write_evaluation(artifact, Path(config.out))
    print(f"accuracy: {artifact.metrics.accuracy:.4f} ({artifact.metrics.correct}/{artifact.metrics.total})")


def report(config: RunConfig) -> None:
    artifact, plan = load_artifacts(config.input, config.reduction)
    text_path, _ = emit_report(artifact, Path(config.out), plan)
    print(text_path.read_text(encoding="utf-8"), end="")
