import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import pandas as pd
from pydantic import ValidationError

from ..exceptions import FormatError, MissingArtifactError
from ..schemas.network import EvaluationArtifact, ReductionPlan

logger = logging.getLogger(__name__)

EVALUATION_FILE = "evaluation.json"
REDUCTION_FILE = "reduction.json"
REPORT_TEXT = "report.txt"
REPORT_CSV = "report.csv"


def write_evaluation(artifact: EvaluationArtifact, out_dir: Union[str, Path]) -> Path:
    path = Path(out_dir) / EVALUATION_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(artifact.model_dump_json(indent=2), encoding="utf-8")
    return path


def write_plan(plan: ReductionPlan, out_dir: Union[str, Path]) -> Path:
    path = Path(out_dir) / REDUCTION_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(plan.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_artifacts(
    evaluation: Union[str, Path], reduction: Optional[Union[str, Path]] = None
) -> Tuple[EvaluationArtifact, Optional[ReductionPlan]]:
    """Read an evaluation artifact (required) and a reduction plan (optional).

    Either argument may name the file itself or the directory holding it.
    """
    evaluation = Path(evaluation)
    if evaluation.is_dir():
        evaluation = evaluation / EVALUATION_FILE
    if not evaluation.exists():
        raise MissingArtifactError(f"evaluation artifact {evaluation} not found")
    try:
        artifact = EvaluationArtifact.model_validate_json(evaluation.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise FormatError(f"{evaluation}: invalid evaluation artifact: {e}")

    plan = None
    if reduction is not None:
        reduction = Path(reduction)
        if reduction.is_dir():
            reduction = reduction / REDUCTION_FILE
        if not reduction.exists():
            raise MissingArtifactError(f"reduction plan {reduction} not found")
        try:
            plan = ReductionPlan.model_validate_json(reduction.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise FormatError(f"{reduction}: invalid reduction plan: {e}")
    return artifact, plan


def _rows(artifact: EvaluationArtifact, plan: Optional[ReductionPlan]) -> List[Tuple[str, str]]:
    m = artifact.metrics
    rows = [
        ("accuracy", f"{m.accuracy:.4f}"),
        ("correct", str(m.correct)),
        ("total", str(m.total)),
        ("macro_precision", f"{m.macro_precision:.4f}"),
        ("macro_recall", f"{m.macro_recall:.4f}"),
        ("macro_f1", f"{m.macro_f1:.4f}"),
        ("weighted_precision", f"{m.weighted_precision:.4f}"),
        ("weighted_recall", f"{m.weighted_recall:.4f}"),
        ("weighted_f1", f"{m.weighted_f1:.4f}"),
    ]
    for c in m.per_class:
        rows += [
            (f"precision[{c.label}]", f"{c.precision:.4f}"),
            (f"recall[{c.label}]", f"{c.recall:.4f}"),
            (f"f1[{c.label}]", f"{c.f1:.4f}"),
        ]
    for i, actual in enumerate(artifact.classes):
        for j, predicted in enumerate(artifact.classes):
            rows.append((f"confusion[{actual}][{predicted}]", str(artifact.confusion[i][j])))

    if plan is not None:
        rows += [
            ("degrees_before", " ".join(map(str, plan.original_degrees))),
            ("degrees_after", " ".join(map(str, plan.final_degrees))),
            ("parameters_original", str(plan.original_parameters)),
            ("parameters_reduced", str(plan.reduced_parameters)),
            ("parameter_ratio", f"{plan.parameter_ratio:.4f}"),
        ]
    else:
        if artifact.degrees:
            rows.append(("degrees", " ".join(map(str, artifact.degrees))))
        if artifact.parameters is not None:
            rows.append(("parameters", str(artifact.parameters)))
    if artifact.timing is not None:
        rows.append(("mean_inference_seconds", f"{artifact.timing.mean_seconds:.6f}"))
    rows += [(key, f"{value:.6f}") for key, value in sorted(artifact.extra.items())]
    return rows


def render_text(artifact: EvaluationArtifact, plan: Optional[ReductionPlan] = None) -> str:
    m = artifact.metrics
    confusion = pd.DataFrame(artifact.confusion, index=artifact.classes, columns=artifact.classes)
    per_class = pd.DataFrame([c.model_dump() for c in m.per_class]).set_index("label").round(4)
    lines = [
        "confusion matrix (rows: actual, columns: predicted)",
        confusion.to_string(),
        "",
        f"accuracy: {m.accuracy:.4f} ({m.correct}/{m.total})",
        f"macro precision: {m.macro_precision:.4f}  recall: {m.macro_recall:.4f}  f1: {m.macro_f1:.4f}",
        f"weighted precision: {m.weighted_precision:.4f}  recall: {m.weighted_recall:.4f}  f1: {m.weighted_f1:.4f}",
        "",
        per_class.to_string(),
        "",
    ]
    if plan is not None:
        lines += [
            "degrees before reduction: " + " ".join(map(str, plan.original_degrees)),
            "degrees after reduction: " + " ".join(map(str, plan.final_degrees)),
            f"parameters: {plan.original_parameters} -> {plan.reduced_parameters}",
            f"parameter ratio (original/reduced): {plan.parameter_ratio:.4f}",
        ]
    else:
        if artifact.degrees:
            lines.append("degrees: " + " ".join(map(str, artifact.degrees)))
        if artifact.parameters is not None:
            lines.append(f"parameters: {artifact.parameters}")
    if artifact.timing is not None:
        lines.append(f"mean inference time per sample: {artifact.timing.mean_seconds:.6f} s")
    for key, value in sorted(artifact.extra.items()):
        lines.append(f"{key}: {value:.4f}")
    return "\n".join(lines) + "\n"


def emit_report(
    artifact: Optional[EvaluationArtifact],
    out_dir: Union[str, Path],
    plan: Optional[ReductionPlan] = None,
) -> Tuple[Path, Path]:
    """Write ``report.txt`` and ``report.csv`` (metric,value) into ``out_dir``."""
    if artifact is None:
        raise MissingArtifactError("no evaluation artifact to report on")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text_path = out_dir / REPORT_TEXT
    text_path.write_text(render_text(artifact, plan), encoding="utf-8")
    csv_path = out_dir / REPORT_CSV
    pd.DataFrame(_rows(artifact, plan), columns=["metric", "value"]).to_csv(
        csv_path, index=False, lineterminator="\n",
    )
    logger.info("report written to %s and %s", text_path, csv_path)
    return text_path, csv_path
