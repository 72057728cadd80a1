from .architecture_service import build_preset, init_output_bias, solve_equivalent_width
from .dataset_service import distribution_report, read_manifest, stratified_resplit, write_manifest
from .geometry_service import feasible_window_height_range, plan_geometry, validate_parameter_order
from .metrics_service import confusion_matrix, evaluate_metrics
from .reduction_service import compute_layer_bounds, reduce_layer_weights, reduce_network, reduce_poly
from .report_service import emit_report
from .synth_service import synth_dataset
from .training_service import Trainer, train
from .transform_service import TransformService, extract_stack, window_origins

__all__ = [
    "Trainer",
    "TransformService",
    "build_preset",
    "compute_layer_bounds",
    "confusion_matrix",
    "distribution_report",
    "emit_report",
    "evaluate_metrics",
    "extract_stack",
    "feasible_window_height_range",
    "init_output_bias",
    "plan_geometry",
    "read_manifest",
    "reduce_layer_weights",
    "reduce_network",
    "reduce_poly",
    "solve_equivalent_width",
    "stratified_resplit",
    "synth_dataset",
    "train",
    "validate_parameter_order",
    "window_origins",
    "write_manifest",
]
