"""Transformation-magnitude sweeps, top-k softmax curves and invariance thresholds."""

from .export import export_result, read_result_csv, sidecar_path
from .summary import TopkCurves, summarize_topk
from .sweep import (
    SweepResult,
    extract_threshold,
    outward_order,
    run_accuracy_sweep,
    run_sweep,
    split_two_sided,
    transform_pixels,
    validate_grid,
)

__all__ = [
    "SweepResult",
    "TopkCurves",
    "export_result",
    "extract_threshold",
    "outward_order",
    "read_result_csv",
    "run_accuracy_sweep",
    "run_sweep",
    "sidecar_path",
    "split_two_sided",
    "summarize_topk",
    "transform_pixels",
    "validate_grid",
]
