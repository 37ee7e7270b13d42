"""The invariant transformer net, trained with the displacement loss against a frozen classifier."""

from .blocks import ControlVector, FcBlock, ItnBlocks, load_blocks, save_blocks
from .config import ItnConfig
from .losses import (
    Branch,
    UnitVectorSet,
    displacement,
    gate,
    loss_hat,
    loss_k,
    sample_unit_vectors,
    select_final_loss,
)
from .net import (
    ItnOutput,
    SpatialSummary,
    TransformedEvaluation,
    describe_spatial,
    evaluate_transformed,
    itn_forward,
    summarize_itn,
    summary_grid,
)
from .render import itn_render, render_name
from .train import ItnTrainResult, StepLog, as_classifier, itn_train, smoothed_displacement, write_step_log

__all__ = [
    "Branch",
    "ControlVector",
    "FcBlock",
    "ItnBlocks",
    "ItnConfig",
    "ItnOutput",
    "ItnTrainResult",
    "SpatialSummary",
    "StepLog",
    "TransformedEvaluation",
    "UnitVectorSet",
    "as_classifier",
    "describe_spatial",
    "displacement",
    "evaluate_transformed",
    "gate",
    "itn_forward",
    "itn_render",
    "itn_train",
    "load_blocks",
    "loss_hat",
    "loss_k",
    "render_name",
    "sample_unit_vectors",
    "save_blocks",
    "select_final_loss",
    "smoothed_displacement",
    "summarize_itn",
    "summary_grid",
    "write_step_log",
]
