"""The frozen toy classifier: datasets, training, evaluation and weight files."""

from .data import Dataset, load_dataset, parse_cifar, parse_idx_images, parse_idx_labels, to_rgb32
from .model import (
    Classifier,
    LinearClassifier,
    ModelConfig,
    ModelWeights,
    ToyCnn,
    normalize_pixels,
    softmax_batches,
)
from .train import Evaluation, eval_batch_size, evaluate, mean_loss, train
from .weights import load_weights, save_weights

__all__ = [
    "Classifier",
    "Dataset",
    "Evaluation",
    "LinearClassifier",
    "ModelConfig",
    "ModelWeights",
    "ToyCnn",
    "eval_batch_size",
    "evaluate",
    "load_dataset",
    "load_weights",
    "mean_loss",
    "normalize_pixels",
    "parse_cifar",
    "parse_idx_images",
    "parse_idx_labels",
    "save_weights",
    "softmax_batches",
    "to_rgb32",
    "train",
]
