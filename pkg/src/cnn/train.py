"""Mini-batch SGD training and evaluation of the toy CNN."""

import logging
from dataclasses import dataclass

import numpy as np

from src.my_util.config import load_defaults_toml
from src.my_util.errors import UsageError
from src.tensor_core import Tape, Tensor, backward, cross_entropy, sgd_step, softmax
from src.tensor_core.ops import CE_EPSILON

from .data import Dataset
from .model import ModelConfig, ModelWeights, ToyCnn, normalize_pixels, softmax_batches

logger = logging.getLogger(__name__)


def eval_batch_size() -> int:
    return int(load_defaults_toml("cnn")["evaluate"]["batch"])


@dataclass
class Evaluation:
    accuracy: float
    softmax: np.ndarray  # N×n_classes
    predictions: np.ndarray


def train(config: ModelConfig, data: Dataset, epochs: int, lr: float, batch: int) -> ModelWeights:
    if len(data) == 0:
        raise UsageError("cannot train on an empty dataset")
    if batch < 1 or epochs < 0:
        raise UsageError(f"need batch >= 1 and epochs >= 0, got batch={batch} epochs={epochs}")
    model = ToyCnn(ModelWeights.initialize(config), trainable=True)
    rng = np.random.default_rng(config.seed)
    n = len(data)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            x = Tensor(normalize_pixels(data.pixels[idx]))
            labels = data.labels[idx]
            with Tape() as tape:
                probs = softmax(model.logits(x))
                loss = cross_entropy(probs, labels)
            backward(tape, loss)
            sgd_step(model.parameters(), lr)
            loss_sum += loss.item() * len(idx)
            correct += int((probs.data.argmax(axis=1) == labels).sum())
        logger.info("epoch %d/%d: loss %.4f, train accuracy %.4f", epoch, epochs, loss_sum / n, correct / n)
    return model.to_weights()


def evaluate(weights: ModelWeights, data: Dataset, batch: int | None = None) -> Evaluation:
    if len(data) == 0:
        raise UsageError("cannot evaluate on an empty dataset")
    probs = softmax_batches(ToyCnn(weights), normalize_pixels(data.pixels), batch or eval_batch_size())
    predictions = probs.argmax(axis=1)
    return Evaluation(float(np.mean(predictions == data.labels)), probs, predictions)


def mean_loss(weights: ModelWeights, data: Dataset, batch: int | None = None) -> float:
    """Dataset-level mean cross-entropy."""
    probs = evaluate(weights, data, batch).softmax
    picked = probs[np.arange(len(data)), data.labels]
    return float(np.mean(-np.log(picked + CE_EPSILON)))
