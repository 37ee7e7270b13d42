"""Training loop for the FC blocks against a frozen classifier."""

import csv
import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.cnn import Classifier, Dataset, ModelWeights, ToyCnn, eval_batch_size, normalize_pixels, softmax_batches
from src.diff_transformer import extend_square
from src.my_util.errors import ConfigurationError, UsageError
from src.tensor_core import Tape, Tensor, backward, cross_entropy, sgd_step, softmax

from .blocks import ControlVector, ItnBlocks
from .config import ItnConfig
from .losses import Branch, gate, loss_k, sample_unit_vectors, select_final_loss
from .net import itn_forward, transformed_softmax

logger = logging.getLogger(__name__)

LOG_FIELDS = ("step", "branch", "loss_orig", "loss_color", "loss_spatial", "batch_acc")


@dataclass
class StepLog:
    step: int
    branch: Branch
    loss_orig: float
    loss_color: float  # L_k of the colour map, before c_theta
    loss_spatial: float
    batch_acc: float

    def displacement_loss(self, c_theta: float) -> float:
        return c_theta * self.loss_color + self.loss_spatial


@dataclass
class ItnTrainResult:
    blocks: ItnBlocks
    log: list[StepLog]
    config: ItnConfig  # acc_orig resolved
    clean_accuracy: float
    initial_accuracy: float  # at k=0, before the first step


def as_classifier(model: ModelWeights | Classifier) -> Classifier:
    return ToyCnn(model) if isinstance(model, ModelWeights) else model


def clean_accuracy(classifier: Classifier, data: Dataset) -> float:
    probs = softmax_batches(classifier, normalize_pixels(data.pixels), eval_batch_size())
    return float(np.mean(probs.argmax(axis=1) == data.labels))


def transformed_accuracy(blocks: ItnBlocks, classifier: Classifier, data: Dataset, k: ControlVector, batch: int) -> float:
    hits = 0
    for start in range(0, len(data), batch):
        chunk = slice(start, start + batch)
        probs = transformed_softmax(blocks, classifier, normalize_pixels(data.pixels[chunk]), k, batch)
        hits += int(np.sum(probs.argmax(axis=1) == data.labels[chunk]))
    return hits / len(data)


def itn_train(
    cfg: ItnConfig,
    model: ModelWeights | Classifier,
    data: Dataset,
    blocks: ItnBlocks | None = None,
) -> ItnTrainResult:
    if len(data) == 0:
        raise UsageError("cannot train the transformer net on an empty dataset")
    classifier = as_classifier(model)
    clean = clean_accuracy(classifier, data)
    acc_orig = cfg.acc_orig if cfg.acc_orig is not None else max(0.0, clean - cfg.acc_margin)
    cfg = dataclasses.replace(cfg, acc_orig=acc_orig)
    if clean < acc_orig:
        raise ConfigurationError(
            f"frozen model reaches {clean:.4f} on clean data, below acc_orig={acc_orig:.4f}; "
            "the displacement branch would never open"
        )
    logger.info("clean accuracy %.4f, acc_orig %.4f, %d steps", clean, acc_orig, cfg.steps)

    rng = np.random.default_rng(cfg.seed)
    if blocks is None:
        blocks = ItnBlocks.initialize(cfg.hidden, cfg.seed, cfg.swap_k, cfg.clamp)
    initial = transformed_accuracy(blocks, classifier, data, ControlVector(), eval_batch_size())
    logger.info("step 0: transformed accuracy %.4f at k=0", initial)
    params = blocks.parameters()
    n = len(data)
    log: list[StepLog] = []
    for step in range(cfg.steps):
        idx = rng.choice(n, size=min(cfg.batch, n), replace=False)
        labels = data.labels[idx]
        k = ControlVector.sample(rng)
        k_color, k_spatial = blocks.controls(k)
        s_color = sample_unit_vectors(4, cfg.s_size, rng)
        s_spatial = sample_unit_vectors(3, cfg.s_size, rng)
        with Tape() as tape:
            out = itn_forward(Tensor(normalize_pixels(data.pixels[idx])), k, blocks, classifier)
            probs = softmax(out.logits)
            loss_orig = cross_entropy(probs, labels)
            loss_color = loss_k(k_color, extend_square(out.color), s_color)
            loss_spatial = loss_k(k_spatial, extend_square(out.spatial), s_spatial)
            batch_acc = float(np.mean(probs.data.argmax(axis=1) == labels))
            final = select_final_loss(batch_acc, cfg, loss_orig, loss_color, loss_spatial)
        backward(tape, final)
        sgd_step(params, cfg.lr)

        entry = StepLog(
            step=step,
            branch=gate(batch_acc, acc_orig),
            loss_orig=loss_orig.item(),
            loss_color=loss_color.item(),
            loss_spatial=loss_spatial.item(),
            batch_acc=batch_acc,
        )
        log.append(entry)
        logger.debug("step %d: %s branch, batch accuracy %.3f", step, entry.branch, batch_acc)
        if (step + 1) % cfg.log_every == 0:
            window = log[-cfg.log_every :]
            logger.info(
                "step %d/%d: loss_orig %.4f, displacement loss %.4f, batch accuracy %.3f, %d%% displacement branch",
                step + 1,
                cfg.steps,
                np.mean([e.loss_orig for e in window]),
                np.mean([e.displacement_loss(cfg.c_theta) for e in window]),
                np.mean([e.batch_acc for e in window]),
                round(100 * np.mean([e.branch is Branch.DISPLACEMENT for e in window])),
            )
    if log and blocks.emits_identity and all(e.branch is Branch.DISPLACEMENT for e in log):
        # the displacement loss has zero gradient at the identity; only L_orig steps can leave it
        logger.warning("every step took the displacement branch and both maps are still the identity")
    return ItnTrainResult(blocks, log, cfg, clean, initial)


def write_step_log(path: str | Path, log: list[StepLog]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LOG_FIELDS)
        for e in log:
            writer.writerow(
                [
                    e.step,
                    str(e.branch),
                    format(e.loss_orig, ".9g"),
                    format(e.loss_color, ".9g"),
                    format(e.loss_spatial, ".9g"),
                    format(e.batch_acc, ".9g"),
                ]
            )


def smoothed_displacement(log: list[StepLog], c_theta: float, fraction: float = 0.1) -> tuple[float, float]:
    """Mean displacement loss over the first and the last `fraction` of steps."""
    if not log:
        raise UsageError("empty training log")
    m = max(1, int(len(log) * fraction))
    values = [e.displacement_loss(c_theta) for e in log]
    return float(np.mean(values[:m])), float(np.mean(values[-m:]))
