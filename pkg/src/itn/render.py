import csv
import logging
from pathlib import Path

import numpy as np

from src.cnn import Classifier, softmax_batches
from src.my_util.errors import ShapeError, UsageError
from src.tensor_core import Tensor, softmax
from src.transforms import Image

from .blocks import ControlVector, ItnBlocks
from .net import itn_forward

logger = logging.getLogger(__name__)

RENDER_FIELDS = ("k1_0", "k1_1", "k2_0", "k2_1", "image", "predicted", "softmax", "clean_predicted")


def render_name(k: ControlVector, idx: int) -> str:
    return f"{k.label}__{idx}.ppm"


def itn_render(
    blocks: ItnBlocks,
    classifier: Classifier,
    images: list[Image],
    k_grid: list[ControlVector],
    out_dir: str | Path,
) -> Path:
    """Write F(k)(image) as PPM for every k and image, plus predictions.csv; returns the CSV path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not images:
        raise UsageError("nothing to render")
    if len({img.pixels.shape for img in images}) > 1:
        raise ShapeError("rendered images must share one size")
    inputs = np.stack([img.to_chw() for img in images])
    clean = softmax_batches(classifier, inputs, len(images)).argmax(axis=1)
    csv_path = out_dir / "predictions.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RENDER_FIELDS)
        for k in k_grid:
            out = itn_forward(Tensor(inputs), k, blocks, classifier)
            warped = out.image.data
            probs = softmax(out.logits).data
            for idx in range(len(images)):
                Image.from_chw(warped[idx]).write_ppm(out_dir / render_name(k, idx))
                pred = int(probs[idx].argmax())
                writer.writerow(
                    [*(format(x, "g") for x in (*k.k1, *k.k2)), idx, pred, format(probs[idx, pred], ".9g"), int(clean[idx])]
                )
            logger.info("rendered %d images at %s", len(images), k.label)
    return csv_path
