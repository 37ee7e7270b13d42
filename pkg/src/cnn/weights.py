from pathlib import Path

from src.my_util.errors import DataFormatError, ShapeError
from src.my_util.my_io import read_container, write_container

from .model import ModelConfig, ModelWeights

WEIGHTS_KIND = "toy_cnn"


def save_weights(w: ModelWeights, path: str | Path) -> None:
    write_container(path, w.tensors, meta={"kind": WEIGHTS_KIND, "config": w.config.to_dict()})


def load_weights(path: str | Path) -> ModelWeights:
    tensors, meta = read_container(path)
    if meta.get("kind") != WEIGHTS_KIND:
        raise DataFormatError(f"{path} holds {meta.get('kind')!r}, not {WEIGHTS_KIND} weights")
    try:
        return ModelWeights(ModelConfig.from_dict(meta["config"]), tensors)
    except (ShapeError, TypeError, KeyError) as e:
        raise DataFormatError(f"{path}: {e}") from e
