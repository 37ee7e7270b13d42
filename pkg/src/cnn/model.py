"""The small frozen classifier: conv-relu-pool ×2 -> dense -> softmax on 3×32×32 inputs."""

from dataclasses import asdict, dataclass, field
from typing import Protocol

import numpy as np

from src.my_util.config import load_defaults_toml
from src.my_util.errors import ShapeError
from src.tensor_core import Tensor, conv2d, dense, maxpool2d, relu, reshape, softmax


@dataclass(frozen=True)
class ModelConfig:
    input_shape: tuple[int, int, int] = (3, 32, 32)
    conv_channels: tuple[int, ...] = (8, 16)
    kernel_size: int = 3
    pool: int = 2
    n_classes: int = 10
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        object.__setattr__(self, "conv_channels", tuple(self.conv_channels))
        self.layer_shapes()

    def layer_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Output shape after every layer; raises ShapeError if the chain does not close."""
        if self.kernel_size % 2 == 0:
            raise ShapeError(f"kernel size must be odd, got {self.kernel_size}")
        c, h, w = self.input_shape
        shapes = [("input", (c, h, w))]
        for i, out_c in enumerate(self.conv_channels, start=1):
            shapes.append((f"conv{i}", (out_c, h, w)))
            shapes.append((f"relu{i}", (out_c, h, w)))
            if h % self.pool or w % self.pool:
                raise ShapeError(f"pool {self.pool} does not divide {h}×{w} after conv{i}")
            h, w = h // self.pool, w // self.pool
            shapes.append((f"pool{i}", (out_c, h, w)))
            c = out_c
        shapes.append(("flatten", (c * h * w,)))
        shapes.append(("dense", (self.n_classes,)))
        shapes.append(("softmax", (self.n_classes,)))
        return shapes

    @property
    def dense_inputs(self) -> int:
        return dict(self.layer_shapes())["flatten"][0]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)

    @classmethod
    def from_defaults(cls, **overrides) -> "ModelConfig":
        values = dict(load_defaults_toml("cnn")["model"])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def tensor_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    shapes = {}
    in_c = config.input_shape[0]
    k = config.kernel_size
    for i, out_c in enumerate(config.conv_channels, start=1):
        shapes[f"conv{i}.weight"] = (out_c, in_c, k, k)
        shapes[f"conv{i}.bias"] = (out_c,)
        in_c = out_c
    shapes["dense.weight"] = (config.dense_inputs, config.n_classes)
    shapes["dense.bias"] = (config.n_classes,)
    return shapes


@dataclass
class ModelWeights:
    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        expected = tensor_shapes(self.config)
        if set(expected) != set(self.tensors):
            raise ShapeError(f"weights {sorted(self.tensors)} do not match config tensors {sorted(expected)}")
        for name, shape in expected.items():
            if tuple(self.tensors[name].shape) != shape:
                raise ShapeError(f"{name}: expected {shape}, got {self.tensors[name].shape}")

    @classmethod
    def initialize(cls, config: ModelConfig) -> "ModelWeights":
        """He-normal weights and zero biases from the config seed."""
        rng = np.random.default_rng(config.seed)
        tensors = {}
        for name, shape in tensor_shapes(config).items():
            if name.endswith(".bias"):
                tensors[name] = np.zeros(shape)
            else:
                fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
                tensors[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
        return cls(config, tensors)

    def copy(self) -> "ModelWeights":
        return ModelWeights(self.config, {k: v.copy() for k, v in self.tensors.items()})


class Classifier(Protocol):
    n_classes: int

    def logits(self, x: Tensor) -> Tensor:
        """x: N×3×H×W in [0,1] -> N×n_classes."""
        ...


class ToyCnn:
    def __init__(self, weights: ModelWeights, trainable: bool = False):
        self.config = weights.config
        self.n_classes = weights.config.n_classes
        self.params = {
            name: Tensor(array, requires_grad=trainable, name=name) for name, array in weights.tensors.items()
        }

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def logits(self, x: Tensor) -> Tensor:
        if x.ndim == 3:
            x = reshape(x, (1, *x.shape))
        pad = self.config.kernel_size // 2
        for i, out_c in enumerate(self.config.conv_channels, start=1):
            x = conv2d(x, self.params[f"conv{i}.weight"], stride=1, padding=pad)
            x = relu(x + reshape(self.params[f"conv{i}.bias"], (out_c, 1, 1)))
            x = maxpool2d(x, self.config.pool)
        x = reshape(x, (x.shape[0], -1))
        return dense(x, self.params["dense.weight"], self.params["dense.bias"])

    def to_weights(self) -> ModelWeights:
        return ModelWeights(self.config, {name: p.data.copy() for name, p in self.params.items()})


class LinearClassifier:
    """Frozen logits = flatten(x)·W + b; the smallest stand-in for a CNN."""

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        self.weight = Tensor(weight)
        self.bias = Tensor(bias)
        self.n_classes = self.weight.shape[1]

    def logits(self, x: Tensor) -> Tensor:
        if x.ndim == 3:
            x = reshape(x, (1, *x.shape))
        return dense(reshape(x, (x.shape[0], -1)), self.weight, self.bias)


def normalize_pixels(pixels: np.ndarray) -> np.ndarray:
    """N×H×W×3 values in [0,255] -> N×3×H×W in [0,1]; the model's input boundary."""
    return np.ascontiguousarray(np.transpose(np.asarray(pixels, dtype=np.float64), (0, 3, 1, 2)) / 255.0)


def softmax_batches(classifier: Classifier, inputs: np.ndarray, batch: int) -> np.ndarray:
    """Softmax rows for normalized N×3×H×W inputs, evaluated in fixed-size chunks."""
    rows = [
        softmax(classifier.logits(Tensor(inputs[start : start + batch]))).data
        for start in range(0, inputs.shape[0], batch)
    ]
    return np.concatenate(rows, axis=0) if rows else np.zeros((0, classifier.n_classes))
