"""Control vectors and the FC blocks that turn them into affine maps."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.diff_transformer import MATRIX_SHAPES, AffineMap, MapKind, identity_matrix
from src.my_util import KPair
from src.my_util.errors import DataFormatError, DomainError
from src.my_util.my_io import read_container, write_container
from src.tensor_core import Tensor, add, clip, dense, relu, reshape

logger = logging.getLogger(__name__)

BLOCKS_KIND = "itn_blocks"


@dataclass(frozen=True)
class ControlVector:
    k1: KPair = (0.0, 0.0)
    k2: KPair = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "k1", tuple(float(x) for x in self.k1))
        object.__setattr__(self, "k2", tuple(float(x) for x in self.k2))
        for k in (self.k1, self.k2):
            if len(k) != 2 or not all(0.0 <= x <= 1.0 for x in k):
                raise DomainError(f"control parameters must be pairs in [0,1], got {k}")

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "ControlVector":
        k = rng.uniform(0.0, 1.0, size=4)
        return cls((k[0], k[1]), (k[2], k[3]))

    @property
    def label(self) -> str:
        (a, b), (c, d) = self.k1, self.k2
        return f"k1-{a:g}_{b:g}__k2-{c:g}_{d:g}"


class FcBlock:
    """2 -> hidden (relu) -> 12 or 6, added to the identity map of its kind.

    The output layer starts at zero so a fresh block emits the identity for every k.
    """

    def __init__(self, kind: MapKind, tensors: dict[str, np.ndarray]):
        self.kind = MapKind(kind)
        self.offset = Tensor(identity_matrix(self.kind))
        self.params = {name: Tensor(array, requires_grad=True, name=f"{self.kind}.{name}") for name, array in tensors.items()}

    @classmethod
    def initialize(cls, kind: MapKind, hidden: int, rng: np.random.Generator) -> "FcBlock":
        rows, cols = MATRIX_SHAPES[MapKind(kind)]
        return cls(
            kind,
            {
                "w1": rng.normal(0.0, 1.0, size=(2, hidden)),
                "b1": np.full(hidden, 0.1),
                "w2": np.zeros((hidden, rows * cols)),
                "b2": np.zeros(rows * cols),
            },
        )

    @property
    def hidden(self) -> int:
        return self.params["w1"].shape[1]

    @property
    def emits_identity(self) -> bool:
        """True while the output layer is all zeros."""
        return not (np.any(self.params["w2"].data) or np.any(self.params["b2"].data))

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def __call__(self, k: KPair) -> Tensor:
        h = relu(dense(Tensor(np.asarray(k, dtype=np.float64)[None, :]), self.params["w1"], self.params["b1"]))
        out = dense(h, self.params["w2"], self.params["b2"])
        return add(reshape(out, MATRIX_SHAPES[self.kind]), self.offset)


class ItnBlocks:
    """The colour and spatial blocks. k1 drives colour and k2 drives spatial unless swap_k."""

    def __init__(self, color: FcBlock, spatial: FcBlock, swap_k: bool = False, clamp: float = 10.0):
        self.color = color
        self.spatial = spatial
        self.swap_k = swap_k
        self.clamp = clamp

    @classmethod
    def initialize(cls, hidden: int, seed: int, swap_k: bool = False, clamp: float = 10.0) -> "ItnBlocks":
        rng = np.random.default_rng(seed)
        color = FcBlock.initialize(MapKind.COLOR, hidden, rng)
        spatial = FcBlock.initialize(MapKind.SPATIAL, hidden, rng)
        return cls(color, spatial, swap_k, clamp)

    def parameters(self) -> list[Tensor]:
        return self.color.parameters() + self.spatial.parameters()

    @property
    def emits_identity(self) -> bool:
        return self.color.emits_identity and self.spatial.emits_identity

    def controls(self, k: ControlVector) -> tuple[KPair, KPair]:
        """(k for the colour block, k for the spatial block)."""
        return (k.k2, k.k1) if self.swap_k else (k.k1, k.k2)

    def _clamped(self, matrix: Tensor) -> Tensor:
        if np.any(np.abs(matrix.data) > self.clamp):
            logger.warning("map entries reached %.3g; clamping to ±%g", np.abs(matrix.data).max(), self.clamp)
        return clip(matrix, -self.clamp, self.clamp)

    def maps(self, k: ControlVector) -> tuple[AffineMap, AffineMap]:
        k_color, k_spatial = self.controls(k)
        return (
            AffineMap(MapKind.COLOR, self._clamped(self.color(k_color))),
            AffineMap(MapKind.SPATIAL, self._clamped(self.spatial(k_spatial))),
        )

    def tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for block in (self.color, self.spatial):
            out.update({f"{block.kind}.{name}": p.data.copy() for name, p in block.params.items()})
        return out

    def copy(self) -> "ItnBlocks":
        return blocks_from_tensors(self.tensors(), self.swap_k, self.clamp)


def blocks_from_tensors(tensors: dict[str, np.ndarray], swap_k: bool = False, clamp: float = 10.0) -> ItnBlocks:
    def block(kind: MapKind) -> FcBlock:
        prefix = f"{kind}."
        return FcBlock(kind, {name[len(prefix) :]: a for name, a in tensors.items() if name.startswith(prefix)})

    return ItnBlocks(block(MapKind.COLOR), block(MapKind.SPATIAL), swap_k, clamp)


def save_blocks(blocks: ItnBlocks, path: str | Path) -> None:
    meta = {
        "kind": BLOCKS_KIND,
        "hidden": blocks.color.hidden,
        "swap_k": blocks.swap_k,
        "clamp": blocks.clamp,
    }
    write_container(path, blocks.tensors(), meta=meta)


def load_blocks(path: str | Path) -> ItnBlocks:
    tensors, meta = read_container(path)
    if meta.get("kind") != BLOCKS_KIND:
        raise DataFormatError(f"{path} holds {meta.get('kind')!r}, not {BLOCKS_KIND}")
    hidden = meta["hidden"]
    expected = {}
    for kind, (rows, cols) in MATRIX_SHAPES.items():
        expected |= {
            f"{kind}.w1": (2, hidden),
            f"{kind}.b1": (hidden,),
            f"{kind}.w2": (hidden, rows * cols),
            f"{kind}.b2": (rows * cols,),
        }
    actual = {name: a.shape for name, a in tensors.items()}
    if actual != expected:
        raise DataFormatError(f"{path}: block tensors {actual} do not match hidden={hidden}")
    return blocks_from_tensors(tensors, bool(meta.get("swap_k", False)), float(meta.get("clamp", 10.0)))
