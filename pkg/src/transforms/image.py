"""Byte-domain colour raster: H×W×3 floats in [0,255]."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.my_util import my_io
from src.my_util.errors import DomainError, ShapeError


@dataclass
class Image:
    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ShapeError(f"image must be H×W×3, got {self.pixels.shape}")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ShapeError(f"image needs W,H >= 1, got {self.pixels.shape}")
        if not np.all((self.pixels >= 0.0) & (self.pixels <= 255.0)):
            raise DomainError("image values must lie in [0,255]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @classmethod
    def clamped(cls, pixels: np.ndarray) -> "Image":
        return cls(np.clip(pixels, 0.0, 255.0))

    @classmethod
    def from_chw(cls, array: np.ndarray, scale: float = 255.0) -> "Image":
        """3×H×W array (values in [0, 255/scale]) -> clamped Image."""
        return cls.clamped(np.transpose(np.asarray(array, dtype=np.float64), (1, 2, 0)) * scale)

    def to_chw(self, scale: float = 1.0 / 255.0) -> np.ndarray:
        return np.ascontiguousarray(np.transpose(self.pixels, (2, 0, 1)) * scale)

    def copy(self) -> "Image":
        return Image(self.pixels.copy())

    @classmethod
    def read_ppm(cls, path: str | Path) -> "Image":
        return cls(my_io.read_ppm(path))

    def write_ppm(self, path: str | Path) -> None:
        my_io.write_ppm(path, self.pixels)
