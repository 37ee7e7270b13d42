from enum import StrEnum

from src.my_util.errors import UsageError


class TransformKind(StrEnum):
    TRANSLATE_X = "translate_x"
    TRANSLATE_Y = "translate_y"
    TRANSLATE_XY = "translate_xy"
    ROTATE = "rotate"
    SCALE_X = "scale_x"
    SCALE_Y = "scale_y"
    ZOOM = "zoom"
    BRIGHTNESS = "brightness"
    CONTRAST = "contrast"
    GRAYSCALE = "grayscale"
    GAUSSIAN_BLUR = "gaussian_blur"
    GAUSSIAN_NOISE = "gaussian_noise"

    @property
    def identity(self) -> float:
        """Magnitude at which the transform leaves the image unchanged."""
        return 1.0 if self in (TransformKind.SCALE_X, TransformKind.SCALE_Y, TransformKind.ZOOM, TransformKind.CONTRAST) else 0.0

    @property
    def is_spatial(self) -> bool:
        return self in SPATIAL_KINDS

    @property
    def is_color(self) -> bool:
        return self in COLOR_KINDS

    @property
    def unit(self) -> str:
        return UNITS[self]

    @classmethod
    def parse(cls, name: str) -> "TransformKind":
        """Accepts `rotate`, `Rotate`, `GaussianNoise`, `gaussian-noise`, ..."""
        key = "".join(ch for ch in name.lower() if ch.isalnum())
        for kind in cls:
            if kind.value.replace("_", "") == key:
                return kind
        raise UsageError(f"unknown transform kind {name!r}; choose from {', '.join(k.value for k in cls)}")


SPATIAL_KINDS = frozenset(
    {
        TransformKind.TRANSLATE_X,
        TransformKind.TRANSLATE_Y,
        TransformKind.TRANSLATE_XY,
        TransformKind.ROTATE,
        TransformKind.SCALE_X,
        TransformKind.SCALE_Y,
        TransformKind.ZOOM,
    }
)
COLOR_KINDS = frozenset({TransformKind.BRIGHTNESS, TransformKind.CONTRAST, TransformKind.GRAYSCALE})

UNITS = {
    TransformKind.TRANSLATE_X: "fraction of width",
    TransformKind.TRANSLATE_Y: "fraction of height",
    TransformKind.TRANSLATE_XY: "fraction of extent",
    TransformKind.ROTATE: "degrees",
    TransformKind.SCALE_X: "scale factor",
    TransformKind.SCALE_Y: "scale factor",
    TransformKind.ZOOM: "scale factor",
    TransformKind.BRIGHTNESS: "additive fraction of 255",
    TransformKind.CONTRAST: "multiplier",
    TransformKind.GRAYSCALE: "mix fraction",
    TransformKind.GAUSSIAN_BLUR: "sigma (pixels)",
    TransformKind.GAUSSIAN_NOISE: "sigma (fraction of 255)",
}
