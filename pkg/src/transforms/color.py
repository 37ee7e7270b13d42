import numpy as np

from src.my_util.errors import UsageError
from src.transforms.image import Image
from src.transforms.kinds import TransformKind

# Rec. 601 luma
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def grayscale(img: Image) -> np.ndarray:
    """Luminance replicated into all three channels."""
    luma = img.pixels @ LUMA_WEIGHTS
    return np.repeat(luma[:, :, None], 3, axis=2)


def apply_color(kind: TransformKind, img: Image, v: float) -> Image:
    with np.errstate(over="ignore", invalid="ignore"):
        match kind:
            case TransformKind.BRIGHTNESS:
                out = img.pixels + 255.0 * v
            case TransformKind.CONTRAST:
                out = v * img.pixels
            case TransformKind.GRAYSCALE:
                # (1-v)I + v*I_gray: the v-weighted linear transition
                gray = grayscale(img)
                out = (1.0 - v) * img.pixels + v * gray
                # for huge |v| both terms overflow; I + v(I_gray - I) keeps the sign of the limit
                out = np.where(np.isfinite(out), out, img.pixels + v * (gray - img.pixels))
            case _:
                raise UsageError(f"{kind} is not a colour transform")
    return Image.clamped(out)
