"""Pixel container, luminance projection, and basic image arithmetic.

Images are (height, width, channels) float64 arrays in nominal range
[0, 1], stored C-contiguous (row-major, channel-interleaved) and marked
read-only, so values can be shared freely across threads. All operations
here are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class LuminanceWeights:
    """Grayscale projection coefficients for (R, G, B).

    Defaults are the ITU-R BT.601 luma weights. Note they sum to 0.9999,
    not 1; the projection is used unnormalized.
    """

    r: float = 0.2989
    g: float = 0.5870
    b: float = 0.1140

    def __post_init__(self):
        if self.r < 0 or self.g < 0 or self.b < 0:
            raise InvalidInputError("luminance weights must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.g, self.b])


DEFAULT_WEIGHTS = LuminanceWeights()


@dataclass(frozen=True)
class Image:
    """An (H, W, C) float64 pixel tensor with C in {1, 3}, all values finite."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C")  # private copy
        if arr.ndim != 3:
            raise InvalidInputError(f"image data must be (H, W, C), got shape {arr.shape}")
        h, w, c = arr.shape
        if h < 1 or w < 1 or c not in (1, 3):
            raise InvalidInputError(f"bad image shape {arr.shape}: need H, W >= 1 and C in {{1, 3}}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("image data contains NaN or Inf")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def __add__(self, other: "Image") -> "Image":
        require_same_shape(self, other, "add")
        return Image(self.data + other.data)

    def __sub__(self, other: "Image") -> "Image":
        require_same_shape(self, other, "subtract")
        return Image(self.data - other.data)

    def __mul__(self, scalar: float) -> "Image":
        return Image(self.data * float(scalar))

    __rmul__ = __mul__


def require_same_shape(a: Image, b: Image, op: str) -> None:
    if a.shape != b.shape:
        raise InvalidInputError(f"cannot {op} images of shapes {a.shape} and {b.shape}")


def to_grayscale(img: Image, weights: LuminanceWeights = DEFAULT_WEIGHTS) -> Image:
    """Project an RGB image onto its luminance channel.

    out[y, x] = w_r*R + w_g*G + w_b*B. The result is not renormalized: the
    default weights sum to 0.9999, so [0, 1] inputs map into [0, 0.9999].
    """
    if img.channels != 3:
        raise InvalidInputError(f"to_grayscale needs a 3-channel image, got {img.channels} channels")
    g = img.data @ weights.as_array()
    return Image(g[:, :, None])


def grayscale_backward(grad_out: Image, weights: LuminanceWeights = DEFAULT_WEIGHTS) -> Image:
    """Adjoint of :func:`to_grayscale`.

    Spreads a single-channel gradient back across RGB: channel c of the
    result is grad * w_c at every pixel.
    """
    if grad_out.channels != 1:
        raise InvalidInputError(f"grayscale_backward needs a 1-channel image, got {grad_out.channels} channels")
    g = grad_out.data[:, :, 0]
    return Image(g[:, :, None] * weights.as_array()[None, None, :])


def clamp01(img: Image) -> Image:
    """Clip every element into [0, 1]."""
    return Image(np.clip(img.data, 0.0, 1.0))
