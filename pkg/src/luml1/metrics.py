"""Evaluation-only quality metrics: MSE, PSNR, and windowed SSIM.

These are metrics, not losses: none of them provide gradients. SSIM uses
Gaussian-weighted local statistics over every fully-contained window (no
padding) and averages the per-window scores; 3-channel inputs are first
projected to luminance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidInputError
from .image import Image, require_same_shape, to_grayscale


@dataclass(frozen=True)
class SsimParams:
    """Window shape and stabilization constants for SSIM."""

    window_size: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise InvalidInputError(f"window_size must be odd and >= 3, got {self.window_size}")
        if self.gaussian_sigma <= 0:
            raise InvalidInputError("gaussian_sigma must be positive")
        if self.c1 <= 0 or self.c2 <= 0:
            raise InvalidInputError("stabilization constants C1, C2 must be strictly positive")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


def mse(a: Image, b: Image) -> float:
    """Mean squared error over all elements."""
    require_same_shape(a, b, "compare")
    return float(np.mean((a.data - b.data) ** 2))


def psnr(a: Image, b: Image, max_val: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB: 10*log10(max_val^2 / mse).

    Identical images return positive infinity rather than raising, so
    callers can rank perfect reconstructions.
    """
    m = mse(a, b)
    if m == 0.0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / m)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a: Image, b: Image, params: SsimParams = SsimParams()) -> float:
    """Structural similarity index, averaged over all valid window centers.

    Local means, variances, and covariance are Gaussian-weighted. Only
    windows fully inside the image contribute (valid region, no padding).
    """
    require_same_shape(a, b, "compare")
    if a.channels == 3:
        a = to_grayscale(a)
        b = to_grayscale(b)
    x = a.data[:, :, 0]
    y = b.data[:, :, 0]
    n = params.window_size
    if x.shape[0] < n or x.shape[1] < n:
        raise InvalidInputError(f"image {x.shape} smaller than the {n}x{n} SSIM window")
    win = _gaussian_window(n, params.gaussian_sigma)

    def local_mean(img2d):
        return np.tensordot(sliding_window_view(img2d, (n, n)), win, axes=2)

    mu_x = local_mean(x)
    mu_y = local_mean(y)
    e_xx = local_mean(x * x)
    e_yy = local_mean(y * y)
    e_xy = local_mean(x * y)
    var_x = e_xx - mu_x * mu_x
    var_y = e_yy - mu_y * mu_y
    cov = e_xy - mu_x * mu_y
    c1, c2 = params.c1, params.c2
    score = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(np.mean(score))
