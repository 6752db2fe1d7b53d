"""Synthetic clean images and seeded Gaussian noise for blind denoising.

Clean images are procedurally generated (smooth gradients, alpha-blended
rectangles, low-frequency sinusoid texture) so benchmarks need no external
data. Noise levels are expressed as standard deviations on the 0-255
intensity scale and divided by 255 internally.

Blindness: the training batch stream draws a per-patch noise level
uniformly from [0, sigma_max] but never exposes it -- consumers only see
(noisy, clean) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidInputError
from .image import Image
from .rng import DOMAIN_BATCH, DOMAIN_CLEAN, DOMAIN_NOISE, normal, stream


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise: std dev on the 0-255 scale, plus a seed."""

    sigma_255: float
    seed: int

    def __post_init__(self):
        if not (self.sigma_255 >= 0.0):
            raise InvalidInputError(f"noise sigma must be nonnegative, got {self.sigma_255}")

    @property
    def sigma(self) -> float:
        """Std dev in the float [0, 1] pixel domain."""
        return self.sigma_255 / 255.0


@dataclass(frozen=True)
class BlindTrainSpec:
    """Patch stream configuration for blind training.

    Each emitted patch carries noise with a std dev drawn uniformly from
    [0, sigma_max_255]; the draw is internal and never exposed.
    """

    sigma_max_255: float
    patch_size: int
    count: int
    seed: int

    def __post_init__(self):
        if not (self.sigma_max_255 >= 0.0):
            raise InvalidInputError(f"sigma_max must be nonnegative, got {self.sigma_max_255}")
        if self.patch_size < 1:
            raise InvalidInputError(f"patch_size must be positive, got {self.patch_size}")
        if self.count < 0:
            raise InvalidInputError(f"count must be nonnegative, got {self.count}")


def gen_clean(seed: int, count: int, h: int, w: int) -> list[Image]:
    """Generate ``count`` deterministic 3-channel clean images in [0, 1].

    Image i is drawn from its own sub-stream (seed, i), so the corpus is
    reproducible and generation could be partitioned across workers without
    sharing a stream.
    """
    if count < 0:
        raise InvalidInputError(f"count must be nonnegative, got {count}")
    if count > 0 and (h < 16 or w < 16):
        raise InvalidInputError(f"clean images must be at least 16x16, got {h}x{w}")
    return [_gen_one(stream(seed, DOMAIN_CLEAN, i), h, w) for i in range(count)]


def _gen_one(rng: np.random.Generator, h: int, w: int) -> Image:
    yy = np.linspace(0.0, 1.0, h)[:, None]
    xx = np.linspace(0.0, 1.0, w)[None, :]
    img = np.empty((h, w, 3))
    # Linear ramps with slope magnitude >= 0.2 per axis: even before any
    # detail is added, per-channel variance stays well above degenerate-flat.
    for c in range(3):
        level = rng.uniform(0.3, 0.7)
        sy = rng.uniform(0.2, 0.5) * (1.0 if rng.random() < 0.5 else -1.0)
        sx = rng.uniform(0.2, 0.5) * (1.0 if rng.random() < 0.5 else -1.0)
        img[:, :, c] = level + sy * (yy - 0.5) + sx * (xx - 0.5)
    for _ in range(int(rng.integers(4, 9))):
        ry = int(rng.integers(0, h - 3))
        rx = int(rng.integers(0, w - 3))
        rh = int(rng.integers(2, max(3, h // 2)))
        rw = int(rng.integers(2, max(3, w // 2)))
        color = rng.uniform(0.0, 1.0, size=3)
        alpha = rng.uniform(0.4, 0.9)
        region = img[ry : ry + rh, rx : rx + rw]
        region[:] = (1.0 - alpha) * region + alpha * color
    # band-limited texture: a few low-frequency oriented sinusoids
    for _ in range(3):
        amp = rng.uniform(0.02, 0.06)
        freq = rng.uniform(1.5, 4.0)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        wave = amp * np.sin(2.0 * np.pi * freq * (np.cos(theta) * xx + np.sin(theta) * yy) + phase)
        img += wave[:, :, None] * rng.uniform(0.5, 1.0, size=3)[None, None, :]
    return Image(np.clip(img, 0.0, 1.0))


def add_noise(img: Image, spec: NoiseSpec) -> Image:
    """Add i.i.d. Gaussian noise. The result is intentionally not clamped."""
    if spec.sigma_255 == 0.0:
        return img
    g = normal(stream(spec.seed, DOMAIN_NOISE), img.shape, spec.sigma)
    return Image(img.data + g)


def _draw_patch_params(
    rng: np.random.Generator,
    dims: list[tuple[int, int]],
    patch: int,
    sigma_max: float,
) -> tuple[int, int, int, float]:
    """One (image index, y0, x0, sigma_255) draw of the blind patch stream."""
    idx = int(rng.integers(0, len(dims)))
    h, w = dims[idx]
    y0 = int(rng.integers(0, h - patch + 1))
    x0 = int(rng.integers(0, w - patch + 1))
    sigma = float(rng.uniform(0.0, sigma_max))
    return idx, y0, x0, sigma


def make_blind_batches(clean: list[Image], spec: BlindTrainSpec) -> Iterator[tuple[Image, Image]]:
    """Yield ``spec.count`` (noisy_patch, clean_patch) pairs.

    Crops and noise levels come from a single stream keyed by ``spec.seed``,
    so the full sequence is reproducible. The per-patch noise level is not
    part of the yielded values.
    """
    if not clean:
        raise InvalidInputError("need at least one clean image")
    dims = [(im.height, im.width) for im in clean]
    if any(spec.patch_size > min(h, w) for h, w in dims):
        raise InvalidInputError(
            f"patch_size {spec.patch_size} exceeds the smallest image dimension"
        )
    rng = stream(spec.seed, DOMAIN_BATCH)
    p = spec.patch_size
    for _ in range(spec.count):
        idx, y0, x0, sigma = _draw_patch_params(rng, dims, p, spec.sigma_max_255)
        patch = clean[idx].data[y0 : y0 + p, x0 : x0 + p]
        noise = normal(rng, patch.shape, sigma / 255.0)
        yield Image(patch + noise), Image(patch)
